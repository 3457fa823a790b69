#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>

#include "spellattack/rng.hpp"
#include "spellattack/signal.hpp"

namespace testing {

using spellattack::Index;
using spellattack::MatrixXd;
using spellattack::Rng;

inline MatrixXd random_matrix(Index rows, Index cols, Rng& rng) {
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline MatrixXd random_spd(Index d, Rng& rng) {
    const MatrixXd a = random_matrix(d, d + 2, rng);
    return a * a.transpose() / static_cast<double>(d + 2) + 0.1 * MatrixXd::Identity(d, d);
}

inline double rel_error(const MatrixXd& a, const MatrixXd& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

/// Central-difference gradient of f at x, one coordinate at a time.
inline MatrixXd fd_gradient(const std::function<double(const MatrixXd&)>& f, const MatrixXd& x, double h) {
    MatrixXd g(x.rows(), x.cols());
    MatrixXd xp = x;
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            xp(i, j) = v + h;
            const double fp = f(xp);
            xp(i, j) = v - h;
            const double fm = f(xp);
            xp(i, j) = v;
            g(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return g;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("spellattack_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing
