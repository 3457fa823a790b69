#include "spellattack/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"

namespace spellattack::riemann {

namespace {

template <typename F>
MatrixXd sym_apply(const MatrixXd& m, F&& f) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
    VectorXd vals = eig.eigenvalues().unaryExpr([&](double v) { return f(std::max(v, kEigenFloor)); });
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

// First divided difference of log at (a, b).
double log_divided_difference(double a, double b) {
    const double diff = a - b;
    if (std::abs(diff) > 1e-8 * b) return std::log1p(diff / b) / diff;
    const double u = diff / b;
    return (1.0 - u / 2.0 + u * u / 3.0) / b;
}

}  // namespace

XdawnAccumulator::XdawnAccumulator(Index n_channels, Index n_samples)
    : sum_{MatrixXd::Zero(n_channels, n_samples), MatrixXd::Zero(n_channels, n_samples)},
      scatter_(MatrixXd::Zero(n_channels, n_channels)) {}

void XdawnAccumulator::add(const MatrixXd& epoch, int label) {
    if (epoch.rows() != sum_[0].rows() || epoch.cols() != sum_[0].cols()) {
        throw ParameterError("xdawn epochs must share one shape");
    }
    if (label != 0 && label != 1) throw ParameterError("labels must be 0 or 1");
    const MatrixXd x = dsp::center_rows(epoch);
    sum_[label] += x;
    ++count_[label];
    scatter_.noalias() += x * x.transpose();
}

XdawnFilters XdawnAccumulator::finish(Index n_filters) const {
    const Index n_ch = scatter_.rows();
    if (n_filters < 1 || n_filters > n_ch) {
        throw ParameterError("xdawn filters per class must be in [1, n_channels]");
    }
    if (count_[0] == 0 || count_[1] == 0) throw ParameterError("xdawn needs epochs of both classes");
    MatrixXd total = scatter_;
    total.diagonal().array() += kCovarianceLoading * total.trace() / static_cast<double>(n_ch);

    XdawnFilters out;
    out.n_filters = n_filters;
    out.U.resize(2 * n_filters, n_ch);
    out.Z.resize(2 * n_filters, sum_[0].cols());
    out.eigenvalues.resize(2 * n_filters);
    for (int c = 0; c < 2; ++c) {
        const MatrixXd mean = sum_[c] / static_cast<double>(count_[c]);
        Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(mean * mean.transpose(), total);
        if (ges.info() != Eigen::Success) throw NumericalError("xdawn generalised eigenproblem failed");
        for (Index k = 0; k < n_filters; ++k) {
            const Index col = n_ch - 1 - k;  // eigenvalues ascending
            VectorXd v = ges.eigenvectors().col(col).normalized();
            Index arg = 0;
            v.cwiseAbs().maxCoeff(&arg);
            if (v(arg) < 0) v = -v;
            out.U.row(c * n_filters + k) = v.transpose();
            // Raw ratio is at most 1/count; rescale into [0, 1].
            out.eigenvalues(c * n_filters + k) = ges.eigenvalues()(col) * static_cast<double>(count_[c]);
        }
        out.Z.middleRows(c * n_filters, n_filters) = out.U.middleRows(c * n_filters, n_filters) * mean;
    }
    return out;
}

XdawnFilters xdawn_fit(std::span<const MatrixXd> epochs, std::span<const int> labels, Index n_filters) {
    if (epochs.empty() || epochs.size() != labels.size()) {
        throw ParameterError("xdawn_fit needs one label per epoch and at least one epoch");
    }
    XdawnAccumulator acc(epochs[0].rows(), epochs[0].cols());
    for (std::size_t i = 0; i < epochs.size(); ++i) acc.add(epochs[i], labels[i]);
    return acc.finish(n_filters);
}

SpdMatrix::SpdMatrix(MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() < 1 || m_.rows() != m_.cols()) throw ParameterError("SPD matrix must be square and nonempty");
    if (!m_.allFinite()) throw ParameterError("SPD matrix has non-finite entries");
    const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
    if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw ParameterError("matrix is not symmetric");
    }
    m_ = 0.5 * (m_ + m_.transpose());
    Eigen::LLT<MatrixXd> llt(m_);
    if (llt.info() != Eigen::Success) throw ParameterError("matrix is not positive definite");
}

MatrixXd sym_log(const MatrixXd& m) { return sym_apply(m, [](double v) { return std::log(v); }); }
MatrixXd sym_exp(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
    return eig.eigenvectors() * eig.eigenvalues().array().exp().matrix().asDiagonal() *
           eig.eigenvectors().transpose();
}
MatrixXd sym_sqrt(const MatrixXd& m) { return sym_apply(m, [](double v) { return std::sqrt(v); }); }
MatrixXd sym_invsqrt(const MatrixXd& m) { return sym_apply(m, [](double v) { return 1.0 / std::sqrt(v); }); }

double airm_distance(const SpdMatrix& a, const SpdMatrix& b) {
    if (a.dim() != b.dim()) throw ParameterError("dimension mismatch");
    const MatrixXd r = sym_invsqrt(a.matrix());
    return sym_log(r * b.matrix() * r).norm();
}

MatrixXd augmented_blocks(const MatrixXd& epoch, const XdawnFilters& filters) {
    if (epoch.cols() != filters.n_samples() || epoch.rows() != filters.n_channels()) {
        throw ParameterError("epoch shape does not match the xdawn reference (" + std::to_string(epoch.rows()) +
                             "x" + std::to_string(epoch.cols()) + " vs " + std::to_string(filters.n_channels()) +
                             "x" + std::to_string(filters.n_samples()) + ")");
    }
    const MatrixXd xf = filters.U * dsp::center_rows(epoch);
    const Index k = filters.Z.rows();
    MatrixXd c(2 * k, 2 * k);
    c.topLeftCorner(k, k).noalias() = filters.Z * filters.Z.transpose();
    c.topRightCorner(k, k).noalias() = filters.Z * xf.transpose();
    c.bottomLeftCorner(k, k) = c.topRightCorner(k, k).transpose();
    c.bottomRightCorner(k, k).noalias() = xf * xf.transpose();
    return c;
}

SpdMatrix augmented_covariance(const MatrixXd& epoch, const XdawnFilters& filters) {
    MatrixXd c = augmented_blocks(epoch, filters);
    c.diagonal().array() += kCovarianceLoading * c.trace() / static_cast<double>(c.rows());
    return SpdMatrix(std::move(c));
}

double geometric_mean_residual(std::span<const SpdMatrix> mats, const SpdMatrix& mean) {
    const MatrixXd r = sym_invsqrt(mean.matrix());
    MatrixXd t = MatrixXd::Zero(mean.dim(), mean.dim());
    for (const auto& m : mats) t += sym_log(r * m.matrix() * r);
    return (t / static_cast<double>(mats.size())).norm();
}

SpdMatrix spd_geometric_mean(std::span<const SpdMatrix> mats, double tol, int max_iter) {
    if (mats.empty()) throw ParameterError("geometric mean of an empty set");
    const Index d = mats[0].dim();
    MatrixXd c = MatrixXd::Zero(d, d);
    for (const auto& m : mats) {
        if (m.dim() != d) throw ParameterError("geometric mean inputs differ in dimension");
        c += m.matrix();
    }
    c /= static_cast<double>(mats.size());

    for (int it = 0; it < max_iter; ++it) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(c);
        const VectorXd vals = eig.eigenvalues().cwiseMax(kEigenFloor);
        const MatrixXd& v = eig.eigenvectors();
        const MatrixXd sq = v * vals.cwiseSqrt().asDiagonal() * v.transpose();
        const MatrixXd isq = v * vals.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
        MatrixXd t = MatrixXd::Zero(d, d);
        for (const auto& m : mats) t += sym_log(isq * m.matrix() * isq);
        t /= static_cast<double>(mats.size());
        if (t.norm() <= tol) return SpdMatrix(c);
        c = sq * sym_exp(t) * sq;
        c = 0.5 * (c + c.transpose());
    }
    throw ConvergenceError("geometric mean did not converge in " + std::to_string(max_iter) + " iterations");
}

VectorXd tangent_project(const MatrixXd& c, const MatrixXd& ref_invsqrt) {
    const MatrixXd l = sym_log(ref_invsqrt * c * ref_invsqrt);
    const Index d = l.rows();
    VectorXd s(d * (d + 1) / 2);
    Index k = 0;
    for (Index i = 0; i < d; ++i) {
        s(k++) = l(i, i);
        for (Index j = i + 1; j < d; ++j) s(k++) = std::numbers::sqrt2 * l(i, j);
    }
    return s;
}

VectorXd tangent_project(const SpdMatrix& c, const SpdMatrix& ref) {
    if (c.dim() != ref.dim()) throw ParameterError("dimension mismatch");
    return tangent_project(c.matrix(), sym_invsqrt(ref.matrix()));
}

MatrixXd unvectorize_adjoint(const VectorXd& w, Index d) {
    if (w.size() != d * (d + 1) / 2) throw ParameterError("vector length is not d(d+1)/2");
    MatrixXd s(d, d);
    Index k = 0;
    for (Index i = 0; i < d; ++i) {
        s(i, i) = w(k++);
        for (Index j = i + 1; j < d; ++j) {
            s(i, j) = s(j, i) = w(k++) * std::numbers::sqrt2 / 2.0;
        }
    }
    return s;
}

SpdMatrix tangent_unproject(const VectorXd& s, const SpdMatrix& ref) {
    const Index d = ref.dim();
    if (s.size() != d * (d + 1) / 2) throw ParameterError("tangent vector length does not match reference");
    MatrixXd l(d, d);
    Index k = 0;
    for (Index i = 0; i < d; ++i) {
        l(i, i) = s(k++);
        for (Index j = i + 1; j < d; ++j) l(i, j) = l(j, i) = s(k++) / std::numbers::sqrt2;
    }
    const MatrixXd sq = sym_sqrt(ref.matrix());
    MatrixXd c = sq * sym_exp(l) * sq;
    return SpdMatrix(0.5 * (c + c.transpose()));
}

MatrixXd log_frechet_adjoint(const Eigen::SelfAdjointEigenSolver<MatrixXd>& eig, const MatrixXd& upstream) {
    const MatrixXd& v = eig.eigenvectors();
    const VectorXd lam = eig.eigenvalues().cwiseMax(kEigenFloor);
    MatrixXd g = v.transpose() * upstream * v;
    for (Index i = 0; i < g.rows(); ++i) {
        for (Index j = 0; j < g.cols(); ++j) g(i, j) *= log_divided_difference(lam(i), lam(j));
    }
    return v * g * v.transpose();
}

ClassWeights inverse_frequency_weights(std::span<const int> labels) {
    double n[2] = {0, 0};
    for (int y : labels) {
        if (y != 0 && y != 1) throw ParameterError("labels must be 0 or 1");
        n[y] += 1;
    }
    if (n[0] == 0 || n[1] == 0) throw ParameterError("both classes are required");
    const double total = n[0] + n[1];
    return {total / (2.0 * n[0]), total / (2.0 * n[1])};
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double logreg_logit(const LogisticModel& model, const VectorXd& x) {
    if (x.size() != model.weights.size()) throw ParameterError("feature length does not match the model");
    return model.weights.dot(x) + model.bias;
}

double logreg_prob(const LogisticModel& model, const VectorXd& x) { return sigmoid(logreg_logit(model, x)); }

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double objective(const VectorXd& w, double b, const MatrixXd& x, std::span<const int> labels,
                 const VectorXd& sample_w, double l2) {
    const VectorXd z = (x * w).array() + b;
    double f = 0.5 * l2 * w.squaredNorm();
    for (Index i = 0; i < z.size(); ++i) {
        f += sample_w(i) * (labels[i] == 1 ? softplus(-z(i)) : softplus(z(i)));
    }
    return f;
}

}  // namespace

VectorXd logreg_objective_gradient(const LogisticModel& model, const MatrixXd& features,
                                   std::span<const int> labels, double l2) {
    const Index n = features.rows();
    VectorXd r(n);
    for (Index i = 0; i < n; ++i) {
        const double cw = labels[i] == 1 ? model.class_weights.target : model.class_weights.nontarget;
        r(i) = cw * (sigmoid(features.row(i).dot(model.weights) + model.bias) - labels[i]);
    }
    VectorXd g(features.cols() + 1);
    g.head(features.cols()) = features.transpose() * r + l2 * model.weights;
    g(features.cols()) = r.sum();
    return g;
}

LogisticModel logreg_fit(const MatrixXd& features, std::span<const int> labels, ClassWeights weights,
                         const LogregOptions& options) {
    const Index n = features.rows();
    const Index d = features.cols();
    if (static_cast<Index>(labels.size()) != n || n == 0) throw ParameterError("one label per feature row required");
    Index n1 = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw ParameterError("labels must be 0 or 1");
        n1 += y;
    }
    if (n1 == 0 || n1 == n) throw ParameterError("logistic regression needs both classes");
    if (!features.allFinite()) throw ParameterError("features contain non-finite values");

    VectorXd sample_w(n);
    for (Index i = 0; i < n; ++i) sample_w(i) = labels[i] == 1 ? weights.target : weights.nontarget;

    LogisticModel model;
    model.weights = VectorXd::Zero(d);
    model.bias = 0.0;
    model.class_weights = weights;

    double f = objective(model.weights, model.bias, features, labels, sample_w, options.l2);
    for (int it = 0; it < options.max_iter; ++it) {
        const VectorXd z = (features * model.weights).array() + model.bias;
        VectorXd r(n), curv(n);
        for (Index i = 0; i < n; ++i) {
            const double p = sigmoid(z(i));
            r(i) = sample_w(i) * (p - labels[i]);
            curv(i) = sample_w(i) * p * (1.0 - p);
        }
        VectorXd g(d + 1);
        g.head(d) = features.transpose() * r + options.l2 * model.weights;
        g(d) = r.sum();
        if (g.norm() <= options.grad_tol) return model;

        MatrixXd h(d + 1, d + 1);
        const MatrixXd scaled = features.array().colwise() * curv.array().sqrt();
        h.topLeftCorner(d, d).setZero();
        h.topLeftCorner(d, d).selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
        h.topLeftCorner(d, d) = h.topLeftCorner(d, d).selfadjointView<Eigen::Lower>();
        h.topLeftCorner(d, d).diagonal().array() += options.l2;
        h.col(d).head(d) = features.transpose() * curv;
        h.row(d).head(d) = h.col(d).head(d).transpose();
        h(d, d) = curv.sum() + 1e-12;

        Eigen::LDLT<MatrixXd> ldlt(h);
        VectorXd step = -ldlt.solve(g);
        if (!step.allFinite()) step = -g;

        // Near the optimum the objective cannot resolve the decrease any
        // more; Newton steps are then taken in full.
        if (-g.dot(step) < 1e-10 * (1.0 + std::abs(f))) {
            model.weights += step.head(d);
            model.bias += step(d);
            f = objective(model.weights, model.bias, features, labels, sample_w, options.l2);
            continue;
        }
        // Backtracking on the objective.
        double t = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            const VectorXd w_new = model.weights + t * step.head(d);
            const double b_new = model.bias + t * step(d);
            const double f_new = objective(w_new, b_new, features, labels, sample_w, options.l2);
            if (f_new <= f + 1e-4 * t * g.dot(step) || ls == 59) {
                model.weights = w_new;
                model.bias = b_new;
                f = f_new;
                break;
            }
            t *= 0.5;
        }
    }
    const VectorXd g = logreg_objective_gradient(model, features, labels, options.l2);
    if (g.norm() <= options.grad_tol) return model;
    throw ConvergenceError("logistic regression did not reach gradient norm " + std::to_string(options.grad_tol) +
                           " (last " + std::to_string(g.norm()) + ")");
}

}  // namespace spellattack::riemann
