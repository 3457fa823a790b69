#pragma once

#include <span>
#include <utility>
#include <vector>

#include "spellattack/signal.hpp"

namespace spellattack::riemann {

/// Relative diagonal loading added to every augmented covariance:
/// C += kCovarianceLoading * trace(C) / d * I.
inline constexpr double kCovarianceLoading = 1e-10;
/// Eigenvalue floor used by the symmetric matrix functions.
inline constexpr double kEigenFloor = 1e-12;

/// Stacked xDAWN spatial filters for the two classes.
struct XdawnFilters {
    MatrixXd U;                 // (2 * n_filters) x n_channels, rows [U_0; U_1]
    Index n_filters = 0;        // filters per class
    MatrixXd Z;                 // (2 * n_filters) x n_samples, [U Xbar_0; U Xbar_1]
    VectorXd eigenvalues;       // generalised eigenvalues per row, scaled into [0, 1]

    Index n_channels() const { return U.cols(); }
    Index n_samples() const { return Z.cols(); }
};

/// Streaming accumulation of the class means and the summed scatter matrix
/// that xDAWN needs; epochs are mean-centred per channel on entry.
class XdawnAccumulator {
public:
    XdawnAccumulator(Index n_channels, Index n_samples);
    void add(const MatrixXd& epoch, int label);
    /// Throws ParameterError if a class is missing or n_filters is out of range.
    XdawnFilters finish(Index n_filters) const;

private:
    MatrixXd sum_[2];
    Index count_[2] = {0, 0};
    MatrixXd scatter_;
};

/// Fit xDAWN filters. Each epoch is mean-centred per channel before use.
/// Rows of U_c are the top `n_filters` generalised eigenvectors of
/// (Xbar_c Xbar_c^T, sum_i X_i X_i^T), largest-magnitude entry made positive.
XdawnFilters xdawn_fit(std::span<const MatrixXd> epochs, std::span<const int> labels, Index n_filters);

/// Symmetric positive-definite matrix. Construction checks symmetry (1e-10
/// relative) and positive definiteness.
class SpdMatrix {
public:
    explicit SpdMatrix(MatrixXd m);
    const MatrixXd& matrix() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }

private:
    MatrixXd m_;
};

// Matrix functions of a symmetric matrix through its eigendecomposition,
// eigenvalues clamped at kEigenFloor.
MatrixXd sym_log(const MatrixXd& m);
MatrixXd sym_exp(const MatrixXd& m);
MatrixXd sym_sqrt(const MatrixXd& m);
MatrixXd sym_invsqrt(const MatrixXd& m);

/// Affine-invariant Riemannian distance ||logm(A^{-1/2} B A^{-1/2})||_F.
double airm_distance(const SpdMatrix& a, const SpdMatrix& b);

/// Unloaded block matrix [[Z Z^T, Z Xf^T], [Xf Z^T, Xf Xf^T]] with Xf = U centre(epoch).
MatrixXd augmented_blocks(const MatrixXd& epoch, const XdawnFilters& filters);
SpdMatrix augmented_covariance(const MatrixXd& epoch, const XdawnFilters& filters);

/// Karcher mean under the affine-invariant metric, started from the
/// arithmetic mean. Throws ConvergenceError after `max_iter` iterations.
SpdMatrix spd_geometric_mean(std::span<const SpdMatrix> mats, double tol = 1e-9, int max_iter = 200);

/// Frobenius norm of mean_i logm(C^{-1/2} C_i C^{-1/2}).
double geometric_mean_residual(std::span<const SpdMatrix> mats, const SpdMatrix& mean);

/// Upper-triangular vectorisation of logm(ref^{-1/2} c ref^{-1/2}), row by
/// row, diagonal weight 1 and off-diagonal weight sqrt(2).
VectorXd tangent_project(const SpdMatrix& c, const SpdMatrix& ref);
/// Same with a precomputed ref^{-1/2}.
VectorXd tangent_project(const MatrixXd& c, const MatrixXd& ref_invsqrt);
/// Inverse of tangent_project.
SpdMatrix tangent_unproject(const VectorXd& s, const SpdMatrix& ref);

/// Symmetric matrix S with <S, L> equal to w . upper_weighted(L) for every
/// symmetric L; the adjoint of the weighted vectorisation.
MatrixXd unvectorize_adjoint(const VectorXd& w, Index d);

struct ClassWeights {
    double nontarget = 1.0;
    double target = 1.0;
};

/// Inverse-frequency weights normalised so that the weighted class totals
/// are equal and sum to the sample count.
ClassWeights inverse_frequency_weights(std::span<const int> labels);

struct LogisticModel {
    VectorXd weights;
    double bias = 0.0;
    ClassWeights class_weights;
};

struct LogregOptions {
    double l2 = 1.0;
    double grad_tol = 1e-6;
    int max_iter = 100;
};

/// Minimise sum_i w_{y_i} CE(y_i, sigmoid(w.x_i + b)) + l2 ||w||^2 / 2 by
/// damped Newton iterations from zero. Rows of `features` are samples.
LogisticModel logreg_fit(const MatrixXd& features, std::span<const int> labels, ClassWeights weights,
                         const LogregOptions& options = {});

/// Gradient of the training objective; exposed for tests.
VectorXd logreg_objective_gradient(const LogisticModel& model, const MatrixXd& features,
                                   std::span<const int> labels, double l2);

double sigmoid(double z);
double logreg_logit(const LogisticModel& model, const VectorXd& x);
double logreg_prob(const LogisticModel& model, const VectorXd& x);

/// Derivative helper for the matrix logarithm: given A = V diag(lambda) V^T
/// and a symmetric upstream gradient G of a scalar f(log A), returns df/dA.
MatrixXd log_frechet_adjoint(const Eigen::SelfAdjointEigenSolver<MatrixXd>& eig, const MatrixXd& upstream);

}  // namespace spellattack::riemann
