#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spellattack/error.hpp"
#include "spellattack/ssvep.hpp"

namespace spellattack::attack {

/// Perturbation added to the victim's analysis window to force `f_hat`.
struct SsvepTemplate {
    MatrixXd delta;  // channels x window samples, band-limited
    double f_hat = 0.0;
    char glyph = '?';
    double fs = 0.0;
    double alpha = 0.0;
    double step = 0.0;
    double spr_threshold_db = 0.0;
    double final_spr_db = 0.0;
    double reference_energy = 0.0;  // mean window energy of the crafting set
    int iterations = 0;
    int objective_increases = 0;
    double band_low_hz = 7.0;
    double band_high_hz = 90.0;
    std::string subject_id;

    void save(const std::string& stem) const;  // <stem>.bin + <stem>.json
    static SsvepTemplate load(const std::string& stem);
};

struct ObjectiveValue {
    double value = 0.0;
    MatrixXd grad;             // with respect to r
    double trace_sum = 0.0;    // sum over the set of tr(S)
    double lambda_sum = 0.0;   // sum over the set of lambda_max(S)
};

/// -sum_X tr(S(znorm(X + B r), Y)) + alpha ||B r||_F, B the band projection,
/// with its gradient in r. Every window in `set` must share r's shape.
/// Throws NumericalError if tr(S) > n_channels * lambda_max(S) for any window.
class SsvepObjective {
public:
    SsvepObjective(std::vector<MatrixXd> set, const MatrixXd& reference, double alpha, double fs,
                   double band_low_hz = 7.0, double band_high_hz = 90.0);

    ObjectiveValue operator()(const MatrixXd& r) const;
    MatrixXd project(const MatrixXd& r) const;
    /// Mean per-window energy of the clean set.
    double reference_energy() const noexcept { return reference_energy_; }
    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }

private:
    std::vector<MatrixXd> set_;
    MatrixXd white_ref_;
    double alpha_, fs_, lo_, hi_;
    Index rows_, cols_;
    double reference_energy_ = 0.0;
};

ObjectiveValue ssvep_objective_grad(const MatrixXd& r, std::span<const MatrixXd> crafting_set,
                                    const MatrixXd& reference, double alpha, double fs);

struct CraftOptions {
    double alpha = 0.05;
    double step = 1e-3;
    double spr_threshold_db = 25.0;
    int max_iter = 10000;
    int n_harmonics = 5;
    double band_low_hz = 7.0;
    double band_high_hz = 90.0;
};

/// Raised when max_iter is hit before the SPR drops below the threshold.
class CraftNotConverged : public ConvergenceError {
public:
    CraftNotConverged(const std::string& what, SsvepTemplate last) : ConvergenceError(what), last_(std::move(last)) {}
    const SsvepTemplate& last() const noexcept { return last_; }

private:
    SsvepTemplate last_;
};

/// Plain gradient descent from r = 0; returns the first iterate whose SPR
/// against the crafting set's mean window energy falls below the threshold.
SsvepTemplate craft_delta(std::span<const MatrixXd> crafting_set, const ssvep::FrequencyGrid& grid, double f_hat,
                          double fs, const CraftOptions& options = {});

/// Baseline perturbations of shape rows x cols, rescaled so their SPR against
/// `reference_energy` equals `spr_db`. Seeded.
MatrixXd gaussian_noise(Index rows, Index cols, double reference_energy, double spr_db, std::uint64_t seed);

/// One sinusoid at a grid frequency drawn uniformly, phase uniform on
/// [-pi/2, pi/2], identical on every channel.
MatrixXd single_periodic_noise(const ssvep::FrequencyGrid& grid, Index rows, Index cols, double fs,
                               double reference_energy, double spr_db, std::uint64_t seed);

/// Sum of sinusoids at every grid frequency, amplitudes uniform on (0, 1],
/// phases uniform on [-pi/2, pi/2], identical on every channel.
MatrixXd compound_periodic_noise(const ssvep::FrequencyGrid& grid, Index rows, Index cols, double fs,
                                 double reference_energy, double spr_db, std::uint64_t seed);

/// delta shifted right by `delay` samples within its own window, zero filled.
MatrixXd delay_delta(const MatrixXd& delta, Index delay);

}  // namespace spellattack::attack
