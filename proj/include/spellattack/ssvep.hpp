#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spellattack/signal.hpp"

namespace spellattack::ssvep {

/// Relative Gram-matrix loading: G += kGramLoading * trace(G) / d * I.
inline constexpr double kGramLoading = 1e-8;

/// Harmonic reference bank, 2*n_harmonics rows. Row c (1-based) at sample n
/// (1-based) is sin((c+1) pi f n / fs) for odd c and cos(c pi f n / fs) for
/// even c. Throws ParameterError when the top harmonic reaches Nyquist.
MatrixXd reference_signal(double f, int n_harmonics, Index n_samples, double fs);

/// Stimulation frequencies and the glyph each one selects.
struct FrequencyGrid {
    std::vector<double> freqs;
    std::string glyphs;  // one char per frequency

    void validate() const;
    Index size() const { return static_cast<Index>(freqs.size()); }
    /// Index of `f` (within 1e-9 Hz) or of glyph `c`; ParameterError if absent.
    Index index_of_frequency(double f) const;
    Index index_of_glyph(char c) const;

    /// 40 targets, 8.0-15.8 Hz in 0.2 Hz steps, laid out as the benchmark's
    /// 5x8 keyboard.
    static FrequencyGrid benchmark();

    std::string to_json() const;
    static FrequencyGrid from_json(const std::string& text);
    static FrequencyGrid load(const std::filesystem::path& path);
};

/// Rows of znorm(x) mapped to an orthonormal-row basis: L^{-1} z with
/// L L^T = z z^T + loading.
MatrixXd whiten(const MatrixXd& x);

/// Maximum canonical correlation between the rows of `x` and `y` after
/// per-row z-normalisation: sqrt(lambda_max((XX^T)^{-1} XY^T (YY^T)^{-1} YX^T)),
/// clamped to [0, 1].
double cca_rho(const MatrixXd& x, const MatrixXd& y);

/// Same quantity through the nonsymmetric product S itself; slower, used to
/// cross-check cca_rho.
double cca_rho_direct(const MatrixXd& x, const MatrixXd& y);

/// CCA frequency recogniser with the reference banks precomputed.
class CcaDecoder {
public:
    CcaDecoder(FrequencyGrid grid, int n_harmonics, Index n_samples, double fs);

    struct Decision {
        Index index = 0;
        double freq = 0.0;
        char glyph = '?';
        std::vector<double> scores;  // rho per frequency (or FBCCA score)
    };

    /// rho of `x` against every reference.
    std::vector<double> correlations(const MatrixXd& x) const;
    /// argmax over the grid, lowest frequency index on ties.
    Decision decode(const MatrixXd& x) const;

    const FrequencyGrid& grid() const noexcept { return grid_; }
    int n_harmonics() const noexcept { return n_harmonics_; }
    Index n_samples() const noexcept { return n_samples_; }
    double fs() const noexcept { return fs_; }
    const MatrixXd& reference(Index k) const { return refs_.at(k); }
    /// Whitened, z-normalised reference: W with W W^T = I spanning the rows of Y.
    const MatrixXd& whitened_reference(Index k) const { return white_.at(k); }

private:
    FrequencyGrid grid_;
    int n_harmonics_;
    Index n_samples_;
    double fs_;
    std::vector<MatrixXd> refs_;
    std::vector<MatrixXd> white_;
};

/// Index of the largest score, lowest index on ties.
Index argmax_first(const std::vector<double>& scores);

CcaDecoder::Decision decode_frequency(const MatrixXd& x, const FrequencyGrid& grid, int n_harmonics, double fs);

/// Filter-bank CCA: sub-band m (1-based) keeps [first_low + (m-1)*step, upper]
/// (zero-phase spectral mask on the analysis window); scores are
/// sum_m w(m) rho_m^2 with w(m) = m^{-a} + b.
struct FilterBankConfig {
    int n_bands = 5;
    double first_low_hz = 8.0;
    double step_hz = 8.0;
    double upper_hz = 90.0;
    double a = 1.25;
    double b = 0.25;

    double weight(int m) const;
};

class FbccaDecoder {
public:
    FbccaDecoder(FrequencyGrid grid, int n_harmonics, Index n_samples, double fs, FilterBankConfig config = {});
    CcaDecoder::Decision decode(const MatrixXd& x) const;
    const CcaDecoder& cca() const noexcept { return cca_; }
    const FilterBankConfig& config() const noexcept { return config_; }
    const FrequencyGrid& grid() const noexcept { return cca_.grid(); }
    double fs() const noexcept { return cca_.fs(); }

private:
    CcaDecoder cca_;
    FilterBankConfig config_;
};

CcaDecoder::Decision fbcca_decode(const MatrixXd& x, const FrequencyGrid& grid, int n_harmonics, double fs,
                                  const FilterBankConfig& config = {});

/// One selection: the recording, the stimulus onset sample and, when known,
/// the index of the attended frequency in the grid.
struct SsvepTrial {
    Signal sig;
    Index stim_onset = 0;
    std::optional<Index> target;
    int block = 0;
};

/// Fourth-order 7-90 Hz causal Butterworth over the whole recording.
MatrixXd filter_trial(const Signal& trial);

/// Victim-side preprocessing of one SSVEP trial: fourth-order 7-90 Hz
/// Butterworth bandpass over the whole recording, then the analysis window
/// [onset + floor(0.13 fs), + floor(1.25 fs)).
MatrixXd preprocess_window(const Signal& trial, Index stim_onset);

}  // namespace spellattack::ssvep
