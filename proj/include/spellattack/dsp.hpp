#pragma once

#include <array>
#include <complex>
#include <vector>

#include "spellattack/signal.hpp"

namespace spellattack::dsp {

struct BandpassSpec {
    int order = 4;  // order of the analog lowpass prototype
    double low_hz = 0.0;
    double high_hz = 0.0;
    double fs = 0.0;

    /// Throws ParameterError unless order > 0 and 0 < low < high < fs/2.
    void validate() const;
};

/// One second-order section, a[0] normalised to 1.
struct Biquad {
    std::array<double, 3> b{};
    std::array<double, 3> a{1.0, 0.0, 0.0};
};

/// Digital IIR filter kept both as pole/zero/gain and as a cascade of
/// second-order sections. The expanded transfer-function polynomials are
/// available through numerator()/denominator().
struct FilterCoefficients {
    double fs = 0.0;
    std::vector<std::complex<double>> zeros;
    std::vector<std::complex<double>> poles;
    double gain = 1.0;
    std::vector<Biquad> sections;

    std::vector<double> numerator() const;
    std::vector<double> denominator() const;

    /// H(e^{jw}) at `freq_hz`.
    std::complex<double> response(double freq_hz) const;
    double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }

    bool is_stable() const;
};

/// Digital Butterworth bandpass via the bilinear transform. The resulting
/// filter has 2*order poles, matching the usual `butter(order, [lo, hi])`
/// convention.
FilterCoefficients design_bandpass(const BandpassSpec& spec);

/// Causal forward filtering of each row with zero initial state.
MatrixXd filter_rows(const MatrixXd& x, const FilterCoefficients& coeffs);
Signal apply_filter(const Signal& sig, const FilterCoefficients& coeffs);

/// Per-channel z-normalisation with the population standard deviation.
/// Throws DegenerateInputError on a constant channel.
MatrixXd znorm_rows(const MatrixXd& x);
Signal znorm_channels(const Signal& sig);

/// Subtract each row's mean.
MatrixXd center_rows(const MatrixXd& x);

Signal extract_epoch(const Signal& sig, Index onset_sample, Index length_samples);

/// Start/length of the SSVEP analysis window relative to stimulus onset:
/// [floor(0.13 fs), floor(0.13 fs) + floor(1.25 fs)).
struct Window {
    Index start = 0;
    Index length = 0;
};
Window ssvep_window(double fs);

/// Orthogonal projection onto the band [low_hz, high_hz]: DFT, zero every
/// bin whose frequency lies strictly outside the band (together with its
/// conjugate image), inverse DFT.
MatrixXd band_project_rows(const MatrixXd& x, double fs, double low_hz, double high_hz);
Signal band_project(const Signal& sig, double low_hz, double high_hz);

/// One-sided spectrum scaled so that the squared amplitudes of a channel sum
/// to its time-domain energy (sum of squares).
struct Spectrum {
    std::vector<double> freqs;  // Hz, one per bin
    MatrixXd amplitude;         // channels x bins
};
Spectrum amplitude_spectrum(const Signal& sig);

}  // namespace spellattack::dsp
