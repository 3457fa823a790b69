#include "spellattack/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "spellattack/error.hpp"

namespace spellattack::dsp {

namespace {

using cplx = std::complex<double>;

std::vector<double> poly_mul(const std::vector<double>& p, const std::array<double, 3>& q) {
    std::vector<double> out(p.size() + 2, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < 3; ++j) out[i + j] += p[i] * q[j];
    }
    return out;
}

bool in_band(double f, double low, double high) { return f >= low && f <= high; }

}  // namespace

void BandpassSpec::validate() const {
    if (order < 1) throw ParameterError("bandpass order must be positive");
    if (!(fs > 0.0)) throw ParameterError("sampling rate must be positive");
    if (!(low_hz > 0.0) || !(low_hz < high_hz)) {
        throw ParameterError("bandpass requires 0 < low_hz < high_hz");
    }
    if (!(high_hz < fs / 2.0)) {
        throw ParameterError("bandpass upper edge must lie below the Nyquist frequency");
    }
}

std::vector<double> FilterCoefficients::numerator() const {
    std::vector<double> p{gain};
    for (const auto& s : sections) p = poly_mul(p, s.b);
    return p;
}

std::vector<double> FilterCoefficients::denominator() const {
    std::vector<double> p{1.0};
    for (const auto& s : sections) p = poly_mul(p, s.a);
    return p;
}

cplx FilterCoefficients::response(double freq_hz) const {
    const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / fs);
    cplx h = gain;
    for (const auto& zz : zeros) h *= (z - zz);
    for (const auto& pp : poles) h /= (z - pp);
    return h;
}

bool FilterCoefficients::is_stable() const {
    return std::all_of(poles.begin(), poles.end(), [](const cplx& p) { return std::abs(p) < 1.0; });
}

FilterCoefficients design_bandpass(const BandpassSpec& spec) {
    spec.validate();
    const int n = spec.order;
    const double pi = std::numbers::pi;

    // Analog prototype poles on the left half of the unit circle.
    std::vector<cplx> proto;
    for (int m = -n + 1; m < n; m += 2) {
        proto.push_back(-std::polar(1.0, pi * m / (2.0 * n)));
    }

    const double fs2 = 2.0 * spec.fs;
    const double w1 = fs2 * std::tan(pi * spec.low_hz / spec.fs);
    const double w2 = fs2 * std::tan(pi * spec.high_hz / spec.fs);
    const double bw = w2 - w1;
    const double w0 = std::sqrt(w1 * w2);

    std::vector<cplx> analog;
    for (const auto& p : proto) {
        const cplx pl = p * bw / 2.0;
        const cplx root = std::sqrt(pl * pl - w0 * w0);
        analog.push_back(pl + root);
        analog.push_back(pl - root);
    }
    // n analog zeros at the origin, gain bw^n.
    cplx k = std::pow(bw, n);
    for (const auto& p : analog) k /= (fs2 - p);
    k *= std::pow(fs2, n);

    FilterCoefficients out;
    out.fs = spec.fs;
    out.gain = k.real();
    for (const auto& p : analog) out.poles.push_back((fs2 + p) / (fs2 - p));
    out.zeros.assign(n, cplx(1.0, 0.0));
    out.zeros.insert(out.zeros.end(), n, cplx(-1.0, 0.0));

    // Second-order sections: each gets one zero at +1 and one at -1.
    std::vector<cplx> upper;
    std::vector<double> real_poles;
    for (const auto& p : out.poles) {
        if (std::abs(p.imag()) > 1e-12) {
            if (p.imag() > 0) upper.push_back(p);
        } else {
            real_poles.push_back(p.real());
        }
    }
    for (const auto& p : upper) {
        out.sections.push_back({{1.0, 0.0, -1.0}, {1.0, -2.0 * p.real(), std::norm(p)}});
    }
    for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
        const double a = real_poles[i], b = real_poles[i + 1];
        out.sections.push_back({{1.0, 0.0, -1.0}, {1.0, -(a + b), a * b}});
    }
    if (static_cast<int>(out.sections.size()) != n) {
        throw NumericalError("failed to pair filter poles into second-order sections");
    }
    return out;
}

MatrixXd filter_rows(const MatrixXd& x, const FilterCoefficients& coeffs) {
    MatrixXd y(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        for (Index t = 0; t < x.cols(); ++t) y(r, t) = coeffs.gain * x(r, t);
        // Direct form II transposed, one pass per section.
        for (const auto& s : coeffs.sections) {
            double z1 = 0.0, z2 = 0.0;
            for (Index t = 0; t < x.cols(); ++t) {
                const double in = y(r, t);
                const double out = s.b[0] * in + z1;
                z1 = s.b[1] * in - s.a[1] * out + z2;
                z2 = s.b[2] * in - s.a[2] * out;
                y(r, t) = out;
            }
        }
    }
    return y;
}

Signal apply_filter(const Signal& sig, const FilterCoefficients& coeffs) {
    if (std::abs(coeffs.fs - sig.fs()) > 1e-9 * sig.fs()) {
        throw ParameterError("filter was designed for a different sampling rate");
    }
    return sig.with_data(filter_rows(sig.data(), coeffs));
}

MatrixXd znorm_rows(const MatrixXd& x) {
    MatrixXd out(x.rows(), x.cols());
    const double n = static_cast<double>(x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().sum() / n;
        const double scale = std::max(1.0, x.row(r).cwiseAbs().maxCoeff());
        if (!(var > 0.0) || std::sqrt(var) <= 1e-14 * scale) {
            throw DegenerateInputError("channel " + std::to_string(r) + " is constant");
        }
        out.row(r) = (x.row(r).array() - mean) / std::sqrt(var);
    }
    return out;
}

Signal znorm_channels(const Signal& sig) { return sig.with_data(znorm_rows(sig.data())); }

MatrixXd center_rows(const MatrixXd& x) { return x.colwise() - x.rowwise().mean(); }

Signal extract_epoch(const Signal& sig, Index onset_sample, Index length_samples) {
    if (onset_sample < 0 || length_samples < 1 || onset_sample + length_samples > sig.n_samples()) {
        throw BoundsError("epoch [" + std::to_string(onset_sample) + ", " +
                          std::to_string(onset_sample + length_samples) + ") outside signal of " +
                          std::to_string(sig.n_samples()) + " samples");
    }
    return sig.with_data(sig.data().middleCols(onset_sample, length_samples));
}

Window ssvep_window(double fs) {
    return {static_cast<Index>(std::floor(0.13 * fs)), static_cast<Index>(std::floor(1.25 * fs))};
}

MatrixXd band_project_rows(const MatrixXd& x, double fs, double low_hz, double high_hz) {
    if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0)) {
        throw ParameterError("projection band must satisfy 0 < low < high < fs/2");
    }
    const Index n = x.cols();
    std::vector<bool> keep(n, false);
    for (Index k = 0; k <= n / 2; ++k) {
        const bool k_in = in_band(static_cast<double>(k) * fs / static_cast<double>(n), low_hz, high_hz);
        keep[k] = k_in;
        if (k > 0) keep[n - k] = k_in;
    }

    Eigen::FFT<double> fft;
    MatrixXd out(x.rows(), n);
    std::vector<double> row(n), back;
    std::vector<std::complex<double>> spec;
    for (Index r = 0; r < x.rows(); ++r) {
        for (Index t = 0; t < n; ++t) row[t] = x(r, t);
        fft.fwd(spec, row);
        for (Index k = 0; k < n; ++k) {
            if (!keep[k]) spec[k] = 0.0;
        }
        fft.inv(back, spec);
        for (Index t = 0; t < n; ++t) out(r, t) = back[t];
    }
    return out;
}

Signal band_project(const Signal& sig, double low_hz, double high_hz) {
    return sig.with_data(band_project_rows(sig.data(), sig.fs(), low_hz, high_hz));
}

Spectrum amplitude_spectrum(const Signal& sig) {
    const Index n = sig.n_samples();
    if (n < 2) throw ParameterError("spectrum needs at least two samples");
    const Index bins = n / 2 + 1;
    Spectrum out;
    out.freqs.resize(bins);
    for (Index k = 0; k < bins; ++k) out.freqs[k] = static_cast<double>(k) * sig.fs() / static_cast<double>(n);
    out.amplitude.resize(sig.n_channels(), bins);

    Eigen::FFT<double> fft;
    std::vector<double> row(n);
    std::vector<std::complex<double>> spec;
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (Index r = 0; r < sig.n_channels(); ++r) {
        for (Index t = 0; t < n; ++t) row[t] = sig.data()(r, t);
        fft.fwd(spec, row);
        for (Index k = 0; k < bins; ++k) {
            const bool unpaired = (k == 0) || (n % 2 == 0 && k == n / 2);
            out.amplitude(r, k) = std::abs(spec[k]) * norm * (unpaired ? 1.0 : std::sqrt(2.0));
        }
    }
    return out;
}

}  // namespace spellattack::dsp
