#include "spellattack/ssvep.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"

namespace spellattack::ssvep {

MatrixXd whiten(const MatrixXd& x) {
    const MatrixXd z = dsp::znorm_rows(x);
    MatrixXd gram = z * z.transpose();
    gram.diagonal().array() += kGramLoading * gram.trace() / static_cast<double>(gram.rows());
    Eigen::LLT<MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("Gram matrix is singular after loading");
    return llt.matrixL().solve(z);
}

namespace {

double top_singular_squared(const MatrixXd& m) {
    const MatrixXd g = m.rows() <= m.cols() ? MatrixXd(m * m.transpose()) : MatrixXd(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g, Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(g.rows() - 1);
}

double clamp_rho(double lambda) { return std::sqrt(std::clamp(lambda, 0.0, 1.0)); }

}  // namespace

MatrixXd reference_signal(double f, int n_harmonics, Index n_samples, double fs) {
    if (n_harmonics < 1) throw ParameterError("need at least one harmonic");
    if (!(f > 0.0) || !(fs > 0.0) || n_samples < 1) throw ParameterError("invalid reference parameters");
    if (n_harmonics * f >= fs / 2.0) {
        throw ParameterError("harmonic " + std::to_string(n_harmonics) + " of " + std::to_string(f) +
                             " Hz reaches the Nyquist frequency");
    }
    MatrixXd y(2 * n_harmonics, n_samples);
    for (Index c = 1; c <= 2 * n_harmonics; ++c) {
        for (Index n = 1; n <= n_samples; ++n) {
            const double arg = std::numbers::pi * f / fs * static_cast<double>(n);
            y(c - 1, n - 1) = (c % 2 == 1) ? std::sin(static_cast<double>(c + 1) * arg)
                                           : std::cos(static_cast<double>(c) * arg);
        }
    }
    return y;
}

void FrequencyGrid::validate() const {
    if (freqs.size() < 2) throw ParameterError("frequency grid needs at least two targets");
    if (glyphs.size() != freqs.size()) throw ParameterError("one glyph per frequency required");
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (!(freqs[i] > 0.0)) throw ParameterError("frequencies must be positive");
        for (std::size_t j = 0; j < i; ++j) {
            if (freqs[i] == freqs[j]) throw ParameterError("frequencies must be distinct");
            if (glyphs[i] == glyphs[j]) throw ParameterError("glyphs must be distinct");
        }
    }
}

Index FrequencyGrid::index_of_frequency(double f) const {
    for (std::size_t i = 0; i < freqs.size(); ++i)
        if (std::abs(freqs[i] - f) < 1e-9) return static_cast<Index>(i);
    throw ParameterError("frequency " + std::to_string(f) + " Hz is not in the grid");
}

Index FrequencyGrid::index_of_glyph(char c) const {
    const auto pos = glyphs.find(c);
    if (pos == std::string::npos) throw ParameterError(std::string("glyph '") + c + "' is not in the grid");
    return static_cast<Index>(pos);
}

FrequencyGrid FrequencyGrid::benchmark() {
    const std::string rows[5] = {"ABCDEFGH", "IJKLMNOP", "QRSTUVWX", "YZ012345", "6789_,.<"};
    FrequencyGrid g;
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 8; ++c) {
            // tenths of Hz keep the grid exact: 8.0 + c + 0.2 r
            g.freqs.push_back(static_cast<double>(80 + 10 * c + 2 * r) / 10.0);
            g.glyphs.push_back(rows[r][c]);
        }
    }
    return g;
}

std::string FrequencyGrid::to_json() const {
    nlohmann::json j;
    j["freqs"] = freqs;
    j["glyphs"] = glyphs;
    return j.dump(2);
}

FrequencyGrid FrequencyGrid::from_json(const std::string& text) {
    FrequencyGrid g;
    try {
        const auto j = nlohmann::json::parse(text);
        g.freqs = j.at("freqs").get<std::vector<double>>();
        g.glyphs = j.at("glyphs").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad frequency grid: ") + e.what());
    }
    g.validate();
    return g;
}

FrequencyGrid FrequencyGrid::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

double cca_rho(const MatrixXd& x, const MatrixXd& y) {
    if (x.cols() != y.cols()) throw ParameterError("cca inputs differ in length");
    return clamp_rho(top_singular_squared(whiten(x) * whiten(y).transpose()));
}

double cca_rho_direct(const MatrixXd& x, const MatrixXd& y) {
    if (x.cols() != y.cols()) throw ParameterError("cca inputs differ in length");
    const MatrixXd zx = dsp::znorm_rows(x);
    const MatrixXd zy = dsp::znorm_rows(y);
    MatrixXd sxx = zx * zx.transpose();
    MatrixXd syy = zy * zy.transpose();
    sxx.diagonal().array() += kGramLoading * sxx.trace() / static_cast<double>(sxx.rows());
    syy.diagonal().array() += kGramLoading * syy.trace() / static_cast<double>(syy.rows());
    const MatrixXd sxy = zx * zy.transpose();
    const MatrixXd s = sxx.inverse() * sxy * syy.inverse() * sxy.transpose();
    Eigen::EigenSolver<MatrixXd> es(s, false);
    double best = 0.0;
    for (Index i = 0; i < s.rows(); ++i) best = std::max(best, es.eigenvalues()(i).real());
    return clamp_rho(best);
}

CcaDecoder::CcaDecoder(FrequencyGrid grid, int n_harmonics, Index n_samples, double fs)
    : grid_(std::move(grid)), n_harmonics_(n_harmonics), n_samples_(n_samples), fs_(fs) {
    grid_.validate();
    for (double f : grid_.freqs) {
        refs_.push_back(reference_signal(f, n_harmonics, n_samples, fs));
        white_.push_back(whiten(refs_.back()));
    }
}

std::vector<double> CcaDecoder::correlations(const MatrixXd& x) const {
    if (x.cols() != n_samples_) {
        throw ParameterError("window has " + std::to_string(x.cols()) + " samples, decoder expects " +
                             std::to_string(n_samples_));
    }
    const MatrixXd wx = whiten(x);
    std::vector<double> rho(white_.size());
    for (std::size_t k = 0; k < white_.size(); ++k) rho[k] = clamp_rho(top_singular_squared(wx * white_[k].transpose()));
    return rho;
}

namespace {

CcaDecoder::Decision pick(const FrequencyGrid& grid, std::vector<double> scores) {
    CcaDecoder::Decision d;
    d.index = argmax_first(scores);
    d.freq = grid.freqs[d.index];
    d.glyph = grid.glyphs[d.index];
    d.scores = std::move(scores);
    return d;
}

}  // namespace

Index argmax_first(const std::vector<double>& scores) {
    if (scores.empty()) throw ParameterError("no scores to choose from");
    Index best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[static_cast<std::size_t>(best)]) best = static_cast<Index>(k);
    return best;
}

CcaDecoder::Decision CcaDecoder::decode(const MatrixXd& x) const { return pick(grid_, correlations(x)); }

CcaDecoder::Decision decode_frequency(const MatrixXd& x, const FrequencyGrid& grid, int n_harmonics, double fs) {
    return CcaDecoder(grid, n_harmonics, x.cols(), fs).decode(x);
}

double FilterBankConfig::weight(int m) const { return std::pow(static_cast<double>(m), -a) + b; }

FbccaDecoder::FbccaDecoder(FrequencyGrid grid, int n_harmonics, Index n_samples, double fs, FilterBankConfig config)
    : cca_(std::move(grid), n_harmonics, n_samples, fs), config_(config) {
    if (config_.n_bands < 1) throw ParameterError("filter bank needs at least one band");
    for (int m = 1; m <= config_.n_bands; ++m) {
        const double low = config_.first_low_hz + (m - 1) * config_.step_hz;
        if (!(low > 0.0) || !(low < config_.upper_hz) || !(config_.upper_hz < fs / 2.0)) {
            throw ParameterError("filter bank band " + std::to_string(m) + " is invalid");
        }
    }
}

CcaDecoder::Decision FbccaDecoder::decode(const MatrixXd& x) const {
    std::vector<double> total(cca_.grid().freqs.size(), 0.0);
    for (int m = 1; m <= config_.n_bands; ++m) {
        const double low = config_.first_low_hz + (m - 1) * config_.step_hz;
        const MatrixXd sub = dsp::band_project_rows(x, cca_.fs(), low, config_.upper_hz);
        const auto rho = cca_.correlations(sub);
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += config_.weight(m) * rho[k] * rho[k];
    }
    return pick(cca_.grid(), std::move(total));
}

CcaDecoder::Decision fbcca_decode(const MatrixXd& x, const FrequencyGrid& grid, int n_harmonics, double fs,
                                  const FilterBankConfig& config) {
    return FbccaDecoder(grid, n_harmonics, x.cols(), fs, config).decode(x);
}

MatrixXd filter_trial(const Signal& trial) {
    static thread_local dsp::FilterCoefficients cached;
    if (cached.fs != trial.fs()) cached = dsp::design_bandpass({4, 7.0, 90.0, trial.fs()});
    return dsp::filter_rows(trial.data(), cached);
}

MatrixXd preprocess_window(const Signal& trial, Index stim_onset) {
    const auto win = dsp::ssvep_window(trial.fs());
    if (stim_onset < 0 || stim_onset + win.start + win.length > trial.n_samples()) {
        throw BoundsError("SSVEP analysis window runs past the end of the trial");
    }
    return filter_trial(trial).middleCols(stim_onset + win.start, win.length);
}

}  // namespace spellattack::ssvep
