#include "spellattack/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"
#include "spellattack/parallel.hpp"

namespace spellattack::synth {

namespace {

// Stream ids for subject-level draws; trial streams use the trial index.
constexpr std::uint64_t kMixingStream = 0xA1;
constexpr std::uint64_t kP300PatternStream = 0xA2;
constexpr std::uint64_t kCharacterStream = 0xA3;

Index samples_of(double ms, double fs) { return static_cast<Index>(std::lround(ms * fs / 1000.0)); }

std::vector<std::string> channel_names(Index n) {
    std::vector<std::string> names;
    for (Index i = 0; i < n; ++i) names.push_back("ch" + std::to_string(i + 1));
    return names;
}

VectorXd rms_unit(VectorXd v) {
    const double n = v.norm();
    if (!(n > 0.0)) throw ParameterError("pattern must be nonzero");
    return v * std::sqrt(static_cast<double>(v.size())) / n;
}

MatrixXd draw_mixing(const SynthConfig& cfg) {
    if (cfg.mixing.size() > 0) return cfg.mixing;
    Rng rng(cfg.subject_seed, kMixingStream);
    MatrixXd m(cfg.n_channels, 1 + cfg.n_background_sources);
    for (Index c = 1; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) m(r, c) = rng.normal();
        m.col(c) = rms_unit(m.col(c));
    }
    // The evoked source projects inside the background subspace, so it is
    // never visible on channel combinations that carry sensor noise only.
    VectorXd w(cfg.n_background_sources);
    for (Index c = 0; c < w.size(); ++c) w(c) = rng.normal();
    VectorXd p = cfg.n_background_sources > 0 ? VectorXd(m.rightCols(cfg.n_background_sources) * w)
                                               : VectorXd::Ones(cfg.n_channels);
    m.col(0) = rms_unit(p);
    return m;
}

// Background sources through the mixing matrix plus white sensor noise.
MatrixXd background(const SynthConfig& cfg, const MatrixXd& mixing, Index n, Rng& rng) {
    MatrixXd x(cfg.n_channels, n);
    for (Index r = 0; r < cfg.n_channels; ++r)
        for (Index t = 0; t < n; ++t) x(r, t) = cfg.noise_sd * rng.normal();
    for (Index s = 0; s < cfg.n_background_sources; ++s) {
        const VectorXd src = cfg.background_sd * pink_noise(n, rng);
        x += mixing.col(1 + s) * src.transpose();
    }
    return x;
}

MatrixXd finish(const MatrixXd& x) { return dsp::znorm_rows(x).cast<float>().cast<double>(); }

std::vector<int> draw_schedule_codes(int repeats, Rng& rng) {
    std::vector<int> codes;
    for (int r = 0; r < repeats; ++r) {
        std::vector<int> perm(12);
        for (int i = 0; i < 12; ++i) perm[static_cast<std::size_t>(i)] = i + 1;
        rng.shuffle(perm.begin(), perm.end());
        if (!codes.empty() && perm.front() == codes.back()) {
            std::swap(perm[0], perm[1 + rng.below(11)]);
        }
        codes.insert(codes.end(), perm.begin(), perm.end());
    }
    return codes;
}

}  // namespace

SynthConfig SynthConfig::p300_default() { return SynthConfig{}; }

SynthConfig SynthConfig::ssvep_default() {
    SynthConfig c;
    c.fs = 250.0;
    c.n_channels = 9;
    c.n_background_sources = 4;
    c.noise_sd = 0.05;
    c.tail_ms = 500.0;
    return c;
}

void SynthConfig::validate() const {
    if (!(fs > 0.0) || n_channels < 1 || n_background_sources < 0) throw ParameterError("invalid synthetic geometry");
    if (!(background_sd >= 0.0) || !(noise_sd >= 0.0) || !(p300_amplitude >= 0.0) || !(ssvep_amplitude >= 0.0)) {
        throw ParameterError("amplitudes must be non-negative");
    }
    for (double a : ssvep_harmonic_amps)
        if (!(a >= 0.0)) throw ParameterError("amplitudes must be non-negative");
    if (spatial_pattern.size() != 0 && spatial_pattern.size() != n_channels) {
        throw ParameterError("spatial pattern length differs from the channel count");
    }
    if (mixing.size() != 0 && (mixing.rows() != n_channels || mixing.cols() != 1 + n_background_sources)) {
        throw ParameterError("mixing matrix must be channels x (1 + background sources)");
    }
    if (!(width_ms > 0.0) || !(soa_ms > 0.0) || lead_ms < 0.0 || tail_ms < 0.0 || onset_delay_ms < 0.0) {
        throw ParameterError("invalid synthetic timing");
    }
}

VectorXd pink_noise(Index n, Rng& rng) {
    std::vector<double> white(static_cast<std::size_t>(n));
    for (auto& w : white) w = rng.normal();
    if (n < 3) return Eigen::Map<VectorXd>(white.data(), n);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, white);
    spec[0] = 0.0;
    for (Index k = 1; k < n; ++k) {
        const Index kk = std::min(k, n - k);
        spec[static_cast<std::size_t>(k)] /= std::sqrt(static_cast<double>(kk));
    }
    std::vector<double> out;
    fft.inv(out, spec);
    VectorXd v = Eigen::Map<VectorXd>(out.data(), n);
    v.array() -= v.mean();
    const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(n));
    return sd > 0.0 ? VectorXd(v / sd) : v;
}

MatrixXd background_mixing(const SynthConfig& cfg) {
    cfg.validate();
    return draw_mixing(cfg).rightCols(cfg.n_background_sources);
}

VectorXd p300_pattern(const SynthConfig& cfg) {
    cfg.validate();
    if (cfg.spatial_pattern.size() > 0) return cfg.spatial_pattern;
    Rng rng(cfg.subject_seed, kP300PatternStream);
    VectorXd p(cfg.n_channels);
    for (Index i = 0; i < p.size(); ++i) p(i) = rng.normal();
    return rms_unit(p);
}

VectorXd ssvep_pattern(const SynthConfig& cfg) {
    cfg.validate();
    return draw_mixing(cfg).col(0);
}

data::P300Dataset synth_p300_dataset(const SynthConfig& cfg, int n_train_chars, int n_test_chars, int repeats,
                                     const p300::SpellerGrid& grid) {
    cfg.validate();
    if (n_train_chars < 0 || n_test_chars < 0 || repeats < 1) throw ParameterError("invalid dataset size");
    const MatrixXd mixing = draw_mixing(cfg);
    const VectorXd pattern = p300_pattern(cfg);
    const Index soa = samples_of(cfg.soa_ms, cfg.fs);
    const Index lead = samples_of(cfg.lead_ms, cfg.fs);
    const Index n = lead + 12 * repeats * soa + samples_of(cfg.tail_ms, cfg.fs);

    // evoked waveform, truncated at +-4 sd around the peak
    const double lat = cfg.latency_ms * cfg.fs / 1000.0;
    const double sd = cfg.width_ms * cfg.fs / 1000.0;
    const Index erp_len = static_cast<Index>(std::ceil(lat + 4.0 * sd)) + 1;
    VectorXd erp(erp_len);
    for (Index t = 0; t < erp_len; ++t) {
        const double z = (static_cast<double>(t) - lat) / sd;
        erp(t) = cfg.p300_amplitude * std::exp(-0.5 * z * z);
    }

    const int total = n_train_chars + n_test_chars;
    std::string chars;
    Rng char_rng(cfg.subject_seed, kCharacterStream);
    for (int i = 0; i < total; ++i) chars.push_back(grid.cells()[char_rng.below(36)]);

    std::vector<p300::P300Trial> trials(static_cast<std::size_t>(total),
                                        p300::P300Trial{Signal(MatrixXd::Zero(1, 1), cfg.fs), {}, std::nullopt});
    parallel_for(static_cast<std::size_t>(total), [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const char c = chars[i];
        const auto [row, col] = grid.codes_of(c);
        const auto codes = draw_schedule_codes(repeats, rng);
        MatrixXd x = background(cfg, mixing, n, rng);
        std::vector<p300::StimulusEvent> schedule;
        for (std::size_t k = 0; k < codes.size(); ++k) {
            const Index onset = lead + static_cast<Index>(k) * soa;
            const bool target = codes[k] == row || codes[k] == col;
            schedule.push_back({onset, codes[k], target});
            if (!target) continue;
            const Index len = std::min(erp_len, n - onset);
            x.middleCols(onset, len) += pattern * erp.head(len).transpose();
        }
        trials[i] = {Signal(finish(x), cfg.fs, channel_names(cfg.n_channels)), std::move(schedule), c};
    });

    data::P300Dataset d;
    d.subject_id = cfg.subject_id;
    d.fs = cfg.fs;
    d.channel_names = channel_names(cfg.n_channels);
    d.grid = grid;
    d.train.assign(std::make_move_iterator(trials.begin()),
                   std::make_move_iterator(trials.begin() + n_train_chars));
    d.test.assign(std::make_move_iterator(trials.begin() + n_train_chars), std::make_move_iterator(trials.end()));
    return d;
}

data::SsvepDataset synth_ssvep_dataset(const SynthConfig& cfg, const ssvep::FrequencyGrid& grid, int blocks) {
    cfg.validate();
    grid.validate();
    if (blocks < 1) throw ParameterError("need at least one block");
    for (double f : grid.freqs) {
        if (static_cast<double>(cfg.ssvep_harmonic_amps.size()) * f >= cfg.fs / 2.0) {
            throw ParameterError("harmonic of " + std::to_string(f) + " Hz reaches the Nyquist frequency");
        }
    }
    const MatrixXd mixing = draw_mixing(cfg);
    const VectorXd pattern = mixing.col(0);
    const Index lead = samples_of(cfg.lead_ms, cfg.fs);
    const Index delay = samples_of(cfg.onset_delay_ms, cfg.fs);
    const Index dur = samples_of(cfg.ssvep_duration_ms, cfg.fs);
    const Index n = lead + dur + samples_of(cfg.tail_ms, cfg.fs);
    const std::size_t per_block = grid.freqs.size();
    const std::size_t total = per_block * static_cast<std::size_t>(blocks);

    std::vector<ssvep::SsvepTrial> trials(total, {Signal(MatrixXd::Zero(1, 1), cfg.fs), 0, std::nullopt, 0});
    parallel_for(total, [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const std::size_t k = i % per_block;
        const double f = grid.freqs[k];
        MatrixXd x = background(cfg, mixing, n, rng);
        VectorXd s = VectorXd::Zero(n);
        for (Index t = lead + delay; t < std::min(n, lead + dur); ++t) {
            const double tau = static_cast<double>(t - lead - delay) / cfg.fs;
            double v = 0.0;
            for (std::size_t h = 0; h < cfg.ssvep_harmonic_amps.size(); ++h) {
                v += cfg.ssvep_harmonic_amps[h] * std::sin(2.0 * std::numbers::pi * static_cast<double>(h + 1) * f * tau);
            }
            s(t) = cfg.ssvep_amplitude * v;
        }
        x += pattern * s.transpose();
        trials[i] = {Signal(finish(x), cfg.fs, channel_names(cfg.n_channels)), lead, static_cast<Index>(k),
                     static_cast<int>(i / per_block)};
    });

    data::SsvepDataset d;
    d.subject_id = cfg.subject_id;
    d.fs = cfg.fs;
    d.channel_names = channel_names(cfg.n_channels);
    d.grid = grid;
    d.trials = std::move(trials);
    return d;
}

MatrixXd erp_difference(std::span<const p300::P300Trial> trials, Index epoch_len, const p300::SpellerGrid& grid) {
    if (trials.empty()) throw ParameterError("no trials");
    const Index ch = trials.front().sig.n_channels();
    MatrixXd sum[2] = {MatrixXd::Zero(ch, epoch_len), MatrixXd::Zero(ch, epoch_len)};
    double count[2] = {0.0, 0.0};
    for (const auto& t : trials) {
        for (const auto& ev : t.schedule) {
            if (ev.onset + epoch_len > t.sig.n_samples()) continue;
            const int y = p300::event_label(t, ev, grid);
            sum[y] += t.sig.data().middleCols(ev.onset, epoch_len);
            count[y] += 1.0;
        }
    }
    if (count[0] == 0.0 || count[1] == 0.0) throw DegenerateInputError("need both target and non-target epochs");
    return sum[1] / count[1] - sum[0] / count[0];
}

}  // namespace spellattack::synth
