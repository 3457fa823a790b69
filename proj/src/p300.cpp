#include "spellattack/p300.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spellattack/archive.hpp"
#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"
#include "spellattack/parallel.hpp"

namespace spellattack::p300 {

using riemann::SpdMatrix;

SpellerGrid::SpellerGrid() : SpellerGrid("ABCDEFGHIJKLMNOPQRSTUVWXYZ123456789_") {}

SpellerGrid::SpellerGrid(std::string cells) : cells_(std::move(cells)) {
    if (cells_.size() != 36) throw ParameterError("speller grid needs exactly 36 cells");
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (cells_.find(cells_[i]) != i) throw ParameterError("speller grid cells must be distinct");
    }
}

char SpellerGrid::at(int row, int col) const {
    if (row < 0 || row > 5 || col < 0 || col > 5) throw BoundsError("grid position out of range");
    return cells_[row * 6 + col];
}

char SpellerGrid::from_codes(int row_code, int col_code) const {
    if (row_code < 1 || row_code > 6 || col_code < 7 || col_code > 12) {
        throw ParameterError("row codes are 1-6 and column codes 7-12");
    }
    return at(row_code - 1, col_code - 7);
}

std::pair<int, int> SpellerGrid::codes_of(char c) const {
    const auto pos = cells_.find(c);
    if (pos == std::string::npos) throw ParameterError(std::string("character '") + c + "' is not in the grid");
    return {static_cast<int>(pos / 6) + 1, static_cast<int>(pos % 6) + 7};
}

bool SpellerGrid::contains(char c) const { return cells_.find(c) != std::string::npos; }

void P300Trial::validate() const {
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i].code < 1 || schedule[i].code > 12) throw ParameterError("stimulus code outside 1..12");
        if (i > 0 && schedule[i].onset <= schedule[i - 1].onset) {
            throw ParameterError("schedule onsets must be strictly increasing");
        }
        if (schedule[i].onset < 0 || schedule[i].onset >= sig.n_samples()) {
            throw ParameterError("schedule onset outside the recording");
        }
    }
}

std::string to_string(Variant v) { return v == Variant::riemann ? "riemann" : "xdawn_lr"; }

Variant variant_from_string(const std::string& s) {
    if (s == "riemann") return Variant::riemann;
    if (s == "xdawn_lr") return Variant::xdawn_lr;
    throw ParameterError("unknown victim variant '" + s + "'");
}

Index P300Protocol::epoch_samples() const { return static_cast<Index>(std::lround(epoch_ms * fs / 1000.0)); }
Index P300Protocol::template_samples() const { return static_cast<Index>(std::lround(template_ms * fs / 1000.0)); }
Index P300Protocol::soa_samples() const { return static_cast<Index>(std::lround(soa_ms * fs / 1000.0)); }

P300Protocol P300Protocol::competition() {
    P300Protocol p;
    p.name = "competition";
    p.fs = 240.0;
    p.soa_ms = 175.0;
    p.test_repeats = 15;
    p.n_filters = 8;
    p.epsilon = 0.5;
    return p;
}

P300Protocol P300Protocol::als() {
    P300Protocol p;
    p.name = "als";
    p.fs = 256.0;
    p.soa_ms = 250.0;
    p.template_ms = 500.0;  // two intensification periods
    p.test_repeats = 10;
    p.n_filters = 4;
    p.epsilon = 0.8;
    return p;
}

P300Protocol P300Protocol::synthetic() {
    P300Protocol p = competition();
    p.name = "synthetic";
    p.n_filters = 4;
    return p;
}

int event_label(const P300Trial& trial, const StimulusEvent& ev, const SpellerGrid& grid) {
    if (ev.is_target) return *ev.is_target ? 1 : 0;
    if (!trial.user_char) throw ParameterError("trial has neither event labels nor a user character");
    const auto [r, c] = grid.codes_of(*trial.user_char);
    return (ev.code == r || ev.code == c) ? 1 : 0;
}

namespace {

MatrixXd epoch_at(const P300Trial& trial, Index onset, Index len) {
    if (onset < 0 || onset + len > trial.sig.n_samples()) {
        throw BoundsError("epoch at sample " + std::to_string(onset) + " runs past the end of the recording");
    }
    return trial.sig.data().middleCols(onset, len);
}

VectorXd features_from_filtered(const P300Victim& v, const MatrixXd& filtered) {
    if (v.variant == Variant::xdawn_lr) {
        VectorXd s(filtered.size());
        Index k = 0;
        for (Index r = 0; r < filtered.rows(); ++r)
            for (Index c = 0; c < filtered.cols(); ++c) s(k++) = filtered(r, c);
        return s;
    }
    const MatrixXd& z = v.filters.Z;
    const Index k = z.rows();
    MatrixXd c(2 * k, 2 * k);
    c.topLeftCorner(k, k).noalias() = z * z.transpose();
    c.topRightCorner(k, k).noalias() = z * filtered.transpose();
    c.bottomLeftCorner(k, k) = c.topRightCorner(k, k).transpose();
    c.bottomRightCorner(k, k).noalias() = filtered * filtered.transpose();
    c.diagonal().array() += riemann::kCovarianceLoading * c.trace() / static_cast<double>(c.rows());
    return riemann::tangent_project(c, v.reference_invsqrt);
}

MatrixXd filter_epoch(const P300Victim& v, const MatrixXd& epoch) {
    if (epoch.rows() != v.n_channels() || epoch.cols() != v.epoch_len) {
        throw ParameterError("epoch is " + std::to_string(epoch.rows()) + "x" + std::to_string(epoch.cols()) +
                             ", victim expects " + std::to_string(v.n_channels()) + "x" +
                             std::to_string(v.epoch_len));
    }
    return v.filters.U * dsp::center_rows(epoch);
}

}  // namespace

LabeledEpochs labeled_epochs(std::span<const P300Trial> trials, Index epoch_len, const SpellerGrid& grid) {
    LabeledEpochs out;
    for (const auto& t : trials) {
        for (const auto& ev : t.schedule) {
            out.epochs.push_back(epoch_at(t, ev.onset, epoch_len));
            out.labels.push_back(event_label(t, ev, grid));
        }
    }
    return out;
}

P300Victim train_victim(std::span<const P300Trial> trials, const VictimConfig& config, const SpellerGrid& grid) {
    if (trials.empty()) throw ParameterError("no training trials");
    P300Victim v;
    v.variant = config.variant;
    v.fs = trials[0].sig.fs();
    v.epoch_len = static_cast<Index>(std::lround(config.epoch_ms * v.fs / 1000.0));
    const Index n_ch = trials[0].sig.n_channels();

    // Collect epoch references without copying the samples.
    struct Ref {
        const P300Trial* trial;
        Index onset;
        int label;
    };
    std::vector<Ref> refs;
    for (const auto& t : trials) {
        t.validate();
        if (t.sig.n_channels() != n_ch || t.sig.fs() != v.fs) {
            throw ParameterError("training trials differ in channel count or sampling rate");
        }
        for (const auto& ev : t.schedule) refs.push_back({&t, ev.onset, event_label(t, ev, grid)});
    }
    std::vector<int> labels;
    for (const auto& r : refs) labels.push_back(r.label);

    riemann::XdawnAccumulator acc(n_ch, v.epoch_len);
    for (const auto& r : refs) acc.add(epoch_at(*r.trial, r.onset, v.epoch_len), r.label);
    v.filters = acc.finish(config.n_filters);

    const Index n = static_cast<Index>(refs.size());
    MatrixXd features;
    if (v.variant == Variant::riemann) {
        std::vector<SpdMatrix> covs(refs.size(), SpdMatrix(MatrixXd::Identity(1, 1)));
        parallel_for(refs.size(), [&](std::size_t i) {
            covs[i] = riemann::augmented_covariance(epoch_at(*refs[i].trial, refs[i].onset, v.epoch_len), v.filters);
        });
        const SpdMatrix mean = riemann::spd_geometric_mean(covs, config.mean_tol);
        v.reference = mean.matrix();
        v.reference_invsqrt = riemann::sym_invsqrt(v.reference);
        const Index d = v.reference.rows();
        features.resize(n, d * (d + 1) / 2);
        parallel_for(refs.size(), [&](std::size_t i) {
            features.row(static_cast<Index>(i)) = riemann::tangent_project(covs[i].matrix(), v.reference_invsqrt);
        });
    } else {
        features.resize(n, 2 * v.filters.n_filters * v.epoch_len);
        parallel_for(refs.size(), [&](std::size_t i) {
            const MatrixXd f = filter_epoch(v, epoch_at(*refs[i].trial, refs[i].onset, v.epoch_len));
            features.row(static_cast<Index>(i)) = features_from_filtered(v, f).transpose();
        });
    }

    riemann::LogregOptions opts;
    opts.l2 = config.l2;
    v.clf = riemann::logreg_fit(features, labels, riemann::inverse_frequency_weights(labels), opts);
    return v;
}

VectorXd epoch_features(const P300Victim& victim, const MatrixXd& epoch) {
    return features_from_filtered(victim, filter_epoch(victim, epoch));
}

double epoch_prob(const P300Victim& victim, const MatrixXd& epoch) {
    return riemann::logreg_prob(victim.clf, epoch_features(victim, epoch));
}

std::vector<double> trial_probs(const P300Victim& victim, const P300Trial& trial) {
    std::vector<double> out;
    out.reserve(trial.schedule.size());
    for (const auto& ev : trial.schedule) out.push_back(epoch_prob(victim, epoch_at(trial, ev.onset, victim.epoch_len)));
    return out;
}

Decoded decode_scores(std::span<const StimulusEvent> schedule, std::span<const double> probs, int repeats_used,
                      const SpellerGrid& grid) {
    if (schedule.size() != probs.size()) throw ParameterError("one probability per schedule entry required");
    if (repeats_used < 1 || static_cast<std::size_t>(repeats_used) * 12 > schedule.size()) {
        throw ParameterError("requested " + std::to_string(repeats_used) + " repeats but the schedule has " +
                             std::to_string(schedule.size()) + " intensifications");
    }
    std::vector<std::size_t> order(schedule.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return schedule[a].onset < schedule[b].onset; });

    Decoded out;
    std::array<int, 12> counts{};
    for (std::size_t k = 0; k < static_cast<std::size_t>(repeats_used) * 12; ++k) {
        const auto& ev = schedule[order[k]];
        if (ev.code < 1 || ev.code > 12) throw ParameterError("stimulus code outside 1..12");
        out.scores[ev.code - 1] += probs[order[k]];
        ++counts[ev.code - 1];
    }
    for (int c = 0; c < 12; ++c) {
        if (counts[c] != repeats_used) {
            throw ParameterError("malformed schedule: code " + std::to_string(c + 1) + " appears " +
                                 std::to_string(counts[c]) + " times in the first " +
                                 std::to_string(repeats_used) + " repeats");
        }
    }
    out.row_code = 1;
    for (int c = 2; c <= 6; ++c)
        if (out.scores[c - 1] > out.scores[out.row_code - 1]) out.row_code = c;
    out.col_code = 7;
    for (int c = 8; c <= 12; ++c)
        if (out.scores[c - 1] > out.scores[out.col_code - 1]) out.col_code = c;
    out.character = grid.from_codes(out.row_code, out.col_code);
    return out;
}

Decoded decode_character(const P300Victim& victim, const P300Trial& trial, int repeats_used,
                         const SpellerGrid& grid) {
    const auto probs = trial_probs(victim, trial);
    return decode_scores(trial.schedule, probs, repeats_used, grid);
}

MatrixXd filtered_grad(const P300Victim& v, const MatrixXd& filtered, int label) {
    if (label != 0 && label != 1) throw ParameterError("label must be 0 or 1");
    const VectorXd s = features_from_filtered(v, filtered);
    const double dz = riemann::logreg_prob(v.clf, s) - label;  // dJ/dlogit

    if (v.variant == Variant::xdawn_lr) {
        MatrixXd g(filtered.rows(), filtered.cols());
        Index k = 0;
        for (Index r = 0; r < g.rows(); ++r)
            for (Index c = 0; c < g.cols(); ++c) g(r, c) = dz * v.clf.weights(k++);
        return g;
    }

    const MatrixXd& z = v.filters.Z;
    const Index k = z.rows();
    const Index d = 2 * k;
    MatrixXd c(d, d);
    c.topLeftCorner(k, k).noalias() = z * z.transpose();
    c.topRightCorner(k, k).noalias() = z * filtered.transpose();
    c.bottomLeftCorner(k, k) = c.topRightCorner(k, k).transpose();
    c.bottomRightCorner(k, k).noalias() = filtered * filtered.transpose();
    const double eta = riemann::kCovarianceLoading / static_cast<double>(d);
    c.diagonal().array() += eta * c.trace();

    const MatrixXd& r = v.reference_invsqrt;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(r * c * r);
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in input_grad");
    const MatrixXd upstream = dz * riemann::unvectorize_adjoint(v.clf.weights, d);
    const MatrixXd g_a = riemann::log_frechet_adjoint(eig, upstream);
    const MatrixXd g_c = r * g_a * r;

    return 2.0 * g_c.bottomLeftCorner(k, k) * z + 2.0 * g_c.bottomRightCorner(k, k) * filtered +
           2.0 * eta * g_c.trace() * filtered;
}

MatrixXd input_grad(const P300Victim& victim, const MatrixXd& epoch, int label) {
    const MatrixXd g = filtered_grad(victim, filter_epoch(victim, epoch), label);
    return dsp::center_rows(victim.filters.U.transpose() * g);
}

double epoch_loss(const P300Victim& victim, const MatrixXd& epoch, int label) {
    const double z = riemann::logreg_logit(victim.clf, epoch_features(victim, epoch));
    // -log sigmoid(z) for label 1, -log(1 - sigmoid(z)) for label 0
    const double m = label == 1 ? -z : z;
    return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

void P300Victim::save(const std::filesystem::path& path) const {
    MatrixArchive ar("p300-victim");
    ar.put_scalar("variant", variant == Variant::riemann ? 0.0 : 1.0);
    ar.put_scalar("fs", fs);
    ar.put_scalar("epoch_len", static_cast<double>(epoch_len));
    ar.put_scalar("n_filters", static_cast<double>(filters.n_filters));
    ar.put("U", filters.U);
    ar.put("Z", filters.Z);
    ar.put("xdawn_eigenvalues", filters.eigenvalues);
    if (variant == Variant::riemann) ar.put("reference", reference);
    ar.put("weights", clf.weights);
    ar.put_scalar("bias", clf.bias);
    ar.put_scalar("weight_nontarget", clf.class_weights.nontarget);
    ar.put_scalar("weight_target", clf.class_weights.target);
    ar.save(path);
}

P300Victim P300Victim::load(const std::filesystem::path& path) {
    const MatrixArchive ar = MatrixArchive::load(path);
    if (ar.kind() != "p300-victim") throw FormatError("archive is a '" + ar.kind() + "', not a p300-victim");
    P300Victim v;
    v.variant = ar.scalar("variant") == 0.0 ? Variant::riemann : Variant::xdawn_lr;
    v.fs = ar.scalar("fs");
    v.epoch_len = static_cast<Index>(ar.scalar("epoch_len"));
    v.filters.n_filters = static_cast<Index>(ar.scalar("n_filters"));
    v.filters.U = ar.get("U");
    v.filters.Z = ar.get("Z");
    v.filters.eigenvalues = ar.get("xdawn_eigenvalues");
    if (v.variant == Variant::riemann) {
        v.reference = ar.get("reference");
        v.reference_invsqrt = riemann::sym_invsqrt(v.reference);
    }
    v.clf.weights = ar.get("weights");
    v.clf.bias = ar.scalar("bias");
    v.clf.class_weights = {ar.scalar("weight_nontarget"), ar.scalar("weight_target")};
    if (v.filters.Z.cols() != v.epoch_len || v.filters.U.rows() != 2 * v.filters.n_filters) {
        throw FormatError("inconsistent p300 victim dimensions in " + path.string());
    }
    return v;
}

}  // namespace spellattack::p300
