#include "spellattack/attack_p300.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spellattack/archive.hpp"
#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"
#include "spellattack/parallel.hpp"
#include "spellattack/rng.hpp"

namespace spellattack::attack {

using p300::P300Trial;
using p300::P300Victim;

MatrixXd shape_template(const MatrixXd& direction, double fs, double epsilon, const TemplateShaping& shaping) {
    const auto coeffs = dsp::design_bandpass({shaping.order, shaping.low_hz, shaping.high_hz, fs});
    const Index len = static_cast<Index>(std::lround(shaping.duration_ms * fs / 1000.0));
    if (len < 1 || len > direction.cols()) {
        throw ParameterError("template duration exceeds the direction length");
    }
    MatrixXd p = dsp::filter_rows(direction, coeffs).leftCols(len);
    for (Index r = 0; r < p.rows(); ++r) {
        const double n = p.row(r).norm();
        if (!(n > 0.0)) throw DegenerateInputError("template channel " + std::to_string(r) + " is zero");
        p.row(r) *= epsilon / n;
    }
    return p;
}

namespace {

double mean_prob(const P300Victim& victim, std::span<const MatrixXd> epochs, const MatrixXd* pattern) {
    std::vector<double> probs(epochs.size());
    parallel_for(epochs.size(), [&](std::size_t i) {
        if (pattern) {
            MatrixXd e = epochs[i];
            e.leftCols(pattern->cols()) += *pattern;
            probs[i] = p300::epoch_prob(victim, e);
        } else {
            probs[i] = p300::epoch_prob(victim, epochs[i]);
        }
    });
    double s = 0.0;
    for (double p : probs) s += p;
    return s / static_cast<double>(probs.size());
}

P300Template finish(const P300Victim& victim, std::span<const MatrixXd> epochs, MatrixXd direction,
                    std::size_t skipped, double epsilon, const TemplateShaping& shaping) {
    P300Template t;
    t.epsilon = epsilon;
    t.fs = victim.fs;
    t.epochs_used = epochs.size() - skipped;
    t.epochs_skipped = skipped;
    if (t.epochs_used == 0) throw DegenerateInputError("every non-target epoch had a zero gradient");
    t.pattern = shape_template(direction, victim.fs, epsilon, shaping);
    t.mean_prob_before = mean_prob(victim, epochs, nullptr);
    t.mean_prob_after = mean_prob(victim, epochs, &t.pattern);
    if (!(t.mean_prob_after > t.mean_prob_before)) {
        t.pattern = -t.pattern;
        t.sign_flipped = true;
        t.mean_prob_after = mean_prob(victim, epochs, &t.pattern);
    }
    return t;
}

}  // namespace

P300Template craft_template(const P300Victim& victim, std::span<const MatrixXd> nontarget_epochs, double epsilon,
                            const TemplateShaping& shaping) {
    if (nontarget_epochs.empty()) throw ParameterError("no non-target epochs to craft from");
    std::vector<MatrixXd> grads(nontarget_epochs.size());
    parallel_for(nontarget_epochs.size(), [&](std::size_t i) {
        grads[i] = p300::input_grad(victim, nontarget_epochs[i], 1);
    });
    MatrixXd direction = MatrixXd::Zero(victim.n_channels(), victim.epoch_len);
    std::size_t skipped = 0;
    for (const auto& g : grads) {
        const double n = g.norm();
        if (!(n > 0.0)) {
            ++skipped;
            continue;
        }
        direction += g / n;
    }
    return finish(victim, nontarget_epochs, std::move(direction), skipped, epsilon, shaping);
}

P300Template craft_template_from_trials(const P300Victim& victim, std::span<const P300Trial> trials,
                                        double epsilon, const TemplateShaping& shaping,
                                        const p300::SpellerGrid& grid) {
    std::vector<MatrixXd> epochs;
    for (const auto& t : trials) {
        for (const auto& ev : t.schedule) {
            if (p300::event_label(t, ev, grid) != 0) continue;
            if (ev.onset + victim.epoch_len > t.sig.n_samples()) throw BoundsError("epoch runs past the recording");
            epochs.emplace_back(t.sig.data().middleCols(ev.onset, victim.epoch_len));
        }
    }
    return craft_template(victim, epochs, epsilon, shaping);
}

P300Template gaussian_template(Index n_channels, Index direction_samples, double fs, double epsilon,
                               std::uint64_t seed, const TemplateShaping& shaping) {
    Rng rng(seed);
    MatrixXd noise(n_channels, direction_samples);
    for (Index r = 0; r < n_channels; ++r)
        for (Index c = 0; c < direction_samples; ++c) noise(r, c) = rng.normal();
    P300Template t;
    t.kind = "gaussian";
    t.epsilon = epsilon;
    t.fs = fs;
    t.seed = seed;
    t.pattern = shape_template(noise, fs, epsilon, shaping);
    return t;
}

InjectionPlan plan_injection(const P300Trial& trial, char attacker_char, Index delay_samples,
                             const p300::SpellerGrid& grid) {
    if (delay_samples < 0) throw ParameterError("delay must be non-negative");
    InjectionPlan plan;
    plan.attacker_char = attacker_char;
    std::tie(plan.row_code, plan.col_code) = grid.codes_of(attacker_char);
    plan.delay_samples = delay_samples;
    for (const auto& ev : trial.schedule) {
        if (ev.code == plan.row_code || ev.code == plan.col_code) plan.onsets.push_back(ev.onset + delay_samples);
    }
    return plan;
}

P300Trial inject(const P300Trial& trial, const InjectionPlan& plan, const MatrixXd& pattern) {
    if (pattern.rows() != trial.sig.n_channels()) throw ParameterError("template channel count mismatch");
    MatrixXd data = trial.sig.data();
    const Index n = data.cols();
    for (Index onset : plan.onsets) {
        if (onset >= n) continue;
        const Index len = std::min(pattern.cols(), n - onset);
        data.middleCols(onset, len) += pattern.leftCols(len);
    }
    return {trial.sig.with_data(std::move(data)), trial.schedule, trial.user_char};
}

Eigen::Array<bool, Eigen::Dynamic, 1> injection_mask(Index n_samples, const InjectionPlan& plan, Index pattern_len) {
    Eigen::Array<bool, Eigen::Dynamic, 1> mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_samples, false);
    for (Index onset : plan.onsets) {
        for (Index t = onset; t < std::min(n_samples, onset + pattern_len); ++t) mask(t) = true;
    }
    return mask;
}

void P300Template::save(const std::string& stem) const {
    MatrixArchive ar("p300-template");
    ar.put("pattern", pattern);
    ar.save(stem + ".bin");
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = kind;
    j["epsilon"] = epsilon;
    j["fs"] = fs;
    j["victim_id"] = victim_id;
    j["dataset_id"] = dataset_id;
    j["sign_flipped"] = sign_flipped;
    j["sign_check_passed"] = mean_prob_after > mean_prob_before;
    j["mean_prob_before"] = mean_prob_before;
    j["mean_prob_after"] = mean_prob_after;
    j["epochs_used"] = epochs_used;
    j["epochs_skipped"] = epochs_skipped;
    j["seed"] = seed;
    j["channels"] = pattern.rows();
    j["samples"] = pattern.cols();
    std::ofstream f(stem + ".json", std::ios::trunc);
    if (!f) throw Error("cannot write " + stem + ".json");
    f << j.dump(2) << "\n";
}

P300Template P300Template::load(const std::string& stem) {
    const MatrixArchive ar = MatrixArchive::load(stem + ".bin");
    if (ar.kind() != "p300-template") throw FormatError(stem + ".bin is not a p300 template");
    P300Template t;
    t.pattern = ar.get("pattern");
    std::ifstream f(stem + ".json");
    if (!f) throw Error("cannot open " + stem + ".json");
    try {
        const auto j = nlohmann::json::parse(f);
        t.kind = j.at("kind").get<std::string>();
        t.epsilon = j.at("epsilon").get<double>();
        t.fs = j.at("fs").get<double>();
        t.victim_id = j.value("victim_id", "");
        t.dataset_id = j.value("dataset_id", "");
        t.sign_flipped = j.value("sign_flipped", false);
        t.mean_prob_before = j.value("mean_prob_before", 0.0);
        t.mean_prob_after = j.value("mean_prob_after", 0.0);
        t.epochs_used = j.value("epochs_used", std::size_t{0});
        t.epochs_skipped = j.value("epochs_skipped", std::size_t{0});
        t.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(stem + ".json: " + e.what());
    }
    return t;
}

}  // namespace spellattack::attack
