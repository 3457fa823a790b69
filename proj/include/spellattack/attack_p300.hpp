#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spellattack/p300.hpp"

namespace spellattack::attack {

/// Fixed perturbation added after every attacker intensification.
struct P300Template {
    MatrixXd pattern;  // channels x template samples
    double epsilon = 0.0;
    double fs = 0.0;
    std::string kind = "adversarial";  // or "gaussian"
    std::string victim_id;
    std::string dataset_id;
    bool sign_flipped = false;
    double mean_prob_before = 0.0;  // mean target probability over D_NT
    double mean_prob_after = 0.0;   // ... with the template added at onset
    std::size_t epochs_used = 0;
    std::size_t epochs_skipped = 0;  // zero-gradient epochs
    std::uint64_t seed = 0;          // gaussian templates only

    void save(const std::string& stem) const;  // <stem>.bin + <stem>.json
    static P300Template load(const std::string& stem);
};

struct TemplateShaping {
    double low_hz = 0.1;
    double high_hz = 15.0;
    int order = 4;
    double duration_ms = 350.0;
};

/// Shared post-processing: causal bandpass of the raw direction, keep the
/// first `duration_ms`, scale every channel to unit L2 norm, multiply by
/// epsilon.
MatrixXd shape_template(const MatrixXd& direction, double fs, double epsilon, const TemplateShaping& shaping = {});

/// Universal template from the summed, normalised loss gradients of the
/// non-target epochs (target label). The global sign is chosen so the
/// mean target probability over `nontarget_epochs` rises when the template
/// is added at the epoch onset.
P300Template craft_template(const p300::P300Victim& victim, std::span<const MatrixXd> nontarget_epochs,
                            double epsilon, const TemplateShaping& shaping = {});

/// Same, streaming the non-target epochs out of labelled training trials.
P300Template craft_template_from_trials(const p300::P300Victim& victim, std::span<const p300::P300Trial> trials,
                                        double epsilon, const TemplateShaping& shaping = {},
                                        const p300::SpellerGrid& grid = p300::SpellerGrid());

/// Standard normal noise pushed through shape_template; seeded.
P300Template gaussian_template(Index n_channels, Index direction_samples, double fs, double epsilon,
                               std::uint64_t seed, const TemplateShaping& shaping = {});

struct InjectionPlan {
    char attacker_char = '?';
    int row_code = 0;
    int col_code = 0;
    Index delay_samples = 0;
    std::vector<Index> onsets;  // already shifted by the delay
};

InjectionPlan plan_injection(const p300::P300Trial& trial, char attacker_char, Index delay_samples,
                             const p300::SpellerGrid& grid = p300::SpellerGrid());

/// Add `pattern` at every planned onset. Overlapping windows sum; windows
/// running past the end of the recording are clipped.
p300::P300Trial inject(const p300::P300Trial& trial, const InjectionPlan& plan, const MatrixXd& pattern);

/// 0/1 mask (same shape as the trial) of the samples touched by the plan.
Eigen::Array<bool, Eigen::Dynamic, 1> injection_mask(Index n_samples, const InjectionPlan& plan, Index pattern_len);

}  // namespace spellattack::attack
