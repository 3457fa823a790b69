#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spellattack/attack_p300.hpp"
#include "spellattack/attack_ssvep.hpp"
#include "spellattack/p300.hpp"
#include "spellattack/ssvep.hpp"

namespace spellattack::eval {

/// Seconds per SSVEP selection: 0.13 s latency plus the 1.25 s window.
inline constexpr double kSsvepSelectionSeconds = 1.38;

/// One attacker character (or one noise condition when `attacker` is empty).
struct AttackRow {
    std::string attacker;
    std::optional<double> attacker_score;
    double user_score = 0.0;
    std::optional<double> attacker_itr;
    double user_itr = 0.0;
    std::optional<double> period_spr_db;  // absent for an unperturbed run
    std::optional<double> trial_spr_db;
    int n_trials = 0;
};

/// Per-attacker rows plus their arithmetic mean. Reports serialise to a
/// fixed column order:
///   attacker,attacker_score,user_score,attacker_itr,user_itr,
///   period_spr_db,trial_spr_db,n_trials
/// with the aggregate row last (attacker "mean"); absent values are empty
/// cells in CSV and null in JSON.
struct AttackReport {
    std::string paradigm;     // "p300" | "ssvep"
    std::string victim;       // victim variant or decoder name
    std::string perturbation; // "none" | "adversarial" | "gaussian" | "single" | "compound"
    int repeats = 0;          // P300 only
    Index delay_samples = 0;
    int n_targets = 0;        // Q
    double minutes_per_selection = 0.0;
    std::vector<AttackRow> rows;

    AttackRow aggregate() const;
    std::string to_csv() const;
    /// `meta` is merged into the top-level object.
    std::string to_json(const std::string& meta_json = "{}") const;
};

/// Format a double as the shortest string that parses back to the same value.
std::string format_double(double v);

// ---------------------------------------------------------------- P300

struct P300Scoring {
    std::string attackers;   // characters to force; empty with an empty pattern
    std::vector<int> repeats{15};
    Index delay_samples = 0;
    std::string perturbation = "adversarial";
};

/// Score `pattern` (empty matrix: clean run) against every attacker character
/// on every test trial, once per entry of `scoring.repeats`. A run with r
/// repeats sees the first 12 r intensifications and only the injections
/// that belong to them. Trial SPR spans the first used onset to the end of
/// the last used epoch; period SPR covers the injected samples.
std::vector<AttackReport> score_p300(const p300::P300Victim& victim, std::span<const p300::P300Trial> test,
                                     const MatrixXd& pattern, const P300Scoring& scoring,
                                     const p300::P300Protocol& protocol,
                                     const p300::SpellerGrid& grid = p300::SpellerGrid());

/// Clean user accuracy at `repeats`.
double p300_accuracy(const p300::P300Victim& victim, std::span<const p300::P300Trial> test, int repeats,
                     const p300::SpellerGrid& grid = p300::SpellerGrid());

// ---------------------------------------------------------------- SSVEP

/// CCA or FBCCA over the victim's analysis window.
class SsvepVictim {
public:
    static SsvepVictim cca(const ssvep::FrequencyGrid& grid, Index n_samples, double fs, int n_harmonics = 5);
    static SsvepVictim fbcca(const ssvep::FrequencyGrid& grid, Index n_samples, double fs, int n_harmonics = 5,
                             const ssvep::FilterBankConfig& config = {});

    Index decode(const MatrixXd& window) const;
    std::string name() const;
    const ssvep::FrequencyGrid& grid() const;
    double fs() const;

private:
    std::variant<ssvep::CcaDecoder, ssvep::FbccaDecoder> impl_;
    explicit SsvepVictim(std::variant<ssvep::CcaDecoder, ssvep::FbccaDecoder> impl) : impl_(std::move(impl)) {}
};

/// Victim's view of a set of trials: filtered recordings and their windows.
struct SsvepWindows {
    std::vector<MatrixXd> windows;
    std::vector<double> window_energy;
    std::vector<double> trial_energy;  // filtered full recording
    std::vector<Index> targets;

    std::size_t size() const { return windows.size(); }
};
SsvepWindows ssvep_windows(std::span<const ssvep::SsvepTrial> trials);

/// Per-trial perturbation for attacker `a` (index into the grid, or -1 for
/// a noise condition) and trial `t`; an empty matrix means none.
using PerturbationFn = std::function<MatrixXd(Index a, std::size_t t)>;

/// One row per attacker index (or a single row for attacker -1). Window
/// perturbations are added inside the analysis window only.
AttackReport score_ssvep(const SsvepVictim& victim, const SsvepWindows& test, std::span<const Index> attackers,
                         const PerturbationFn& perturbation, const std::string& perturbation_name);

/// Crafted templates, one per attacker index, shifted by `delay(a)` samples.
AttackReport score_ssvep_templates(const SsvepVictim& victim, const SsvepWindows& test,
                                   std::span<const attack::SsvepTemplate> templates,
                                   const std::function<Index(Index)>& delay = {});

/// Noise baselines at `spr_db` against each trial's window energy. Seeds are
/// derived from `seed` and the trial index.
AttackReport score_ssvep_noise(const SsvepVictim& victim, const SsvepWindows& test, const std::string& kind,
                               double spr_db, std::uint64_t seed);

double ssvep_accuracy(const SsvepVictim& victim, const SsvepWindows& test);

// ---------------------------------------------------------------- sweeps

struct DelayPoint {
    double delay = 0.0;  // samples (P300) or fraction of the attacker period (SSVEP)
    double user_mean = 0.0, user_sd = 0.0;
    double attacker_mean = 0.0, attacker_sd = 0.0;
};

/// Mean and population sd across attacker characters at each delay.
std::vector<DelayPoint> p300_delay_sweep(const p300::P300Victim& victim, std::span<const p300::P300Trial> test,
                                         const MatrixXd& pattern, const std::string& attackers, int repeats,
                                         std::span<const Index> delays, const p300::P300Protocol& protocol,
                                         const p300::SpellerGrid& grid = p300::SpellerGrid());

/// Attacker a's template delayed by round(fraction * fs / f_a) samples.
std::vector<DelayPoint> ssvep_delay_sweep(const SsvepVictim& victim, const SsvepWindows& test,
                                          std::span<const attack::SsvepTemplate> templates,
                                          std::span<const double> fractions, double fs);

std::string delay_sweep_csv(std::span<const DelayPoint> points, const std::string& delay_column);

/// Entry (i, j) = score(i, j), computed for every pair.
MatrixXd transfer_matrix(std::size_t n_sources, std::size_t n_targets,
                         const std::function<double(std::size_t, std::size_t)>& score);

std::string matrix_csv(const MatrixXd& m, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels);

}  // namespace spellattack::eval
