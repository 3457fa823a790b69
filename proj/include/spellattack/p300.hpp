#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spellattack/riemann.hpp"
#include "spellattack/signal.hpp"

namespace spellattack::p300 {

/// 6x6 speller matrix. Stimulus codes 1-6 intensify rows, 7-12 columns.
class SpellerGrid {
public:
    /// "ABCDEF/GHIJKL/MNOPQR/STUVWX/YZ1234/56789_" row by row.
    SpellerGrid();
    explicit SpellerGrid(std::string cells);

    char at(int row, int col) const;  // 0-based
    char from_codes(int row_code, int col_code) const;
    /// (row code, column code); throws ParameterError for unknown characters.
    std::pair<int, int> codes_of(char c) const;
    bool contains(char c) const;
    const std::string& cells() const noexcept { return cells_; }

private:
    std::string cells_;
};

struct StimulusEvent {
    Index onset = 0;  // sample index in the trial signal
    int code = 0;     // 1..12
    std::optional<bool> is_target;
};

/// One character: the continuous recording and its intensification log.
struct P300Trial {
    Signal sig;
    std::vector<StimulusEvent> schedule;
    std::optional<char> user_char;

    /// Throws ParameterError unless onsets strictly increase (in schedule
    /// order) and codes are in 1..12.
    void validate() const;
    int repeats() const { return static_cast<int>(schedule.size() / 12); }
};

enum class Variant { riemann, xdawn_lr };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Recording/protocol constants of a P300 setup.
struct P300Protocol {
    std::string name;
    double fs = 240.0;
    double soa_ms = 175.0;      // intensification + blank
    double epoch_ms = 600.0;
    double template_ms = 350.0;
    int test_repeats = 15;
    Index n_filters = 4;        // xdawn filters per class
    double epsilon = 0.5;

    Index epoch_samples() const;
    Index template_samples() const;
    Index soa_samples() const;
    /// Stimulation time of one character with `repeats` repeats.
    double seconds_per_character(int repeats) const { return repeats * 12 * soa_ms / 1000.0; }
    /// Time per selection used for ITR: first intensification to the end of
    /// the last epoch, (12 repeats - 1) SOA + epoch.
    double selection_seconds(int repeats) const { return ((repeats * 12 - 1) * soa_ms + epoch_ms) / 1000.0; }

    static P300Protocol competition();  // 240 Hz, 175 ms SOA, 8 filters per class
    static P300Protocol als();          // 256 Hz, 250 ms SOA, 10 test repeats, eps 0.8
    static P300Protocol synthetic();
};

struct VictimConfig {
    Variant variant = Variant::riemann;
    Index n_filters = 4;
    double epoch_ms = 600.0;
    double l2 = 1.0;
    double mean_tol = 1e-9;
};

struct P300Victim {
    Variant variant = Variant::riemann;
    double fs = 0.0;
    Index epoch_len = 0;
    riemann::XdawnFilters filters;
    MatrixXd reference;         // C_f, riemann variant only
    MatrixXd reference_invsqrt;
    riemann::LogisticModel clf;

    Index n_channels() const { return filters.n_channels(); }

    void save(const std::filesystem::path& path) const;
    static P300Victim load(const std::filesystem::path& path);
};

/// Epochs [onset, onset + epoch_len) for every schedule entry. Labels come
/// from `is_target` or, failing that, from the trial's user character.
struct LabeledEpochs {
    std::vector<MatrixXd> epochs;
    std::vector<int> labels;
};
LabeledEpochs labeled_epochs(std::span<const P300Trial> trials, Index epoch_len,
                             const SpellerGrid& grid = SpellerGrid());
int event_label(const P300Trial& trial, const StimulusEvent& ev, const SpellerGrid& grid);

P300Victim train_victim(std::span<const P300Trial> trials, const VictimConfig& config,
                        const SpellerGrid& grid = SpellerGrid());

VectorXd epoch_features(const P300Victim& victim, const MatrixXd& epoch);
double epoch_prob(const P300Victim& victim, const MatrixXd& epoch);

/// epoch_prob for every schedule entry, in schedule order.
std::vector<double> trial_probs(const P300Victim& victim, const P300Trial& trial);

struct Decoded {
    char character = '?';
    int row_code = 0;
    int col_code = 0;
    std::array<double, 12> scores{};  // summed probabilities, index code-1
};

/// Voting over the first `repeats_used * 12` intensifications in onset
/// order. Ties go to the lowest code.
Decoded decode_scores(std::span<const StimulusEvent> schedule, std::span<const double> probs, int repeats_used,
                      const SpellerGrid& grid = SpellerGrid());
Decoded decode_character(const P300Victim& victim, const P300Trial& trial, int repeats_used,
                         const SpellerGrid& grid = SpellerGrid());

/// Gradient of the cross-entropy loss J(epoch, label) with respect to the
/// xdawn-filtered epoch U * centre(epoch).
MatrixXd filtered_grad(const P300Victim& victim, const MatrixXd& filtered, int label);
/// Gradient of J(epoch, label) with respect to the raw epoch.
MatrixXd input_grad(const P300Victim& victim, const MatrixXd& epoch, int label);
/// Cross-entropy loss J(epoch, label).
double epoch_loss(const P300Victim& victim, const MatrixXd& epoch, int label);

}  // namespace spellattack::p300
