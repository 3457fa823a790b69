#pragma once

#include <cstdint>
#include <string>

#include "spellattack/dataset.hpp"
#include "spellattack/rng.hpp"

namespace spellattack::synth {

/// Generator settings. The background is a few pink-noise sources mixed onto
/// the channels plus independent white sensor noise; evoked activity enters
/// through its own spatial pattern. Every recording is z-normalised per
/// channel and rounded to float32.
///
/// Random draws: the subject-level quantities (mixing, patterns, character
/// sequence) come from `subject_seed`, the per-trial noise from `seed` with
/// one stream per trial index.
struct SynthConfig {
    double fs = 240.0;
    Index n_channels = 16;
    Index n_background_sources = 6;
    double background_sd = 1.0;
    double noise_sd = 0.2;

    // P300
    double p300_amplitude = 0.12;
    double latency_ms = 300.0;
    double width_ms = 80.0;    // standard deviation of the Gaussian bump
    VectorXd spatial_pattern;  // empty: drawn from subject_seed
    double soa_ms = 175.0;
    double lead_ms = 500.0;
    double tail_ms = 1000.0;

    // SSVEP
    std::vector<double> ssvep_harmonic_amps{1.0, 0.6, 0.3};
    double ssvep_amplitude = 1.0;
    double onset_delay_ms = 135.0;
    double ssvep_duration_ms = 2000.0;
    /// Channels x (1 + n_background_sources); column 0 carries the SSVEP.
    /// Empty: drawn from subject_seed, with column 0 a random combination
    /// of the background columns.
    MatrixXd mixing;

    std::uint64_t seed = 1;
    std::uint64_t subject_seed = 1;
    std::string subject_id = "synthetic";

    static SynthConfig p300_default();
    static SynthConfig ssvep_default();
    void validate() const;
};

/// Unit-sd pink noise (1/sqrt(f) amplitude shaping of white noise, DC removed).
VectorXd pink_noise(Index n, Rng& rng);

/// Background mixing (channels x sources) and evoked pattern drawn from the
/// subject seed, or taken from the config when given.
MatrixXd background_mixing(const SynthConfig& cfg);
VectorXd p300_pattern(const SynthConfig& cfg);
VectorXd ssvep_pattern(const SynthConfig& cfg);

/// Continuous single-character recordings with 12 * repeats intensifications
/// at the configured SOA. Each repeat is a fresh permutation of the twelve
/// codes with no code shown twice in a row across repeat boundaries.
/// Training characters precede test characters in the subject's sequence.
data::P300Dataset synth_p300_dataset(const SynthConfig& cfg, int n_train_chars, int n_test_chars, int repeats,
                                     const p300::SpellerGrid& grid = p300::SpellerGrid());

/// One trial per (block, frequency), blocks 0..blocks-1, frequencies in grid
/// order. The stimulus starts `lead_ms` into the recording and the response
/// `onset_delay_ms` later.
data::SsvepDataset synth_ssvep_dataset(const SynthConfig& cfg, const ssvep::FrequencyGrid& grid, int blocks);

/// Average target minus non-target epoch of a dataset split, channel by channel.
MatrixXd erp_difference(std::span<const p300::P300Trial> trials, Index epoch_len,
                        const p300::SpellerGrid& grid = p300::SpellerGrid());

}  // namespace spellattack::synth
