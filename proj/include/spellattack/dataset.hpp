#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spellattack/p300.hpp"
#include "spellattack/ssvep.hpp"

namespace spellattack::data {

inline constexpr int kSchemaVersion = 1;

struct P300Dataset {
    std::string subject_id;
    double fs = 0.0;
    std::vector<std::string> channel_names;
    p300::SpellerGrid grid;
    std::vector<p300::P300Trial> train;
    std::vector<p300::P300Trial> test;
};

struct SsvepDataset {
    std::string subject_id;
    double fs = 0.0;
    std::vector<std::string> channel_names;
    ssvep::FrequencyGrid grid;
    std::vector<ssvep::SsvepTrial> trials;

    /// Trials of one block, in stored order.
    std::vector<ssvep::SsvepTrial> block(int b) const;
    std::vector<int> blocks() const;
};

/// Directory layout:
///   manifest.json   schema_version, paradigm, fs, channels, layout,
///                   subject_id and the trial index
///   trials/<id>.f32 little-endian float32, row-major channels x samples
///   events.csv      trial_id,onset_sample,code,label
/// Samples are stored as float32, so values that are not exactly
/// representable are rounded on write.
void write_dataset(const std::filesystem::path& dir, const P300Dataset& d);
void write_dataset(const std::filesystem::path& dir, const SsvepDataset& d);

/// "p300" or "ssvep". Throws VersionError for an unknown schema_version.
std::string dataset_paradigm(const std::filesystem::path& dir);
P300Dataset read_p300_dataset(const std::filesystem::path& dir);
SsvepDataset read_ssvep_dataset(const std::filesystem::path& dir);

}  // namespace spellattack::data
