#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spellattack {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Multichannel sampled data, channels in rows.
///
/// Invariants (checked on construction): at least one channel and one
/// sample, fs > 0, every sample finite, and `channel_names` either empty or
/// one name per row.
class Signal {
public:
    Signal(MatrixXd data, double fs, std::vector<std::string> channel_names = {});

    const MatrixXd& data() const noexcept { return data_; }
    double fs() const noexcept { return fs_; }
    const std::vector<std::string>& channel_names() const noexcept { return names_; }

    Index n_channels() const noexcept { return data_.rows(); }
    Index n_samples() const noexcept { return data_.cols(); }

    /// Same fs and channel names, new samples.
    Signal with_data(MatrixXd data) const { return Signal(std::move(data), fs_, names_); }

private:
    MatrixXd data_;
    double fs_;
    std::vector<std::string> names_;
};

}  // namespace spellattack
