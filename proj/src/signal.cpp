#include "spellattack/signal.hpp"

#include "spellattack/error.hpp"

namespace spellattack {

Signal::Signal(MatrixXd data, double fs, std::vector<std::string> channel_names)
    : data_(std::move(data)), fs_(fs), names_(std::move(channel_names)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
        throw ParameterError("signal must have at least one channel and one sample");
    }
    if (!(fs_ > 0.0)) {
        throw ParameterError("sampling rate must be positive");
    }
    if (!data_.allFinite()) {
        throw ParameterError("signal contains non-finite samples");
    }
    if (!names_.empty() && static_cast<Index>(names_.size()) != data_.rows()) {
        throw ParameterError("channel name count does not match channel count");
    }
}

}  // namespace spellattack
