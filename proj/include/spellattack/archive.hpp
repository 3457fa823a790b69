#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spellattack/signal.hpp"

namespace spellattack {

/// Named dense matrices in a flat, versioned binary file.
///
/// Layout (all integers and floats little-endian):
///   "SPATARCH"            8-byte magic
///   u32 version           currently 1
///   u32 kind length, kind bytes
///   u32 entry count
///   per entry: u32 name length, name bytes, u64 rows, u64 cols,
///              rows*cols f64 values in row-major order
class MatrixArchive {
public:
    static constexpr std::uint32_t kVersion = 1;

    MatrixArchive() = default;
    explicit MatrixArchive(std::string kind) : kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }
    void put(const std::string& name, MatrixXd m);
    void put_scalar(const std::string& name, double v);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    const MatrixXd& get(const std::string& name) const;
    double scalar(const std::string& name) const;
    std::vector<std::string> names() const;

    std::string serialize() const;
    static MatrixArchive deserialize(const std::string& bytes);

    void save(const std::filesystem::path& path) const;
    static MatrixArchive load(const std::filesystem::path& path);

private:
    std::string kind_;
    std::map<std::string, MatrixXd> entries_;
};

}  // namespace spellattack
