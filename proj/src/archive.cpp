#include "spellattack/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spellattack/error.hpp"

namespace spellattack {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'A', 'T', 'A', 'R', 'C', 'H'};

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void write_pod(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T pod(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(std::string("truncated archive while reading ") + what,
                              static_cast<std::int64_t>(pos_));
        }
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void MatrixArchive::put(const std::string& name, MatrixXd m) { entries_[name] = std::move(m); }

void MatrixArchive::put_scalar(const std::string& name, double v) {
    MatrixXd m(1, 1);
    m(0, 0) = v;
    put(name, std::move(m));
}

const MatrixXd& MatrixArchive::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw FormatError("archive has no entry '" + name + "'");
    return it->second;
}

double MatrixArchive::scalar(const std::string& name) const {
    const MatrixXd& m = get(name);
    if (m.size() != 1) throw FormatError("archive entry '" + name + "' is not a scalar");
    return m(0, 0);
}

std::vector<std::string> MatrixArchive::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

std::string MatrixArchive::serialize() const {
    std::string out(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(kind_.size()));
    out += kind_;
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, m] : entries_) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
        for (Index r = 0; r < m.rows(); ++r) {
            for (Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
        }
    }
    return out;
}

MatrixArchive MatrixArchive::deserialize(const std::string& bytes) {
    Reader rd(bytes);
    if (rd.str(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
        throw FormatError("not a matrix archive (bad magic)", 0);
    }
    const auto version = rd.pod<std::uint32_t>("version");
    if (version != kVersion) {
        throw VersionError("unsupported archive version " + std::to_string(version), 8);
    }
    MatrixArchive ar;
    ar.kind_ = rd.str(rd.pod<std::uint32_t>("kind length"), "kind");
    const auto n = rd.pod<std::uint32_t>("entry count");
    for (std::uint32_t e = 0; e < n; ++e) {
        std::string name = rd.str(rd.pod<std::uint32_t>("name length"), "name");
        const auto rows = rd.pod<std::uint64_t>("rows");
        const auto cols = rd.pod<std::uint64_t>("cols");
        if (rows > (1ull << 31) || cols > (1ull << 31)) {
            throw FormatError("implausible matrix size for '" + name + "'", static_cast<std::int64_t>(rd.pos()));
        }
        MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
        for (Index r = 0; r < m.rows(); ++r) {
            for (Index c = 0; c < m.cols(); ++c) m(r, c) = rd.pod<double>("matrix data");
        }
        ar.entries_[name] = std::move(m);
    }
    if (!rd.done()) throw FormatError("trailing bytes after archive", static_cast<std::int64_t>(rd.pos()));
    return ar;
}

void MatrixArchive::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    const std::string bytes = serialize();
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("failed writing " + path.string());
}

MatrixArchive MatrixArchive::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return deserialize(ss.str());
}

}  // namespace spellattack
