#include "spellattack/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spellattack/error.hpp"

namespace spellattack::data {

static_assert(std::endian::native == std::endian::little, "payloads are read and written as native little-endian");

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ssvep::SsvepTrial> SsvepDataset::block(int b) const {
    std::vector<ssvep::SsvepTrial> out;
    for (const auto& t : trials)
        if (t.block == b) out.push_back(t);
    return out;
}

std::vector<int> SsvepDataset::blocks() const {
    std::set<int> s;
    for (const auto& t : trials) s.insert(t.block);
    return {s.begin(), s.end()};
}

namespace {

std::string trial_file(std::size_t id) {
    std::ostringstream ss;
    ss << "trials/" << std::setw(5) << std::setfill('0') << id << ".f32";
    return ss.str();
}

void write_payload(const fs::path& path, const MatrixXd& x) {
    std::vector<float> buf(static_cast<std::size_t>(x.size()));
    std::size_t k = 0;
    for (Index r = 0; r < x.rows(); ++r)
        for (Index c = 0; c < x.cols(); ++c) buf[k++] = static_cast<float>(x(r, c));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw Error("write failed: " + path.string());
}

MatrixXd read_payload(const fs::path& path, const std::string& trial, Index rows, Index cols) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("trial " + trial + ": cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto expected = static_cast<std::size_t>(rows * cols) * sizeof(float);
    if (bytes.size() != expected) {
        throw FormatError("trial " + trial + ": payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                              std::to_string(expected),
                          static_cast<std::int64_t>(std::min(bytes.size(), expected)));
    }
    MatrixXd x(rows, cols);
    std::size_t off = 0;
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            float v;
            std::memcpy(&v, bytes.data() + off, sizeof v);
            if (!std::isfinite(v)) {
                throw FormatError("trial " + trial + ": non-finite sample", static_cast<std::int64_t>(off));
            }
            x(r, c) = v;
            off += sizeof v;
        }
    }
    return x;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

json manifest_head(const std::string& paradigm, const std::string& subject, double fs,
                   const std::vector<std::string>& channels, Index n_channels) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["paradigm"] = paradigm;
    j["subject_id"] = subject;
    j["fs"] = fs;
    std::vector<std::string> names = channels;
    if (names.empty())
        for (Index i = 0; i < n_channels; ++i) names.push_back("ch" + std::to_string(i + 1));
    j["channels"] = names;
    return j;
}

json read_manifest(const fs::path& dir) {
    const fs::path path = dir / "manifest.json";
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what(), static_cast<std::int64_t>(e.byte));
    }
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        throw FormatError(path.string() + ": missing schema_version");
    }
    const int v = j["schema_version"].get<int>();
    if (v != kSchemaVersion) {
        throw VersionError(path.string() + ": unsupported schema_version " + std::to_string(v));
    }
    return j;
}

struct EventRow {
    std::size_t trial = 0;
    Index onset = 0;
    int code = 0;
    std::string label;
};

std::vector<EventRow> read_events(const fs::path& dir) {
    const fs::path path = dir / "events.csv";
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string());
    std::vector<EventRow> rows;
    std::string line;
    std::int64_t offset = 0;
    bool header = true;
    while (std::getline(f, line)) {
        const std::int64_t here = offset;
        offset += static_cast<std::int64_t>(line.size()) + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (header) {
            if (line != "trial_id,onset_sample,code,label") throw FormatError(path.string() + ": bad header", 0);
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (cells.size() != 4) throw FormatError(path.string() + ": expected 4 fields", here);
        try {
            std::size_t used = 0;
            EventRow r;
            r.trial = std::stoul(cells[0], &used);
            if (used != cells[0].size()) throw std::invalid_argument("trial_id");
            r.onset = std::stol(cells[1], &used);
            if (used != cells[1].size()) throw std::invalid_argument("onset_sample");
            r.code = std::stoi(cells[2], &used);
            if (used != cells[2].size()) throw std::invalid_argument("code");
            r.label = cells[3];
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": malformed event row", here);
        }
    }
    if (header) throw FormatError(path.string() + ": empty events file", 0);
    return rows;
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError(where + ": missing or invalid '" + key + "'");
    }
}

}  // namespace

void write_dataset(const fs::path& dir, const P300Dataset& d) {
    fs::create_directories(dir / "trials");
    const Index ch = !d.train.empty() ? d.train.front().sig.n_channels()
                     : !d.test.empty() ? d.test.front().sig.n_channels()
                                        : static_cast<Index>(d.channel_names.size());
    json j = manifest_head("p300", d.subject_id, d.fs, d.channel_names, ch);
    j["layout"] = {{"cells", d.grid.cells()}};
    json index = json::array();
    std::string events = "trial_id,onset_sample,code,label\n";
    std::size_t id = 0;
    for (const auto* split : {&d.train, &d.test}) {
        for (const auto& t : *split) {
            if (t.sig.n_channels() != ch) throw ParameterError("trials differ in channel count");
            json e;
            e["id"] = id;
            e["file"] = trial_file(id);
            e["n_samples"] = t.sig.n_samples();
            e["split"] = split == &d.train ? "train" : "test";
            e["user_char"] = t.user_char ? json(std::string(1, *t.user_char)) : json(nullptr);
            index.push_back(e);
            write_payload(dir / trial_file(id), t.sig.data());
            for (const auto& ev : t.schedule) {
                events += std::to_string(id) + "," + std::to_string(ev.onset) + "," + std::to_string(ev.code) + ",";
                if (ev.is_target) events += *ev.is_target ? "1" : "0";
                events += "\n";
            }
            ++id;
        }
    }
    j["trials"] = index;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
    write_text(dir / "events.csv", events);
}

void write_dataset(const fs::path& dir, const SsvepDataset& d) {
    fs::create_directories(dir / "trials");
    const Index ch = !d.trials.empty() ? d.trials.front().sig.n_channels() : static_cast<Index>(d.channel_names.size());
    json j = manifest_head("ssvep", d.subject_id, d.fs, d.channel_names, ch);
    j["layout"] = json::parse(d.grid.to_json());
    json index = json::array();
    std::string events = "trial_id,onset_sample,code,label\n";
    for (std::size_t id = 0; id < d.trials.size(); ++id) {
        const auto& t = d.trials[id];
        if (t.sig.n_channels() != ch) throw ParameterError("trials differ in channel count");
        json e;
        e["id"] = id;
        e["file"] = trial_file(id);
        e["n_samples"] = t.sig.n_samples();
        e["block"] = t.block;
        index.push_back(e);
        write_payload(dir / trial_file(id), t.sig.data());
        events += std::to_string(id) + "," + std::to_string(t.stim_onset) + "," +
                  std::to_string(t.target ? *t.target + 1 : 0) + ",\n";
    }
    j["trials"] = index;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
    write_text(dir / "events.csv", events);
}

std::string dataset_paradigm(const fs::path& dir) {
    const json j = read_manifest(dir);
    const auto p = field<std::string>(j, "paradigm", "manifest");
    if (p != "p300" && p != "ssvep") throw FormatError("manifest: unknown paradigm '" + p + "'");
    return p;
}

namespace {

struct Common {
    json manifest;
    double fs = 0.0;
    std::vector<std::string> channels;
    std::vector<MatrixXd> payloads;
    std::vector<std::vector<EventRow>> events;
};

Common read_common(const fs::path& dir, const std::string& paradigm) {
    Common c;
    c.manifest = read_manifest(dir);
    const auto p = field<std::string>(c.manifest, "paradigm", "manifest");
    if (p != paradigm) throw FormatError("manifest: paradigm is '" + p + "', expected '" + paradigm + "'");
    c.fs = field<double>(c.manifest, "fs", "manifest");
    c.channels = field<std::vector<std::string>>(c.manifest, "channels", "manifest");
    if (c.channels.empty()) throw FormatError("manifest: no channels");
    const auto& trials = c.manifest.at("trials");
    if (!trials.is_array()) throw FormatError("manifest: 'trials' must be an array");
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const std::string where = "manifest trial " + std::to_string(i);
        if (field<std::size_t>(trials[i], "id", where) != i) throw FormatError(where + ": ids must be 0..n-1 in order");
        const auto file = field<std::string>(trials[i], "file", where);
        const auto n = field<Index>(trials[i], "n_samples", where);
        if (n < 1) throw FormatError(where + ": n_samples must be positive");
        c.payloads.push_back(read_payload(dir / file, std::to_string(i), static_cast<Index>(c.channels.size()), n));
    }
    c.events.resize(trials.size());
    for (const auto& e : read_events(dir)) {
        if (e.trial >= trials.size()) {
            throw FormatError("events.csv: unknown trial " + std::to_string(e.trial));
        }
        c.events[e.trial].push_back(e);
    }
    return c;
}

}  // namespace

P300Dataset read_p300_dataset(const fs::path& dir) {
    Common c = read_common(dir, "p300");
    P300Dataset d;
    d.subject_id = c.manifest.value("subject_id", "");
    d.fs = c.fs;
    d.channel_names = c.channels;
    try {
        d.grid = p300::SpellerGrid(c.manifest.at("layout").at("cells").get<std::string>());
    } catch (const json::exception&) {
        throw FormatError("manifest: missing layout.cells");
    }
    const auto& trials = c.manifest.at("trials");
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const std::string where = "manifest trial " + std::to_string(i);
        std::optional<char> user;
        if (trials[i].contains("user_char") && !trials[i]["user_char"].is_null()) {
            const auto s = field<std::string>(trials[i], "user_char", where);
            if (s.size() != 1 || !d.grid.contains(s[0])) throw FormatError(where + ": user_char not in the grid");
            user = s[0];
        }
        std::vector<p300::StimulusEvent> schedule;
        for (const auto& e : c.events[i]) {
            if (e.code < 1 || e.code > 12) throw FormatError("events.csv: trial " + std::to_string(i) + " has code " + std::to_string(e.code));
            std::optional<bool> target;
            if (e.label == "1") target = true;
            else if (e.label == "0") target = false;
            else if (!e.label.empty()) throw FormatError("events.csv: trial " + std::to_string(i) + " has label '" + e.label + "'");
            schedule.push_back({e.onset, e.code, target});
        }
        p300::P300Trial t{Signal(std::move(c.payloads[i]), d.fs, d.channel_names), std::move(schedule), user};
        try {
            t.validate();
        } catch (const ParameterError& e) {
            throw FormatError("trial " + std::to_string(i) + ": " + e.what());
        }
        const auto split = field<std::string>(trials[i], "split", where);
        if (split == "train") d.train.push_back(std::move(t));
        else if (split == "test") d.test.push_back(std::move(t));
        else throw FormatError(where + ": split must be 'train' or 'test'");
    }
    return d;
}

SsvepDataset read_ssvep_dataset(const fs::path& dir) {
    Common c = read_common(dir, "ssvep");
    SsvepDataset d;
    d.subject_id = c.manifest.value("subject_id", "");
    d.fs = c.fs;
    d.channel_names = c.channels;
    try {
        d.grid = ssvep::FrequencyGrid::from_json(c.manifest.at("layout").dump());
    } catch (const json::exception&) {
        throw FormatError("manifest: missing layout");
    }
    const auto& trials = c.manifest.at("trials");
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const std::string where = "manifest trial " + std::to_string(i);
        if (c.events[i].size() != 1) throw FormatError("events.csv: trial " + std::to_string(i) + " needs exactly one event");
        const auto& e = c.events[i].front();
        if (e.code < 0 || e.code > d.grid.size()) throw FormatError("events.csv: trial " + std::to_string(i) + " has code " + std::to_string(e.code));
        if (e.onset < 0 || e.onset >= c.payloads[i].cols()) throw FormatError("events.csv: trial " + std::to_string(i) + " onset outside the recording");
        ssvep::SsvepTrial t{Signal(std::move(c.payloads[i]), d.fs, d.channel_names), e.onset, std::nullopt,
                            field<int>(trials[i], "block", where)};
        if (e.code > 0) t.target = e.code - 1;
        d.trials.push_back(std::move(t));
    }
    return d;
}

}  // namespace spellattack::data
