#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "spellattack/archive.hpp"
#include "spellattack/dataset.hpp"
#include "spellattack/error.hpp"
#include "spellattack/synthgen.hpp"

using namespace spellattack;
using namespace testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    f << s;
}

data::P300Dataset small_p300() {
    return synth::synth_p300_dataset(synth::SynthConfig::p300_default(), 2, 1, 2);
}

}  // namespace

TEST_SUITE("dataio") {
    TEST_CASE("p300 round trip is bit exact") {
        const auto d = small_p300();
        const auto dir = scratch_dir("io_p300");
        data::write_dataset(dir, d);
        CHECK(data::dataset_paradigm(dir) == "p300");
        const auto r = data::read_p300_dataset(dir);
        CHECK(r.fs == d.fs);
        CHECK(r.subject_id == d.subject_id);
        CHECK(r.channel_names == d.channel_names);
        REQUIRE(r.train.size() == d.train.size());
        REQUIRE(r.test.size() == d.test.size());
        for (std::size_t i = 0; i < d.train.size(); ++i) {
            CHECK(r.train[i].sig.data() == d.train[i].sig.data());
            CHECK(r.train[i].user_char == d.train[i].user_char);
            REQUIRE(r.train[i].schedule.size() == d.train[i].schedule.size());
            for (std::size_t k = 0; k < d.train[i].schedule.size(); ++k) {
                CHECK(r.train[i].schedule[k].onset == d.train[i].schedule[k].onset);
                CHECK(r.train[i].schedule[k].code == d.train[i].schedule[k].code);
                CHECK(r.train[i].schedule[k].is_target == d.train[i].schedule[k].is_target);
            }
        }
        const auto dir2 = scratch_dir("io_p300_again");
        data::write_dataset(dir2, r);
        CHECK(slurp(dir / "manifest.json") == slurp(dir2 / "manifest.json"));
        CHECK(slurp(dir / "events.csv") == slurp(dir2 / "events.csv"));
        CHECK(slurp(dir / "trials" / "00001.f32") == slurp(dir2 / "trials" / "00001.f32"));
    }

    TEST_CASE("ssvep round trip is bit exact") {
        const auto d = synth::synth_ssvep_dataset(synth::SynthConfig::ssvep_default(),
                                                  ssvep::FrequencyGrid::benchmark(), 1);
        const auto dir = scratch_dir("io_ssvep");
        data::write_dataset(dir, d);
        CHECK(data::dataset_paradigm(dir) == "ssvep");
        const auto r = data::read_ssvep_dataset(dir);
        REQUIRE(r.trials.size() == 40);
        CHECK(r.grid.freqs == d.grid.freqs);
        CHECK(r.grid.glyphs == d.grid.glyphs);
        for (std::size_t i = 0; i < 40; ++i) {
            CHECK(r.trials[i].sig.data() == d.trials[i].sig.data());
            CHECK(r.trials[i].target == d.trials[i].target);
            CHECK(r.trials[i].stim_onset == d.trials[i].stim_onset);
        }
        CHECK(r.blocks() == std::vector<int>{0});
        CHECK_THROWS_AS(data::read_p300_dataset(dir), FormatError);
    }

    TEST_CASE("truncated payload names the trial") {
        const auto dir = scratch_dir("io_trunc");
        data::write_dataset(dir, small_p300());
        const auto f = dir / "trials" / "00002.f32";
        auto bytes = slurp(f);
        bytes.pop_back();
        spit(f, bytes);
        try {
            data::read_p300_dataset(dir);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("trial 2") != std::string::npos);
            CHECK(e.offset() == static_cast<std::int64_t>(bytes.size()));
        }
    }

    TEST_CASE("manifest channel count off by one") {
        const auto dir = scratch_dir("io_channels");
        data::write_dataset(dir, small_p300());
        auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
        m["channels"].push_back("extra");
        spit(dir / "manifest.json", m.dump(2));
        CHECK_THROWS_AS(data::read_p300_dataset(dir), FormatError);
    }

    TEST_CASE("unknown schema version") {
        const auto dir = scratch_dir("io_version");
        data::write_dataset(dir, small_p300());
        auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
        m["schema_version"] = 99;
        spit(dir / "manifest.json", m.dump(2));
        CHECK_THROWS_AS(data::dataset_paradigm(dir), VersionError);
        CHECK_THROWS_AS(data::read_p300_dataset(dir), VersionError);
    }

    TEST_CASE("bad events are rejected") {
        const auto dir = scratch_dir("io_events");
        data::write_dataset(dir, small_p300());
        auto ev = slurp(dir / "events.csv");
        const auto pos = ev.find('\n');
        const auto line_end = ev.find('\n', pos + 1);
        ev.replace(pos + 1, line_end - pos - 1, "0,10,13,1");
        spit(dir / "events.csv", ev);
        CHECK_THROWS_AS(data::read_p300_dataset(dir), FormatError);
        CHECK_THROWS_AS(data::read_p300_dataset(dir / "missing"), Error);
    }

    TEST_CASE("matrix archive round trip and corruption") {
        MatrixArchive a("unit");
        Rng rng(51);
        a.put("m", random_matrix(3, 4, rng));
        a.put_scalar("s", 2.5);
        const auto b = MatrixArchive::deserialize(a.serialize());
        CHECK(b.kind() == "unit");
        CHECK(b.get("m") == a.get("m"));
        CHECK(b.scalar("s") == 2.5);
        auto bytes = a.serialize();
        CHECK_THROWS_AS(MatrixArchive::deserialize(bytes.substr(0, bytes.size() - 1)), FormatError);
        bytes[0] = 'X';
        CHECK_THROWS_AS(MatrixArchive::deserialize(bytes), FormatError);
    }
}
