// spellattack command-line front end.
//
// Every subcommand takes explicit paths, writes its artifacts plus a
// <out>.provenance.json record, and exits 0 on success, 1 on a runtime
// error and 2 on a usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spellattack/attack_p300.hpp"
#include "spellattack/attack_ssvep.hpp"
#include "spellattack/dataset.hpp"
#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"
#include "spellattack/eval.hpp"
#include "spellattack/parallel.hpp"
#include "spellattack/synthgen.hpp"
#include "spellattack/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spellattack;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a over the canonical (key-sorted) config dump.
std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

json meta(const std::string& command, const json& config) {
    return {{"schema_version", data::kSchemaVersion},
            {"command", command},
            {"config_hash", config_hash(config)},
            {"tool_version", version()}};
}

void write_provenance(const fs::path& out, const std::string& command, const json& config) {
    json j = meta(command, config);
    j["config"] = config;
    j["versions"] = {{"spellattack", version()},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    fs::path p = out;
    p += ".provenance.json";
    write_file(p, j.dump(2) + "\n");
}

void write_report(const fs::path& prefix, const eval::AttackReport& rep, const json& m) {
    fs::path csv = prefix, js = prefix;
    csv += ".csv";
    js += ".json";
    write_file(csv, rep.to_csv());
    write_file(js, rep.to_json(m.dump()));
}

p300::P300Protocol protocol_named(const std::string& name) {
    if (name == "competition") return p300::P300Protocol::competition();
    if (name == "als") return p300::P300Protocol::als();
    if (name == "synthetic") return p300::P300Protocol::synthetic();
    throw UsageError("unknown protocol '" + name + "'");
}

std::string require_paradigm(const fs::path& dir, const std::string& want = "") {
    const auto p = data::dataset_paradigm(dir);
    if (!want.empty() && p != want) throw UsageError(dir.string() + " is a " + p + " dataset, expected " + want);
    return p;
}

std::string attackers_or_all(const std::string& given, const std::string& all) { return given.empty() ? all : given; }

// ---------------------------------------------------------------- SSVEP helpers

struct TemplateSet {
    std::vector<attack::SsvepTemplate> templates;
};

TemplateSet load_ssvep_templates(const fs::path& dir) {
    std::ifstream f(dir / "templates.json");
    if (!f) throw Error("cannot open " + (dir / "templates.json").string());
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw FormatError((dir / "templates.json").string() + ": " + e.what());
    }
    TemplateSet s;
    for (const auto& e : j.at("templates")) s.templates.push_back(attack::SsvepTemplate::load((dir / e.at("stem").get<std::string>()).string()));
    return s;
}

std::vector<ssvep::SsvepTrial> pick_blocks(const data::SsvepDataset& d, std::vector<int> blocks, int exclude) {
    if (blocks.empty()) {
        for (int b : d.blocks())
            if (b != exclude) blocks.push_back(b);
    }
    std::vector<ssvep::SsvepTrial> out;
    for (const auto& t : d.trials)
        if (std::find(blocks.begin(), blocks.end(), t.block) != blocks.end()) out.push_back(t);
    if (out.empty()) throw UsageError("no trials in the selected blocks");
    return out;
}

eval::SsvepVictim make_ssvep_victim(const std::string& kind, const ssvep::FrequencyGrid& grid, Index n, double fs,
                                    int harmonics) {
    if (kind == "cca") return eval::SsvepVictim::cca(grid, n, fs, harmonics);
    if (kind == "fbcca") return eval::SsvepVictim::fbcca(grid, n, fs, harmonics);
    throw UsageError("unknown SSVEP victim '" + kind + "'");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial perturbation templates against P300 and SSVEP spellers"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    std::function<void()> run;

    // ------------------------------------------------------------ synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    struct {
        std::string paradigm = "p300";
        std::string out;
        int train = 40, test = 36, repeats = 15, blocks = 6;
        std::uint64_t seed = 1, subject_seed = 1;
        std::string subject_id = "synthetic";
        std::optional<double> amplitude, noise_sd;
    } sy;
    synth->add_option("--paradigm", sy.paradigm, "p300 or ssvep")->check(CLI::IsMember({"p300", "ssvep"}));
    synth->add_option("--out", sy.out, "Output dataset directory")->required();
    synth->add_option("--train", sy.train, "P300 training characters");
    synth->add_option("--test", sy.test, "P300 test characters");
    synth->add_option("--repeats", sy.repeats, "P300 intensification repeats");
    synth->add_option("--blocks", sy.blocks, "SSVEP blocks");
    synth->add_option("--seed", sy.seed, "Noise seed");
    synth->add_option("--subject-seed", sy.subject_seed, "Seed for mixing, patterns and characters");
    synth->add_option("--subject-id", sy.subject_id);
    synth->add_option("--amplitude", sy.amplitude, "Evoked amplitude (P300 bump or SSVEP)");
    synth->add_option("--noise-sd", sy.noise_sd, "Sensor noise standard deviation");
    synth->callback([&] {
        run = [&] {
            auto cfg = sy.paradigm == "p300" ? synth::SynthConfig::p300_default() : synth::SynthConfig::ssvep_default();
            cfg.seed = sy.seed;
            cfg.subject_seed = sy.subject_seed;
            cfg.subject_id = sy.subject_id;
            if (sy.noise_sd) cfg.noise_sd = *sy.noise_sd;
            json config = {{"paradigm", sy.paradigm}, {"seed", sy.seed}, {"subject_seed", sy.subject_seed},
                           {"subject_id", sy.subject_id}, {"noise_sd", cfg.noise_sd}, {"out", sy.out}};
            if (sy.paradigm == "p300") {
                if (sy.amplitude) cfg.p300_amplitude = *sy.amplitude;
                config.update({{"train", sy.train}, {"test", sy.test}, {"repeats", sy.repeats},
                               {"amplitude", cfg.p300_amplitude}});
                data::write_dataset(sy.out, synth::synth_p300_dataset(cfg, sy.train, sy.test, sy.repeats));
            } else {
                if (sy.amplitude) cfg.ssvep_amplitude = *sy.amplitude;
                config.update({{"blocks", sy.blocks}, {"amplitude", cfg.ssvep_amplitude}});
                data::write_dataset(sy.out, synth::synth_ssvep_dataset(cfg, ssvep::FrequencyGrid::benchmark(), sy.blocks));
            }
            write_provenance(sy.out, "synth", config);
        };
    });

    // ------------------------------------------------------------ train
    auto* train = app.add_subcommand("train", "Fit a P300 victim model");
    struct {
        std::string data, out, variant = "riemann";
        int filters = 4;
        double l2 = 1.0;
    } tr;
    train->add_option("--data", tr.data, "P300 dataset directory")->required();
    train->add_option("--out", tr.out, "Model file")->required();
    train->add_option("--variant", tr.variant, "riemann or xdawn_lr")->check(CLI::IsMember({"riemann", "xdawn_lr"}));
    train->add_option("--filters", tr.filters, "xDAWN filters per class");
    train->add_option("--l2", tr.l2, "Logistic regression l2 penalty");
    train->callback([&] {
        run = [&] {
            require_paradigm(tr.data, "p300");
            const auto d = data::read_p300_dataset(tr.data);
            p300::VictimConfig vc;
            vc.variant = p300::variant_from_string(tr.variant);
            vc.n_filters = tr.filters;
            vc.l2 = tr.l2;
            const auto victim = p300::train_victim(d.train, vc, d.grid);
            victim.save(tr.out);
            write_provenance(tr.out, "train",
                             {{"data", tr.data}, {"out", tr.out}, {"variant", tr.variant}, {"filters", tr.filters}, {"l2", tr.l2}});
        };
    });

    // ------------------------------------------------------------ craft
    auto* craft = app.add_subcommand("craft", "Craft perturbation templates");
    struct {
        std::string data, model, out, protocol = "synthetic", glyphs;
        std::optional<double> epsilon;
        bool gaussian = false;
        std::uint64_t seed = 1;
        double alpha = 0.05, step = 1e-3, spr = 25.0;
        int max_iter = 10000, craft_block = 0, harmonics = 5;
    } cr;
    craft->add_option("--data", cr.data, "Dataset directory")->required();
    craft->add_option("--model", cr.model, "P300 model file");
    craft->add_option("--out", cr.out, "Template stem (P300) or directory (SSVEP)")->required();
    craft->add_option("--protocol", cr.protocol, "competition, als or synthetic");
    craft->add_option("--epsilon", cr.epsilon, "P300 per-channel template norm (default from the protocol)");
    craft->add_flag("--gaussian", cr.gaussian, "P300: Gaussian-noise template instead of the crafted one");
    craft->add_option("--seed", cr.seed, "Seed of the Gaussian template");
    craft->add_option("--glyphs", cr.glyphs, "SSVEP attacker glyphs (default: all)");
    craft->add_option("--alpha", cr.alpha, "SSVEP energy penalty");
    craft->add_option("--step", cr.step, "SSVEP gradient step");
    craft->add_option("--spr", cr.spr, "SSVEP stopping SPR in dB");
    craft->add_option("--max-iter", cr.max_iter, "SSVEP iteration limit");
    craft->add_option("--craft-block", cr.craft_block, "SSVEP block used for crafting");
    craft->add_option("--harmonics", cr.harmonics, "SSVEP reference harmonics");
    craft->callback([&] {
        run = [&] {
            const auto paradigm = require_paradigm(cr.data);
            json config = {{"data", cr.data}, {"out", cr.out}};
            if (paradigm == "p300") {
                if (cr.model.empty()) throw UsageError("--model is required for P300 crafting");
                const auto proto = protocol_named(cr.protocol);
                const double eps = cr.epsilon.value_or(proto.epsilon);
                const auto victim = p300::P300Victim::load(cr.model);
                attack::TemplateShaping shaping;
                shaping.duration_ms = proto.template_ms;
                attack::P300Template t;
                if (cr.gaussian) {
                    t = attack::gaussian_template(victim.n_channels(), victim.epoch_len, victim.fs, eps, cr.seed, shaping);
                } else {
                    const auto d = data::read_p300_dataset(cr.data);
                    t = attack::craft_template_from_trials(victim, d.train, eps, shaping, d.grid);
                }
                t.victim_id = fs::path(cr.model).filename().string();
                t.dataset_id = fs::path(cr.data).filename().string();
                t.save(cr.out);
                config.update({{"model", cr.model}, {"protocol", cr.protocol}, {"epsilon", eps},
                               {"gaussian", cr.gaussian}, {"seed", cr.seed}});
                write_provenance(cr.out, "craft", config);
                return;
            }
            const auto d = data::read_ssvep_dataset(cr.data);
            const auto craft_trials = pick_blocks(d, {cr.craft_block}, -1);
            const auto windows = eval::ssvep_windows(craft_trials);
            const std::string glyphs = attackers_or_all(cr.glyphs, d.grid.glyphs);
            attack::CraftOptions opt;
            opt.alpha = cr.alpha;
            opt.step = cr.step;
            opt.spr_threshold_db = cr.spr;
            opt.max_iter = cr.max_iter;
            opt.n_harmonics = cr.harmonics;
            std::vector<attack::SsvepTemplate> out(glyphs.size());
            parallel_for(glyphs.size(), [&](std::size_t i) {
                const double f = d.grid.freqs[static_cast<std::size_t>(d.grid.index_of_glyph(glyphs[i]))];
                out[i] = attack::craft_delta(windows.windows, d.grid, f, d.fs, opt);
                out[i].subject_id = d.subject_id;
            });
            fs::create_directories(cr.out);
            json index = json::array();
            for (std::size_t i = 0; i < out.size(); ++i) {
                char stem[32];
                std::snprintf(stem, sizeof stem, "delta_%02lld", static_cast<long long>(d.grid.index_of_glyph(glyphs[i])));
                out[i].save((fs::path(cr.out) / stem).string());
                index.push_back({{"stem", stem}, {"f_hat", out[i].f_hat}, {"glyph", std::string(1, glyphs[i])},
                                 {"final_spr_db", out[i].final_spr_db}, {"iterations", out[i].iterations},
                                 {"objective_increases", out[i].objective_increases}});
            }
            config.update({{"glyphs", glyphs}, {"alpha", cr.alpha}, {"step", cr.step}, {"spr", cr.spr},
                           {"max_iter", cr.max_iter}, {"craft_block", cr.craft_block}, {"harmonics", cr.harmonics}});
            json j = meta("craft", config);
            j["templates"] = index;
            write_file(fs::path(cr.out) / "templates.json", j.dump(2) + "\n");
            write_provenance(fs::path(cr.out) / "templates", "craft", config);
        };
    });

    // ------------------------------------------------------------ attack
    auto* atk = app.add_subcommand("attack", "Score a template or noise baseline");
    struct {
        std::string data, model, tmpl, templates, out, protocol = "synthetic", attackers, noise = "", victim = "cca";
        std::vector<int> repeats;
        std::vector<int> test_blocks;
        double delay_ms = 0.0;
        std::optional<double> spr, epsilon;
        std::uint64_t seed = 1;
        int harmonics = 5;
    } at;
    atk->add_option("--data", at.data, "Dataset directory")->required();
    atk->add_option("--model", at.model, "P300 model file");
    atk->add_option("--template", at.tmpl, "P300 template stem");
    atk->add_option("--templates", at.templates, "SSVEP template directory");
    atk->add_option("--out", at.out, "Report prefix (.csv/.json appended)")->required();
    atk->add_option("--protocol", at.protocol, "P300 timing profile: competition, als or synthetic");
    atk->add_option("--attackers", at.attackers, "P300 attacker characters (default: the whole grid)");
    atk->add_option("--repeats", at.repeats, "P300 repeats, comma separated")->delimiter(',');
    atk->add_option("--delay-ms", at.delay_ms, "Synchronisation delay");
    atk->add_option("--noise", at.noise, "none, gaussian, single or compound")
        ->check(CLI::IsMember({"none", "gaussian", "single", "compound"}));
    atk->add_option("--spr", at.spr, "SSVEP noise SPR in dB");
    atk->add_option("--epsilon", at.epsilon, "P300 Gaussian template norm (default from the protocol)");
    atk->add_option("--seed", at.seed, "Noise seed");
    atk->add_option("--victim", at.victim, "SSVEP victim: cca or fbcca");
    atk->add_option("--test-blocks", at.test_blocks, "SSVEP test blocks (default: all but block 0)")->delimiter(',');
    atk->add_option("--harmonics", at.harmonics, "SSVEP reference harmonics");
    atk->callback([&] {
        run = [&] {
            const auto paradigm = require_paradigm(at.data);
            json config = {{"data", at.data}, {"out", at.out}, {"noise", at.noise}, {"seed", at.seed}};
            if (paradigm == "p300") {
                if (at.model.empty()) throw UsageError("--model is required for P300 attacks");
                if (at.spr) throw UsageError("--spr applies to SSVEP noise; P300 templates are scaled by --epsilon");
                if (at.noise == "single" || at.noise == "compound") throw UsageError("periodic noise is an SSVEP baseline");
                const auto proto = protocol_named(at.protocol);
                const auto d = data::read_p300_dataset(at.data);
                const auto victim = p300::P300Victim::load(at.model);
                MatrixXd pattern;
                std::string kind = "none";
                attack::TemplateShaping shaping;
                shaping.duration_ms = proto.template_ms;
                if (at.noise == "gaussian") {
                    const double eps = at.epsilon.value_or(proto.epsilon);
                    pattern = attack::gaussian_template(victim.n_channels(), victim.epoch_len, victim.fs, eps, at.seed, shaping).pattern;
                    kind = "gaussian";
                    config["epsilon"] = eps;
                } else if (at.noise.empty()) {
                    if (at.tmpl.empty()) throw UsageError("--template or --noise is required");
                    pattern = attack::P300Template::load(at.tmpl).pattern;
                    kind = "adversarial";
                    config["template"] = at.tmpl;
                }
                eval::P300Scoring s;
                s.attackers = attackers_or_all(at.attackers, d.grid.cells());
                s.repeats = at.repeats.empty() ? std::vector<int>{proto.test_repeats} : at.repeats;
                s.delay_samples = static_cast<Index>(std::lround(at.delay_ms * d.fs / 1000.0));
                s.perturbation = kind;
                config.update({{"model", at.model}, {"protocol", at.protocol}, {"attackers", s.attackers},
                               {"repeats", s.repeats}, {"delay_ms", at.delay_ms}});
                const auto reps = eval::score_p300(victim, d.test, pattern, s, proto, d.grid);
                const json m = meta("attack", config);
                for (const auto& r : reps) {
                    fs::path prefix = at.out;
                    if (reps.size() > 1) prefix += "_r" + std::to_string(r.repeats);
                    write_report(prefix, r, m);
                }
                write_provenance(at.out, "attack", config);
                return;
            }
            const auto d = data::read_ssvep_dataset(at.data);
            const auto test = eval::ssvep_windows(pick_blocks(d, at.test_blocks, 0));
            const auto victim = make_ssvep_victim(at.victim, d.grid, test.windows.front().cols(), d.fs, at.harmonics);
            config.update({{"victim", at.victim}, {"test_blocks", at.test_blocks}, {"harmonics", at.harmonics}});
            eval::AttackReport rep;
            if (at.noise.empty()) {
                if (at.templates.empty()) throw UsageError("--templates or --noise is required");
                const auto set = load_ssvep_templates(at.templates);
                const Index delay = static_cast<Index>(std::lround(at.delay_ms * d.fs / 1000.0));
                rep = eval::score_ssvep_templates(victim, test, set.templates, [&](Index) { return delay; });
                rep.delay_samples = delay;
                config.update({{"templates", at.templates}, {"delay_ms", at.delay_ms}});
            } else if (at.noise == "none") {
                rep = eval::score_ssvep(victim, test, {}, {}, "none");
            } else {
                const double spr = at.spr.value_or(25.0);
                rep = eval::score_ssvep_noise(victim, test, at.noise, spr, at.seed);
                config["spr"] = spr;
            }
            write_report(at.out, rep, meta("attack", config));
            write_provenance(at.out, "attack", config);
        };
    });

    // ------------------------------------------------------------ sweep-delay
    auto* sweep = app.add_subcommand("sweep-delay", "Scores against the synchronisation delay");
    struct {
        std::string data, model, tmpl, templates, out, protocol = "synthetic", attackers, victim = "cca";
        int repeats = 0;
        double max_ms = -1.0;
        int step_samples = 1;
        int fractions = 11;
        std::vector<int> test_blocks;
    } sw;
    sweep->add_option("--data", sw.data, "Dataset directory")->required();
    sweep->add_option("--model", sw.model, "P300 model file");
    sweep->add_option("--template", sw.tmpl, "P300 template stem");
    sweep->add_option("--templates", sw.templates, "SSVEP template directory");
    sweep->add_option("--out", sw.out, "CSV file")->required();
    sweep->add_option("--protocol", sw.protocol, "P300 timing profile");
    sweep->add_option("--attackers", sw.attackers, "P300 attacker characters (default: the whole grid)");
    sweep->add_option("--repeats", sw.repeats, "P300 repeats (default from the protocol)");
    sweep->add_option("--max-ms", sw.max_ms, "P300 largest delay (default: one SOA)");
    sweep->add_option("--step-samples", sw.step_samples, "P300 delay step")->check(CLI::PositiveNumber);
    sweep->add_option("--fractions", sw.fractions, "SSVEP points over one attacker period")->check(CLI::Range(2, 1000));
    sweep->add_option("--victim", sw.victim, "SSVEP victim: cca or fbcca");
    sweep->add_option("--test-blocks", sw.test_blocks, "SSVEP test blocks")->delimiter(',');
    sweep->callback([&] {
        run = [&] {
            const auto paradigm = require_paradigm(sw.data);
            json config = {{"data", sw.data}, {"out", sw.out}};
            std::vector<eval::DelayPoint> pts;
            std::string column;
            if (paradigm == "p300") {
                if (sw.model.empty() || sw.tmpl.empty()) throw UsageError("--model and --template are required");
                const auto proto = protocol_named(sw.protocol);
                const auto d = data::read_p300_dataset(sw.data);
                const auto victim = p300::P300Victim::load(sw.model);
                const auto pattern = attack::P300Template::load(sw.tmpl).pattern;
                const double max_ms = sw.max_ms >= 0.0 ? sw.max_ms : proto.soa_ms;
                const Index max_d = static_cast<Index>(std::lround(max_ms * d.fs / 1000.0));
                std::vector<Index> delays;
                for (Index k = 0; k <= max_d; k += sw.step_samples) delays.push_back(k);
                const int repeats = sw.repeats > 0 ? sw.repeats : proto.test_repeats;
                const auto attackers = attackers_or_all(sw.attackers, d.grid.cells());
                pts = eval::p300_delay_sweep(victim, d.test, pattern, attackers, repeats, delays, proto, d.grid);
                column = "delay_samples";
                config.update({{"model", sw.model}, {"template", sw.tmpl}, {"protocol", sw.protocol},
                               {"attackers", attackers}, {"repeats", repeats}, {"max_ms", max_ms},
                               {"step_samples", sw.step_samples}});
            } else {
                if (sw.templates.empty()) throw UsageError("--templates is required");
                const auto d = data::read_ssvep_dataset(sw.data);
                const auto test = eval::ssvep_windows(pick_blocks(d, sw.test_blocks, 0));
                const auto victim = make_ssvep_victim(sw.victim, d.grid, test.windows.front().cols(), d.fs, 5);
                const auto set = load_ssvep_templates(sw.templates);
                std::vector<double> fr;
                for (int k = 0; k < sw.fractions; ++k) fr.push_back(static_cast<double>(k) / (sw.fractions - 1));
                pts = eval::ssvep_delay_sweep(victim, test, set.templates, fr, d.fs);
                column = "period_fraction";
                config.update({{"templates", sw.templates}, {"victim", sw.victim}, {"fractions", sw.fractions},
                               {"test_blocks", sw.test_blocks}});
            }
            write_file(sw.out, eval::delay_sweep_csv(pts, column));
            write_provenance(sw.out, "sweep-delay", config);
        };
    });

    // ------------------------------------------------------------ transfer
    auto* transfer = app.add_subcommand("transfer", "Cross-subject or cross-model attacker-score matrix");
    struct {
        std::string data, models, templates, victims, out, protocol = "synthetic", attackers;
        int repeats = 0;
    } tf;
    transfer->add_option("--data", tf.data, "Comma-separated dataset directories (one per target, or one shared)")->required();
    transfer->add_option("--models", tf.models, "P300: comma-separated model files, one per target");
    transfer->add_option("--templates", tf.templates, "Comma-separated template stems (P300) or directories (SSVEP), one per source")->required();
    transfer->add_option("--victims", tf.victims, "SSVEP: comma-separated cca/fbcca, one per target (default cca)");
    transfer->add_option("--out", tf.out, "CSV file")->required();
    transfer->add_option("--protocol", tf.protocol, "P300 timing profile");
    transfer->add_option("--attackers", tf.attackers, "P300 attacker characters");
    transfer->add_option("--repeats", tf.repeats, "P300 repeats");
    transfer->callback([&] {
        run = [&] {
            const auto datas = split_list(tf.data);
            const auto sources = split_list(tf.templates);
            if (datas.empty() || sources.empty()) throw UsageError("--data and --templates need at least one entry");
            const auto paradigm = require_paradigm(datas.front());
            for (const auto& dd : datas) require_paradigm(dd, paradigm);
            json config = {{"data", datas}, {"templates", sources}, {"out", tf.out}};
            MatrixXd m;
            std::vector<std::string> targets;
            if (paradigm == "p300") {
                const auto models = split_list(tf.models);
                if (models.empty()) throw UsageError("--models is required for P300");
                if (datas.size() != 1 && datas.size() != models.size()) throw UsageError("give one dataset or one per model");
                const auto proto = protocol_named(tf.protocol);
                std::vector<data::P300Dataset> ds;
                for (const auto& dd : datas) ds.push_back(data::read_p300_dataset(dd));
                std::vector<p300::P300Victim> vs;
                for (const auto& mm : models) vs.push_back(p300::P300Victim::load(mm));
                std::vector<MatrixXd> ps;
                for (const auto& s : sources) ps.push_back(attack::P300Template::load(s).pattern);
                const int repeats = tf.repeats > 0 ? tf.repeats : proto.test_repeats;
                m = eval::transfer_matrix(ps.size(), vs.size(), [&](std::size_t i, std::size_t j) {
                    const auto& d = ds[ds.size() == 1 ? 0 : j];
                    eval::P300Scoring s;
                    s.attackers = attackers_or_all(tf.attackers, d.grid.cells());
                    s.repeats = {repeats};
                    return *eval::score_p300(vs[j], d.test, ps[i], s, proto, d.grid).front().aggregate().attacker_score;
                });
                targets = models;
                config.update({{"models", models}, {"protocol", tf.protocol}, {"repeats", repeats},
                               {"attackers", tf.attackers}});
            } else {
                auto victims = split_list(tf.victims);
                const std::size_t nt = std::max(datas.size(), victims.size());
                if (victims.empty()) victims.assign(nt, "cca");
                if ((datas.size() != 1 && datas.size() != nt) || (victims.size() != 1 && victims.size() != nt)) {
                    throw UsageError("--data and --victims must have one entry or one per target");
                }
                std::vector<eval::SsvepWindows> tests;
                std::vector<data::SsvepDataset> ds;
                for (const auto& dd : datas) {
                    ds.push_back(data::read_ssvep_dataset(dd));
                    tests.push_back(eval::ssvep_windows(pick_blocks(ds.back(), {}, 0)));
                }
                std::vector<TemplateSet> sets;
                for (const auto& s : sources) sets.push_back(load_ssvep_templates(s));
                m = eval::transfer_matrix(sets.size(), nt, [&](std::size_t i, std::size_t j) {
                    const std::size_t dj = ds.size() == 1 ? 0 : j;
                    const auto v = make_ssvep_victim(victims[victims.size() == 1 ? 0 : j], ds[dj].grid,
                                                     tests[dj].windows.front().cols(), ds[dj].fs, 5);
                    return *eval::score_ssvep_templates(v, tests[dj], sets[i].templates).aggregate().attacker_score;
                });
                for (std::size_t j = 0; j < nt; ++j)
                    targets.push_back(datas[datas.size() == 1 ? 0 : j] + ":" + victims[victims.size() == 1 ? 0 : j]);
                config["victims"] = victims;
            }
            write_file(tf.out, eval::matrix_csv(m, sources, targets));
            write_provenance(tf.out, "transfer", config);
        };
    });

    // ------------------------------------------------------------ spectrum
    auto* spectrum = app.add_subcommand("spectrum", "Amplitude spectrum CSV of a template or trial");
    struct {
        std::string tmpl, data, out, kind = "ssvep";
        int trial = -1;
        bool window = false;
    } sp;
    spectrum->add_option("--template", sp.tmpl, "Template stem");
    spectrum->add_option("--kind", sp.kind, "Template kind: ssvep or p300")->check(CLI::IsMember({"ssvep", "p300"}));
    spectrum->add_option("--data", sp.data, "Dataset directory");
    spectrum->add_option("--trial", sp.trial, "Trial index in the dataset");
    spectrum->add_flag("--window", sp.window, "SSVEP: spectrum of the victim's filtered analysis window");
    spectrum->add_option("--out", sp.out, "CSV file")->required();
    spectrum->callback([&] {
        run = [&] {
            std::optional<Signal> sig;
            json config = {{"out", sp.out}};
            if (!sp.tmpl.empty()) {
                if (sp.kind == "ssvep") {
                    const auto t = attack::SsvepTemplate::load(sp.tmpl);
                    sig.emplace(t.delta, t.fs);
                } else {
                    const auto t = attack::P300Template::load(sp.tmpl);
                    sig.emplace(t.pattern, t.fs);
                }
                config.update({{"template", sp.tmpl}, {"kind", sp.kind}});
            } else {
                if (sp.data.empty() || sp.trial < 0) throw UsageError("give --template, or --data with --trial");
                const auto paradigm = require_paradigm(sp.data);
                if (paradigm == "ssvep") {
                    const auto d = data::read_ssvep_dataset(sp.data);
                    if (static_cast<std::size_t>(sp.trial) >= d.trials.size()) throw UsageError("--trial out of range");
                    const auto& t = d.trials[static_cast<std::size_t>(sp.trial)];
                    sig.emplace(sp.window ? ssvep::preprocess_window(t.sig, t.stim_onset) : t.sig.data(), d.fs);
                } else {
                    auto d = data::read_p300_dataset(sp.data);
                    d.train.insert(d.train.end(), d.test.begin(), d.test.end());
                    if (static_cast<std::size_t>(sp.trial) >= d.train.size()) throw UsageError("--trial out of range");
                    sig.emplace(d.train[static_cast<std::size_t>(sp.trial)].sig);
                }
                config.update({{"data", sp.data}, {"trial", sp.trial}, {"window", sp.window}});
            }
            const auto s = dsp::amplitude_spectrum(*sig);
            std::string csv = "freq_hz";
            for (Index c = 0; c < s.amplitude.rows(); ++c) csv += ",ch" + std::to_string(c + 1);
            csv += ",rms\n";
            for (std::size_t k = 0; k < s.freqs.size(); ++k) {
                csv += eval::format_double(s.freqs[k]);
                const auto col = s.amplitude.col(static_cast<Index>(k));
                for (Index c = 0; c < col.size(); ++c) csv += "," + eval::format_double(col(c));
                csv += "," + eval::format_double(std::sqrt(col.squaredNorm() / static_cast<double>(col.size()))) + "\n";
            }
            write_file(sp.out, csv);
            write_provenance(sp.out, "spectrum", config);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        if (run) run();
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
