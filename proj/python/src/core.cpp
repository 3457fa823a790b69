// Python bindings: numerical kernels take and return numpy arrays, pipeline
// steps take dataset directories and artifact paths like the CLI.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spellattack/attack_p300.hpp"
#include "spellattack/attack_ssvep.hpp"
#include "spellattack/dataset.hpp"
#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"
#include "spellattack/eval.hpp"
#include "spellattack/metrics.hpp"
#include "spellattack/riemann.hpp"
#include "spellattack/ssvep.hpp"
#include "spellattack/synthgen.hpp"
#include "spellattack/version.hpp"

namespace py = pybind11;
using namespace spellattack;
using std::filesystem::path;

namespace {

ssvep::FrequencyGrid grid_or_benchmark(const std::optional<std::vector<double>>& freqs) {
    if (!freqs) return ssvep::FrequencyGrid::benchmark();
    ssvep::FrequencyGrid g;
    g.freqs = *freqs;
    for (std::size_t i = 0; i < g.freqs.size(); ++i) g.glyphs.push_back(static_cast<char>(i < 94 ? '!' + i : '?'));
    g.validate();
    return g;
}

std::vector<riemann::SpdMatrix> to_spd(const std::vector<MatrixXd>& ms) {
    std::vector<riemann::SpdMatrix> out;
    out.reserve(ms.size());
    for (const auto& m : ms) out.emplace_back(m);
    return out;
}

py::dict template_info(const attack::SsvepTemplate& t) {
    py::dict d;
    d["f_hat"] = t.f_hat;
    d["glyph"] = std::string(1, t.glyph);
    d["final_spr_db"] = t.final_spr_db;
    d["reference_energy"] = t.reference_energy;
    d["iterations"] = t.iterations;
    d["objective_increases"] = t.objective_increases;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Adversarial perturbation templates against P300 and SSVEP spellers";
    m.attr("__version__") = version();

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base.ptr());
    py::register_exception<BoundsError>(m, "BoundsError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    auto format = py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<VersionError>(m, "VersionError", format.ptr());

    // ------------------------------------------------------------ metrics
    m.def("itr", &metrics::itr, py::arg("accuracy"), py::arg("n_targets"), py::arg("minutes_per_selection"),
          "Information transfer rate in bits/min.");
    m.def("spr_db", py::overload_cast<double, double>(&metrics::spr_db), py::arg("signal_energy"),
          py::arg("perturbation_energy"));
    m.def("spr_db_of", py::overload_cast<const MatrixXd&, const MatrixXd&>(&metrics::spr_db), py::arg("reference"),
          py::arg("perturbation"), "SPR of a perturbation against a same-shaped reference.");

    // ------------------------------------------------------------ signal processing
    m.def(
        "bandpass",
        [](const MatrixXd& x, double fs, double low, double high, int order) {
            return dsp::filter_rows(x, dsp::design_bandpass({order, low, high, fs}));
        },
        py::arg("x"), py::arg("fs"), py::arg("low_hz"), py::arg("high_hz"), py::arg("order") = 4,
        "Causal Butterworth bandpass applied to every row.");
    m.def("znorm_rows", &dsp::znorm_rows, py::arg("x"));
    m.def("band_project", &dsp::band_project_rows, py::arg("x"), py::arg("fs"), py::arg("low_hz"), py::arg("high_hz"));

    // ------------------------------------------------------------ CCA
    m.def("reference_signal", &ssvep::reference_signal, py::arg("f"), py::arg("n_harmonics"), py::arg("n_samples"),
          py::arg("fs"));
    m.def("cca_rho", &ssvep::cca_rho, py::arg("x"), py::arg("y"));
    m.def("benchmark_frequencies", [] { return ssvep::FrequencyGrid::benchmark().freqs; });
    m.def(
        "cca_scores",
        [](const MatrixXd& x, double fs, int n_harmonics, std::optional<std::vector<double>> freqs) {
            return ssvep::CcaDecoder(grid_or_benchmark(freqs), n_harmonics, x.cols(), fs).correlations(x);
        },
        py::arg("x"), py::arg("fs"), py::arg("n_harmonics") = 5, py::arg("freqs") = py::none());
    m.def(
        "cca_decode",
        [](const MatrixXd& x, double fs, int n_harmonics, std::optional<std::vector<double>> freqs) {
            return ssvep::decode_frequency(x, grid_or_benchmark(freqs), n_harmonics, fs).index;
        },
        py::arg("x"), py::arg("fs"), py::arg("n_harmonics") = 5, py::arg("freqs") = py::none(),
        "Index of the recognised frequency; ties go to the lowest index.");
    m.def(
        "fbcca_decode",
        [](const MatrixXd& x, double fs, int n_harmonics, std::optional<std::vector<double>> freqs) {
            return ssvep::fbcca_decode(x, grid_or_benchmark(freqs), n_harmonics, fs).index;
        },
        py::arg("x"), py::arg("fs"), py::arg("n_harmonics") = 5, py::arg("freqs") = py::none());

    // ------------------------------------------------------------ SPD geometry
    m.def(
        "spd_mean", [](const std::vector<MatrixXd>& ms) { return riemann::spd_geometric_mean(to_spd(ms)).matrix(); },
        py::arg("matrices"), "Affine-invariant geometric mean.");
    m.def(
        "airm_distance",
        [](const MatrixXd& a, const MatrixXd& b) {
            return riemann::airm_distance(riemann::SpdMatrix(a), riemann::SpdMatrix(b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "tangent_project",
        [](const MatrixXd& c, const MatrixXd& ref) {
            return riemann::tangent_project(riemann::SpdMatrix(c), riemann::SpdMatrix(ref));
        },
        py::arg("c"), py::arg("ref"));

    // ------------------------------------------------------------ SSVEP attack
    m.def(
        "ssvep_objective",
        [](const MatrixXd& r, const std::vector<MatrixXd>& windows, double f_hat, double fs, double alpha,
           int n_harmonics) {
            const MatrixXd y = ssvep::reference_signal(f_hat, n_harmonics, r.cols(), fs);
            const auto v = attack::ssvep_objective_grad(r, windows, y, alpha, fs);
            return py::make_tuple(v.value, v.grad);
        },
        py::arg("r"), py::arg("windows"), py::arg("f_hat"), py::arg("fs"), py::arg("alpha") = 0.05,
        py::arg("n_harmonics") = 5, "Objective value and gradient with respect to the raw perturbation r.");
    m.def(
        "craft_ssvep",
        [](const std::vector<MatrixXd>& windows, double f_hat, double fs, std::optional<std::vector<double>> freqs,
           double alpha, double step, double spr, int max_iter) {
            attack::CraftOptions opt;
            opt.alpha = alpha;
            opt.step = step;
            opt.spr_threshold_db = spr;
            opt.max_iter = max_iter;
            py::gil_scoped_release release;
            auto t = attack::craft_delta(windows, grid_or_benchmark(freqs), f_hat, fs, opt);
            py::gil_scoped_acquire acquire;
            return py::make_tuple(t.delta, template_info(t));
        },
        py::arg("windows"), py::arg("f_hat"), py::arg("fs"), py::arg("freqs") = py::none(), py::arg("alpha") = 0.05,
        py::arg("step") = 1e-3, py::arg("spr_db") = 25.0, py::arg("max_iter") = 10000);
    m.def("gaussian_noise", &attack::gaussian_noise, py::arg("rows"), py::arg("cols"), py::arg("reference_energy"),
          py::arg("spr_db"), py::arg("seed"));

    // ------------------------------------------------------------ pipeline
    m.def(
        "synth_p300",
        [](const path& out, int n_train, int n_test, int repeats, std::uint64_t seed, std::uint64_t subject_seed) {
            auto cfg = synth::SynthConfig::p300_default();
            cfg.seed = seed;
            cfg.subject_seed = subject_seed;
            py::gil_scoped_release release;
            data::write_dataset(out, synth::synth_p300_dataset(cfg, n_train, n_test, repeats));
        },
        py::arg("out"), py::arg("n_train") = 40, py::arg("n_test") = 36, py::arg("repeats") = 15, py::arg("seed") = 1,
        py::arg("subject_seed") = 1);
    m.def(
        "synth_ssvep",
        [](const path& out, int blocks, std::uint64_t seed, std::uint64_t subject_seed) {
            auto cfg = synth::SynthConfig::ssvep_default();
            cfg.seed = seed;
            cfg.subject_seed = subject_seed;
            py::gil_scoped_release release;
            data::write_dataset(out, synth::synth_ssvep_dataset(cfg, ssvep::FrequencyGrid::benchmark(), blocks));
        },
        py::arg("out"), py::arg("blocks") = 6, py::arg("seed") = 1, py::arg("subject_seed") = 1);
    m.def("dataset_paradigm", &data::dataset_paradigm, py::arg("dir"));
    m.def(
        "ssvep_windows",
        [](const path& dir, int block) {
            const auto d = data::read_ssvep_dataset(dir);
            auto w = eval::ssvep_windows(d.block(block));
            return py::make_tuple(w.windows, w.targets);
        },
        py::arg("dir"), py::arg("block"), "Filtered analysis windows of one block and their target indices.");
    m.def(
        "train_p300",
        [](const path& data_dir, const path& model, const std::string& variant, int n_filters, double l2) {
            py::gil_scoped_release release;
            const auto d = data::read_p300_dataset(data_dir);
            p300::VictimConfig vc;
            vc.variant = p300::variant_from_string(variant);
            vc.n_filters = n_filters;
            vc.l2 = l2;
            p300::train_victim(d.train, vc, d.grid).save(model);
        },
        py::arg("data"), py::arg("model"), py::arg("variant") = "riemann", py::arg("n_filters") = 4,
        py::arg("l2") = 1.0);
    m.def(
        "p300_accuracy",
        [](const path& model, const path& data_dir, int repeats) {
            py::gil_scoped_release release;
            const auto d = data::read_p300_dataset(data_dir);
            return eval::p300_accuracy(p300::P300Victim::load(model), d.test, repeats, d.grid);
        },
        py::arg("model"), py::arg("data"), py::arg("repeats") = 15);
    m.def(
        "craft_p300",
        [](const path& model, const path& data_dir, const std::string& stem, double epsilon) {
            py::gil_scoped_release release;
            const auto d = data::read_p300_dataset(data_dir);
            const auto t = attack::craft_template_from_trials(p300::P300Victim::load(model), d.train, epsilon, {}, d.grid);
            t.save(stem);
            py::gil_scoped_acquire acquire;
            return t.pattern;
        },
        py::arg("model"), py::arg("data"), py::arg("stem"), py::arg("epsilon") = 0.5,
        "Craft a template from the training split, save <stem>.bin/.json and return the pattern.");
    m.def(
        "score_p300_json",
        [](const path& model, const path& data_dir, const MatrixXd& pattern, const std::string& attackers,
           std::vector<int> repeats, Index delay_samples) {
            py::gil_scoped_release release;
            const auto d = data::read_p300_dataset(data_dir);
            eval::P300Scoring s;
            s.attackers = attackers;
            s.repeats = std::move(repeats);
            s.delay_samples = delay_samples;
            s.perturbation = pattern.size() == 0 ? "none" : "adversarial";
            std::vector<std::string> out;
            for (const auto& r : eval::score_p300(p300::P300Victim::load(model), d.test, pattern, s,
                                                  p300::P300Protocol::synthetic(), d.grid))
                out.push_back(r.to_json());
            return out;
        },
        py::arg("model"), py::arg("data"), py::arg("pattern"), py::arg("attackers"), py::arg("repeats"),
        py::arg("delay_samples") = 0);
}
