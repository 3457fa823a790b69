#include "spellattack/attack_ssvep.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "spellattack/archive.hpp"
#include "spellattack/dsp.hpp"
#include "spellattack/metrics.hpp"
#include "spellattack/rng.hpp"

namespace spellattack::attack {

SsvepObjective::SsvepObjective(std::vector<MatrixXd> set, const MatrixXd& reference, double alpha, double fs,
                               double band_low_hz, double band_high_hz)
    : set_(std::move(set)), alpha_(alpha), fs_(fs), lo_(band_low_hz), hi_(band_high_hz) {
    if (set_.empty()) throw ParameterError("crafting set is empty");
    if (!(alpha >= 0.0)) throw ParameterError("alpha must be non-negative");
    rows_ = set_.front().rows();
    cols_ = set_.front().cols();
    if (reference.cols() != cols_) throw ParameterError("reference length differs from the windows");
    for (const auto& x : set_) {
        if (x.rows() != rows_ || x.cols() != cols_) throw ParameterError("crafting windows differ in shape");
        reference_energy_ += metrics::energy(x);
    }
    reference_energy_ /= static_cast<double>(set_.size());
    white_ref_ = ssvep::whiten(reference);
}

MatrixXd SsvepObjective::project(const MatrixXd& r) const { return dsp::band_project_rows(r, fs_, lo_, hi_); }

ObjectiveValue SsvepObjective::operator()(const MatrixXd& r) const {
    if (r.rows() != rows_ || r.cols() != cols_) throw ParameterError("r has the wrong shape");
    const MatrixXd delta = project(r);
    const double n = static_cast<double>(cols_);
    const double d = static_cast<double>(rows_);
    ObjectiveValue out;
    MatrixXd g_sum = MatrixXd::Zero(rows_, cols_);
    for (const auto& x : set_) {
        const MatrixXd v = x + delta;
        const VectorXd mu = v.rowwise().mean();
        MatrixXd xn = v.colwise() - mu;
        const VectorXd sd = (xn.rowwise().squaredNorm() / n).cwiseSqrt();
        for (Index i = 0; i < rows_; ++i) {
            if (!(sd(i) > 0.0)) throw DegenerateInputError("constant channel in the crafting set");
            xn.row(i) /= sd(i);
        }
        MatrixXd gram = xn * xn.transpose();
        gram.diagonal().array() += ssvep::kGramLoading * gram.trace() / d;
        Eigen::LLT<MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) throw NumericalError("Gram matrix is singular after loading");
        const MatrixXd k = llt.matrixL().solve(xn * white_ref_.transpose());
        const double tr = k.squaredNorm();
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(k * k.transpose(), Eigen::EigenvaluesOnly);
        const double lmax = eig.eigenvalues()(rows_ - 1);
        if (tr > d * lmax * (1.0 + 1e-12) + 1e-15 || lmax < tr / d * (1.0 - 1e-12) - 1e-15) {
            throw NumericalError("trace bound violated: tr(S) = " + std::to_string(tr) +
                                 ", lambda_max = " + std::to_string(lmax));
        }
        out.trace_sum += tr;
        out.lambda_sum += lmax;
        const MatrixXd t = llt.matrixU().solve(k);  // C^{-1} Xn Wy^T
        MatrixXd g = 2.0 * t * white_ref_ - 2.0 * (t * t.transpose()) * xn;
        for (Index i = 0; i < rows_; ++i) {
            const double gm = g.row(i).mean();
            const double gx = g.row(i).dot(xn.row(i)) / n;
            g.row(i) = (g.row(i).array() - gm - gx * xn.row(i).array()) / sd(i);
        }
        g_sum += g;
    }
    const double dn = delta.norm();
    out.value = -out.trace_sum + alpha_ * dn;
    out.grad = -project(g_sum);
    if (dn > 0.0) out.grad += alpha_ * delta / dn;
    return out;
}

ObjectiveValue ssvep_objective_grad(const MatrixXd& r, std::span<const MatrixXd> crafting_set,
                                    const MatrixXd& reference, double alpha, double fs) {
    return SsvepObjective({crafting_set.begin(), crafting_set.end()}, reference, alpha, fs)(r);
}

SsvepTemplate craft_delta(std::span<const MatrixXd> crafting_set, const ssvep::FrequencyGrid& grid, double f_hat,
                          double fs, const CraftOptions& options) {
    if (!(options.spr_threshold_db > 0.0)) throw ParameterError("SPR threshold must be positive");
    if (!(options.step > 0.0) || options.max_iter < 1) throw ParameterError("invalid descent settings");
    if (crafting_set.empty()) throw ParameterError("crafting set is empty");
    const Index k = grid.index_of_frequency(f_hat);
    const MatrixXd y = ssvep::reference_signal(f_hat, options.n_harmonics, crafting_set.front().cols(), fs);
    const SsvepObjective objective({crafting_set.begin(), crafting_set.end()}, y, options.alpha, fs,
                                   options.band_low_hz, options.band_high_hz);

    SsvepTemplate t;
    t.f_hat = f_hat;
    t.glyph = grid.glyphs[static_cast<std::size_t>(k)];
    t.fs = fs;
    t.alpha = options.alpha;
    t.step = options.step;
    t.spr_threshold_db = options.spr_threshold_db;
    t.reference_energy = objective.reference_energy();
    t.band_low_hz = options.band_low_hz;
    t.band_high_hz = options.band_high_hz;

    MatrixXd r = MatrixXd::Zero(objective.rows(), objective.cols());
    double previous = 0.0;
    for (int it = 1; it <= options.max_iter; ++it) {
        const ObjectiveValue ov = objective(r);
        if (it > 1 && ov.value > previous) ++t.objective_increases;
        previous = ov.value;
        r -= options.step * ov.grad;
        t.delta = objective.project(r);
        t.iterations = it;
        const double e = metrics::energy(t.delta);
        if (!(e > 0.0)) continue;
        t.final_spr_db = metrics::spr_db(t.reference_energy, e);
        if (t.final_spr_db < options.spr_threshold_db) return t;
    }
    throw CraftNotConverged("SPR stayed at " + std::to_string(t.final_spr_db) + " dB after " +
                                std::to_string(options.max_iter) + " iterations",
                            t);
}

MatrixXd gaussian_noise(Index rows, Index cols, double reference_energy, double spr_db, std::uint64_t seed) {
    Rng rng(seed);
    MatrixXd p(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) p(i, j) = rng.normal();
    return metrics::scale_to_spr(p, reference_energy, spr_db);
}

namespace {

VectorXd sinusoid(double f, double phase, Index cols, double fs) {
    VectorXd s(cols);
    for (Index n = 0; n < cols; ++n) s(n) = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / fs + phase);
    return s;
}

}  // namespace

MatrixXd single_periodic_noise(const ssvep::FrequencyGrid& grid, Index rows, Index cols, double fs,
                               double reference_energy, double spr_db, std::uint64_t seed) {
    grid.validate();
    Rng rng(seed);
    const double f = grid.freqs[rng.below(grid.freqs.size())];
    const double phase = rng.uniform(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    const VectorXd s = sinusoid(f, phase, cols, fs);
    MatrixXd p = s.transpose().replicate(rows, 1);
    return metrics::scale_to_spr(p, reference_energy, spr_db);
}

MatrixXd compound_periodic_noise(const ssvep::FrequencyGrid& grid, Index rows, Index cols, double fs,
                                 double reference_energy, double spr_db, std::uint64_t seed) {
    grid.validate();
    Rng rng(seed);
    VectorXd s = VectorXd::Zero(cols);
    for (double f : grid.freqs) {
        const double amp = 1.0 - rng.uniform();  // (0, 1]
        const double phase = rng.uniform(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
        s += amp * sinusoid(f, phase, cols, fs);
    }
    MatrixXd p = s.transpose().replicate(rows, 1);
    return metrics::scale_to_spr(p, reference_energy, spr_db);
}

MatrixXd delay_delta(const MatrixXd& delta, Index delay) {
    if (delay < 0) throw ParameterError("delay must be non-negative");
    MatrixXd out = MatrixXd::Zero(delta.rows(), delta.cols());
    if (delay < delta.cols()) out.rightCols(delta.cols() - delay) = delta.leftCols(delta.cols() - delay);
    return out;
}

void SsvepTemplate::save(const std::string& stem) const {
    MatrixArchive ar("ssvep-template");
    ar.put("delta", delta);
    ar.save(stem + ".bin");
    nlohmann::json j;
    j["schema_version"] = 1;
    j["f_hat"] = f_hat;
    j["glyph"] = std::string(1, glyph);
    j["fs"] = fs;
    j["alpha"] = alpha;
    j["step"] = step;
    j["spr_threshold_db"] = spr_threshold_db;
    j["final_spr_db"] = final_spr_db;
    j["reference_energy"] = reference_energy;
    j["iterations"] = iterations;
    j["objective_increases"] = objective_increases;
    j["band_low_hz"] = band_low_hz;
    j["band_high_hz"] = band_high_hz;
    j["subject_id"] = subject_id;
    j["channels"] = delta.rows();
    j["samples"] = delta.cols();
    std::ofstream f(stem + ".json", std::ios::trunc);
    if (!f) throw Error("cannot write " + stem + ".json");
    f << j.dump(2) << "\n";
}

SsvepTemplate SsvepTemplate::load(const std::string& stem) {
    const MatrixArchive ar = MatrixArchive::load(stem + ".bin");
    if (ar.kind() != "ssvep-template") throw FormatError(stem + ".bin is not an SSVEP template");
    SsvepTemplate t;
    t.delta = ar.get("delta");
    std::ifstream f(stem + ".json");
    if (!f) throw Error("cannot open " + stem + ".json");
    try {
        const auto j = nlohmann::json::parse(f);
        t.f_hat = j.at("f_hat").get<double>();
        const auto g = j.value("glyph", std::string("?"));
        t.glyph = g.empty() ? '?' : g[0];
        t.fs = j.at("fs").get<double>();
        t.alpha = j.value("alpha", 0.0);
        t.step = j.value("step", 0.0);
        t.spr_threshold_db = j.value("spr_threshold_db", 0.0);
        t.final_spr_db = j.value("final_spr_db", 0.0);
        t.reference_energy = j.value("reference_energy", 0.0);
        t.iterations = j.value("iterations", 0);
        t.objective_increases = j.value("objective_increases", 0);
        t.band_low_hz = j.value("band_low_hz", 7.0);
        t.band_high_hz = j.value("band_high_hz", 90.0);
        t.subject_id = j.value("subject_id", "");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(stem + ".json: " + e.what());
    }
    return t;
}

}  // namespace spellattack::attack
