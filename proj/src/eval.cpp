#include "spellattack/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"
#include "spellattack/metrics.hpp"
#include "spellattack/parallel.hpp"
#include "spellattack/rng.hpp"

namespace spellattack::eval {

std::string format_double(double v) {
    if (!std::isfinite(v)) throw NumericalError("cannot format a non-finite value");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> mean_opt(const std::vector<AttackRow>& rows, std::optional<double> AttackRow::*field) {
    double s = 0.0;
    for (const auto& r : rows) {
        if (!(r.*field)) return std::nullopt;
        s += *(r.*field);
    }
    return s / static_cast<double>(rows.size());
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

nlohmann::json jv(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json row_json(const AttackRow& r) {
    return {{"attacker", r.attacker},         {"attacker_score", jv(r.attacker_score)},
            {"user_score", r.user_score},     {"attacker_itr", jv(r.attacker_itr)},
            {"user_itr", r.user_itr},         {"period_spr_db", jv(r.period_spr_db)},
            {"trial_spr_db", jv(r.trial_spr_db)}, {"n_trials", r.n_trials}};
}

}  // namespace

AttackRow AttackReport::aggregate() const {
    AttackRow a;
    a.attacker = "mean";
    if (rows.empty()) return a;
    a.attacker_score = mean_opt(rows, &AttackRow::attacker_score);
    a.attacker_itr = mean_opt(rows, &AttackRow::attacker_itr);
    a.period_spr_db = mean_opt(rows, &AttackRow::period_spr_db);
    a.trial_spr_db = mean_opt(rows, &AttackRow::trial_spr_db);
    double us = 0.0, ui = 0.0;
    for (const auto& r : rows) {
        us += r.user_score;
        ui += r.user_itr;
        a.n_trials += r.n_trials;
    }
    a.user_score = us / static_cast<double>(rows.size());
    a.user_itr = ui / static_cast<double>(rows.size());
    return a;
}

std::string AttackReport::to_csv() const {
    std::string out = "attacker,attacker_score,user_score,attacker_itr,user_itr,period_spr_db,trial_spr_db,n_trials\n";
    auto emit = [&](const AttackRow& r) {
        out += r.attacker + "," + cell(r.attacker_score) + "," + format_double(r.user_score) + "," +
               cell(r.attacker_itr) + "," + format_double(r.user_itr) + "," + cell(r.period_spr_db) + "," +
               cell(r.trial_spr_db) + "," + std::to_string(r.n_trials) + "\n";
    };
    for (const auto& r : rows) emit(r);
    emit(aggregate());
    return out;
}

std::string AttackReport::to_json(const std::string& meta_json) const {
    nlohmann::json j = nlohmann::json::parse(meta_json);
    j["paradigm"] = paradigm;
    j["victim"] = victim;
    j["perturbation"] = perturbation;
    j["repeats"] = repeats;
    j["delay_samples"] = delay_samples;
    j["n_targets"] = n_targets;
    j["minutes_per_selection"] = minutes_per_selection;
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows) rs.push_back(row_json(r));
    j["rows"] = rs;
    j["aggregate"] = row_json(aggregate());
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- P300

namespace {

struct TrialOutcome {
    char decoded = '?';
    std::optional<double> period_spr, trial_spr;
};

// Onset order of the schedule (stable for equal onsets).
std::vector<std::size_t> onset_order(const p300::P300Trial& t) {
    std::vector<std::size_t> idx(t.schedule.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return t.schedule[a].onset < t.schedule[b].onset; });
    return idx;
}

TrialOutcome attack_trial(const p300::P300Victim& victim, const p300::P300Trial& trial,
                          const std::vector<std::size_t>& order, const std::vector<double>& clean, int repeats,
                          const MatrixXd& pattern, std::optional<std::pair<int, int>> codes, Index delay,
                          const p300::SpellerGrid& grid) {
    const std::size_t used = std::min<std::size_t>(order.size(), static_cast<std::size_t>(12 * repeats));
    const Index n = trial.sig.n_samples();
    const Index ep = victim.epoch_len;
    TrialOutcome out;
    std::vector<double> probs = clean;
    if (!codes || pattern.size() == 0) {
        out.decoded = p300::decode_scores(trial.schedule, probs, repeats, grid).character;
        return out;
    }
    std::vector<Index> inj;
    for (std::size_t k = 0; k < used; ++k) {
        const auto& ev = trial.schedule[order[k]];
        if (ev.code == codes->first || ev.code == codes->second) inj.push_back(ev.onset + delay);
    }
    const Index span_begin = trial.schedule[order.front()].onset;
    const Index span_end = std::min(n, trial.schedule[order[used - 1]].onset + ep);
    const Index len = pattern.cols();

    // perturbation over the trial span, overlaps summed, clipped at the span end
    MatrixXd d = MatrixXd::Zero(trial.sig.n_channels(), span_end - span_begin);
    Eigen::Array<bool, Eigen::Dynamic, 1> mask = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(d.cols(), false);
    for (Index s : inj) {
        const Index a = std::max(s, span_begin), b = std::min(s + len, span_end);
        if (a >= b) continue;
        d.middleCols(a - span_begin, b - a) += pattern.middleCols(a - s, b - a);
        mask.segment(a - span_begin, b - a) = true;
    }
    const MatrixXd& x = trial.sig.data();
    double e_pert = d.squaredNorm(), e_trial = 0.0, e_period = 0.0;
    for (Index c = 0; c < d.cols(); ++c) {
        const double e = x.col(span_begin + c).squaredNorm();
        e_trial += e;
        if (mask(c)) e_period += e;
    }
    if (e_pert > 0.0) {
        out.period_spr = metrics::spr_db(e_period, e_pert);
        out.trial_spr = metrics::spr_db(e_trial, e_pert);
    }

    for (std::size_t k = 0; k < used; ++k) {
        const std::size_t i = order[k];
        const Index o = trial.schedule[i].onset;
        if (o + ep > span_end) continue;
        const auto seg = d.middleCols(o - span_begin, ep);
        if (!mask.segment(o - span_begin, ep).any()) continue;
        probs[i] = p300::epoch_prob(victim, x.middleCols(o, ep) + seg);
    }
    out.decoded = p300::decode_scores(trial.schedule, probs, repeats, grid).character;
    return out;
}

}  // namespace

std::vector<AttackReport> score_p300(const p300::P300Victim& victim, std::span<const p300::P300Trial> test,
                                     const MatrixXd& pattern, const P300Scoring& scoring,
                                     const p300::P300Protocol& protocol, const p300::SpellerGrid& grid) {
    if (test.empty()) throw ParameterError("no test trials");
    if (pattern.size() != 0 && pattern.rows() != victim.n_channels()) {
        throw ParameterError("template channel count differs from the victim");
    }
    if (scoring.delay_samples < 0) throw ParameterError("delay must be non-negative");
    for (char c : scoring.attackers)
        if (!grid.contains(c)) throw ParameterError(std::string("attacker character '") + c + "' is not in the grid");
    for (int r : scoring.repeats) {
        if (r < 1) throw ParameterError("repeats must be positive");
        for (const auto& t : test) {
            if (!t.user_char) throw ParameterError("test trials need user characters");
            if (t.schedule.size() < static_cast<std::size_t>(12 * r)) {
                throw ParameterError("trial has fewer than " + std::to_string(r) + " repeats");
            }
        }
    }

    std::vector<std::vector<double>> clean(test.size());
    std::vector<std::vector<std::size_t>> order(test.size());
    parallel_for(test.size(), [&](std::size_t t) {
        clean[t] = p300::trial_probs(victim, test[t]);
        order[t] = onset_order(test[t]);
    });

    const std::string attackers = scoring.attackers.empty() ? std::string(1, '\0') : scoring.attackers;
    const std::size_t na = attackers.size(), nr = scoring.repeats.size(), nt = test.size();
    std::vector<TrialOutcome> outcomes(na * nr * nt);
    parallel_for(na * nt, [&](std::size_t job) {
        const std::size_t a = job / nt, t = job % nt;
        std::optional<std::pair<int, int>> codes;
        if (attackers[a] != '\0') codes = grid.codes_of(attackers[a]);
        for (std::size_t r = 0; r < nr; ++r) {
            outcomes[(a * nr + r) * nt + t] = attack_trial(victim, test[t], order[t], clean[t], scoring.repeats[r],
                                                           pattern, codes, scoring.delay_samples, grid);
        }
    });

    std::vector<AttackReport> reports;
    for (std::size_t r = 0; r < nr; ++r) {
        AttackReport rep;
        rep.paradigm = "p300";
        rep.victim = p300::to_string(victim.variant);
        rep.perturbation = pattern.size() == 0 ? "none" : scoring.perturbation;
        rep.repeats = scoring.repeats[r];
        rep.delay_samples = scoring.delay_samples;
        rep.n_targets = 36;
        rep.minutes_per_selection = protocol.selection_seconds(rep.repeats) / 60.0;
        for (std::size_t a = 0; a < na; ++a) {
            AttackRow row;
            const bool has_attacker = attackers[a] != '\0';
            if (has_attacker) row.attacker = std::string(1, attackers[a]);
            double hit_a = 0.0, hit_u = 0.0;
            std::vector<double> pspr, tspr;
            for (std::size_t t = 0; t < nt; ++t) {
                const auto& o = outcomes[(a * nr + r) * nt + t];
                if (has_attacker && o.decoded == attackers[a]) hit_a += 1.0;
                if (o.decoded == *test[t].user_char) hit_u += 1.0;
                if (o.period_spr) pspr.push_back(*o.period_spr);
                if (o.trial_spr) tspr.push_back(*o.trial_spr);
            }
            const double ntd = static_cast<double>(nt);
            row.user_score = hit_u / ntd;
            row.user_itr = metrics::itr(row.user_score, rep.n_targets, rep.minutes_per_selection);
            if (has_attacker) {
                row.attacker_score = hit_a / ntd;
                row.attacker_itr = metrics::itr(*row.attacker_score, rep.n_targets, rep.minutes_per_selection);
            }
            if (pspr.size() == nt) row.period_spr_db = mean_of(pspr);
            if (tspr.size() == nt) row.trial_spr_db = mean_of(tspr);
            row.n_trials = static_cast<int>(nt);
            rep.rows.push_back(std::move(row));
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

double p300_accuracy(const p300::P300Victim& victim, std::span<const p300::P300Trial> test, int repeats,
                     const p300::SpellerGrid& grid) {
    P300Scoring s;
    s.attackers.clear();
    s.repeats = {repeats};
    return score_p300(victim, test, MatrixXd(), s, p300::P300Protocol::synthetic(), grid).front().rows.front().user_score;
}

// ---------------------------------------------------------------- SSVEP

SsvepVictim SsvepVictim::cca(const ssvep::FrequencyGrid& grid, Index n_samples, double fs, int n_harmonics) {
    return SsvepVictim(ssvep::CcaDecoder(grid, n_harmonics, n_samples, fs));
}

SsvepVictim SsvepVictim::fbcca(const ssvep::FrequencyGrid& grid, Index n_samples, double fs, int n_harmonics,
                               const ssvep::FilterBankConfig& config) {
    return SsvepVictim(ssvep::FbccaDecoder(grid, n_harmonics, n_samples, fs, config));
}

Index SsvepVictim::decode(const MatrixXd& window) const {
    return std::visit([&](const auto& d) { return d.decode(window).index; }, impl_);
}

std::string SsvepVictim::name() const { return impl_.index() == 0 ? "cca" : "fbcca"; }

double SsvepVictim::fs() const {
    return std::visit([](const auto& d) { return d.fs(); }, impl_);
}

const ssvep::FrequencyGrid& SsvepVictim::grid() const {
    if (impl_.index() == 0) return std::get<0>(impl_).grid();
    return std::get<1>(impl_).cca().grid();
}

SsvepWindows ssvep_windows(std::span<const ssvep::SsvepTrial> trials) {
    SsvepWindows w;
    w.windows.resize(trials.size());
    w.window_energy.resize(trials.size());
    w.trial_energy.resize(trials.size());
    w.targets.resize(trials.size());
    parallel_for(trials.size(), [&](std::size_t i) {
        const auto& t = trials[i];
        if (!t.target) throw ParameterError("SSVEP trial " + std::to_string(i) + " has no target frequency");
        const auto win = dsp::ssvep_window(t.sig.fs());
        if (t.stim_onset < 0 || t.stim_onset + win.start + win.length > t.sig.n_samples()) {
            throw BoundsError("SSVEP analysis window runs past the end of trial " + std::to_string(i));
        }
        const MatrixXd f = ssvep::filter_trial(t.sig);
        w.windows[i] = f.middleCols(t.stim_onset + win.start, win.length);
        w.window_energy[i] = metrics::energy(w.windows[i]);
        w.trial_energy[i] = metrics::energy(f);
        w.targets[i] = *t.target;
    });
    return w;
}

AttackReport score_ssvep(const SsvepVictim& victim, const SsvepWindows& test, std::span<const Index> attackers,
                         const PerturbationFn& perturbation, const std::string& perturbation_name) {
    if (test.size() == 0) throw ParameterError("no test trials");
    const auto& grid = victim.grid();
    std::vector<Index> atk(attackers.begin(), attackers.end());
    if (atk.empty()) atk.push_back(-1);
    for (Index a : atk)
        if (a < -1 || a >= grid.size()) throw ParameterError("attacker index outside the grid");
    const std::size_t na = atk.size(), nt = test.size();
    std::vector<Index> decoded(na * nt);
    std::vector<std::optional<std::pair<double, double>>> sprs(na * nt);
    parallel_for(na * nt, [&](std::size_t job) {
        const std::size_t a = job / nt, t = job % nt;
        MatrixXd p = perturbation ? perturbation(atk[a], t) : MatrixXd();
        if (p.size() == 0) {
            decoded[job] = victim.decode(test.windows[t]);
            return;
        }
        if (p.rows() != test.windows[t].rows() || p.cols() != test.windows[t].cols()) {
            throw ParameterError("perturbation shape differs from the analysis window");
        }
        const double e = metrics::energy(p);
        if (e > 0.0) {
            sprs[job] = std::make_pair(metrics::spr_db(test.window_energy[t], e), metrics::spr_db(test.trial_energy[t], e));
        }
        decoded[job] = victim.decode(test.windows[t] + p);
    });

    AttackReport rep;
    rep.paradigm = "ssvep";
    rep.victim = victim.name();
    rep.perturbation = perturbation_name;
    rep.n_targets = static_cast<int>(grid.size());
    rep.minutes_per_selection = kSsvepSelectionSeconds / 60.0;
    for (std::size_t a = 0; a < na; ++a) {
        AttackRow row;
        double hit_a = 0.0, hit_u = 0.0;
        std::vector<double> pspr, tspr;
        for (std::size_t t = 0; t < nt; ++t) {
            const Index d = decoded[a * nt + t];
            if (d == atk[a]) hit_a += 1.0;
            if (d == test.targets[t]) hit_u += 1.0;
            if (sprs[a * nt + t]) {
                pspr.push_back(sprs[a * nt + t]->first);
                tspr.push_back(sprs[a * nt + t]->second);
            }
        }
        const double ntd = static_cast<double>(nt);
        row.user_score = hit_u / ntd;
        row.user_itr = metrics::itr(row.user_score, rep.n_targets, rep.minutes_per_selection);
        if (atk[a] >= 0) {
            row.attacker = std::string(1, grid.glyphs[static_cast<std::size_t>(atk[a])]);
            row.attacker_score = hit_a / ntd;
            row.attacker_itr = metrics::itr(*row.attacker_score, rep.n_targets, rep.minutes_per_selection);
        }
        if (pspr.size() == nt) {
            row.period_spr_db = mean_of(pspr);
            row.trial_spr_db = mean_of(tspr);
        }
        row.n_trials = static_cast<int>(nt);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

AttackReport score_ssvep_templates(const SsvepVictim& victim, const SsvepWindows& test,
                                   std::span<const attack::SsvepTemplate> templates,
                                   const std::function<Index(Index)>& delay) {
    std::vector<Index> attackers;
    std::vector<MatrixXd> deltas;
    for (const auto& t : templates) {
        const Index a = victim.grid().index_of_frequency(t.f_hat);
        attackers.push_back(a);
        deltas.push_back(delay ? attack::delay_delta(t.delta, delay(a)) : t.delta);
    }
    auto rep = score_ssvep(
        victim, test, attackers, [&](Index a, std::size_t) {
            const auto it = std::find(attackers.begin(), attackers.end(), a);
            return deltas[static_cast<std::size_t>(it - attackers.begin())];
        },
        "adversarial");
    return rep;
}

AttackReport score_ssvep_noise(const SsvepVictim& victim, const SsvepWindows& test, const std::string& kind,
                               double spr_db, std::uint64_t seed) {
    if (kind != "gaussian" && kind != "single" && kind != "compound") {
        throw ParameterError("unknown noise kind '" + kind + "'");
    }
    return score_ssvep(
        victim, test, {}, [&](Index, std::size_t t) -> MatrixXd {
            const auto& w = test.windows[t];
            const std::uint64_t s = splitmix64(seed ^ splitmix64(t));
            if (kind == "gaussian") return attack::gaussian_noise(w.rows(), w.cols(), test.window_energy[t], spr_db, s);
            if (kind == "single") {
                return attack::single_periodic_noise(victim.grid(), w.rows(), w.cols(), victim.fs(), test.window_energy[t],
                                                     spr_db, s);
            }
            return attack::compound_periodic_noise(victim.grid(), w.rows(), w.cols(), victim.fs(), test.window_energy[t],
                                                   spr_db, s);
        },
        kind);
}

double ssvep_accuracy(const SsvepVictim& victim, const SsvepWindows& test) {
    return score_ssvep(victim, test, {}, {}, "none").rows.front().user_score;
}

// ---------------------------------------------------------------- sweeps

namespace {

DelayPoint summarise(double delay, const AttackReport& rep) {
    DelayPoint p;
    p.delay = delay;
    std::vector<double> u, a;
    for (const auto& r : rep.rows) {
        u.push_back(r.user_score);
        a.push_back(r.attacker_score.value_or(0.0));
    }
    auto sd = [](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
    };
    p.user_mean = mean_of(u);
    p.attacker_mean = mean_of(a);
    p.user_sd = sd(u, p.user_mean);
    p.attacker_sd = sd(a, p.attacker_mean);
    return p;
}

}  // namespace

std::vector<DelayPoint> p300_delay_sweep(const p300::P300Victim& victim, std::span<const p300::P300Trial> test,
                                         const MatrixXd& pattern, const std::string& attackers, int repeats,
                                         std::span<const Index> delays, const p300::P300Protocol& protocol,
                                         const p300::SpellerGrid& grid) {
    std::vector<DelayPoint> out;
    for (Index d : delays) {
        P300Scoring s;
        s.attackers = attackers;
        s.repeats = {repeats};
        s.delay_samples = d;
        out.push_back(summarise(static_cast<double>(d), score_p300(victim, test, pattern, s, protocol, grid).front()));
    }
    return out;
}

std::vector<DelayPoint> ssvep_delay_sweep(const SsvepVictim& victim, const SsvepWindows& test,
                                          std::span<const attack::SsvepTemplate> templates,
                                          std::span<const double> fractions, double fs) {
    std::vector<DelayPoint> out;
    for (double frac : fractions) {
        if (!(frac >= 0.0)) throw ParameterError("delay fractions must be non-negative");
        const auto rep = score_ssvep_templates(victim, test, templates, [&](Index a) {
            return static_cast<Index>(std::lround(frac * fs / victim.grid().freqs[static_cast<std::size_t>(a)]));
        });
        out.push_back(summarise(frac, rep));
    }
    return out;
}

std::string delay_sweep_csv(std::span<const DelayPoint> points, const std::string& delay_column) {
    std::string out = delay_column + ",user_mean,user_sd,attacker_mean,attacker_sd\n";
    for (const auto& p : points) {
        out += format_double(p.delay) + "," + format_double(p.user_mean) + "," + format_double(p.user_sd) + "," +
               format_double(p.attacker_mean) + "," + format_double(p.attacker_sd) + "\n";
    }
    return out;
}

MatrixXd transfer_matrix(std::size_t n_sources, std::size_t n_targets,
                         const std::function<double(std::size_t, std::size_t)>& score) {
    MatrixXd m(static_cast<Index>(n_sources), static_cast<Index>(n_targets));
    for (std::size_t i = 0; i < n_sources; ++i)
        for (std::size_t j = 0; j < n_targets; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = score(i, j);
    return m;
}

std::string matrix_csv(const MatrixXd& m, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels) {
    if (static_cast<Index>(row_labels.size()) != m.rows() || static_cast<Index>(col_labels.size()) != m.cols()) {
        throw ParameterError("label count differs from the matrix shape");
    }
    std::string out = "source";
    for (const auto& c : col_labels) out += "," + c;
    out += "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        out += row_labels[static_cast<std::size_t>(i)];
        for (Index j = 0; j < m.cols(); ++j) out += "," + format_double(m(i, j));
        out += "\n";
    }
    return out;
}

}  // namespace spellattack::eval
