#include "spellattack/metrics.hpp"

#include <cmath>

#include "spellattack/error.hpp"

namespace spellattack::metrics {

double itr(double r, int q, double t_minutes) {
    if (q < 2) throw ParameterError("ITR needs at least two targets");
    if (!(r >= 0.0 && r <= 1.0)) throw ParameterError("accuracy must lie in [0, 1]");
    if (!(t_minutes > 0.0)) throw ParameterError("selection time must be positive");
    const double qd = static_cast<double>(q);
    if (r <= 1.0 / qd) return 0.0;
    double bits = std::log2(qd) + r * std::log2(r);
    if (r < 1.0) bits += (1.0 - r) * std::log2((1.0 - r) / (qd - 1.0));
    return bits / t_minutes;
}

double spr_db(double signal_energy, double perturbation_energy) {
    if (!(perturbation_energy > 0.0)) throw DegenerateInputError("SPR of a zero perturbation is undefined");
    if (!(signal_energy > 0.0)) throw DegenerateInputError("SPR against a zero signal is undefined");
    return 10.0 * std::log10(signal_energy / perturbation_energy);
}

double energy(const MatrixXd& x) { return x.squaredNorm(); }

double spr_db(const MatrixXd& reference, const MatrixXd& perturbation) {
    if (reference.rows() != perturbation.rows() || reference.cols() != perturbation.cols()) {
        throw ParameterError("SPR operands differ in shape");
    }
    return spr_db(energy(reference), energy(perturbation));
}

MatrixXd scale_to_spr(const MatrixXd& p, double reference_energy, double spr) {
    const double e = energy(p);
    if (!(e > 0.0)) throw DegenerateInputError("cannot rescale a zero perturbation");
    const double target = reference_energy * std::pow(10.0, -spr / 10.0);
    return p * std::sqrt(target / e);
}

}  // namespace spellattack::metrics
