#pragma once

#include "spellattack/signal.hpp"

namespace spellattack::metrics {

/// Information transfer rate in bits/min for accuracy `r` over `q` targets
/// with `t_minutes` per selection. Zero when r <= 1/q; 0 log 0 is taken as 0.
double itr(double r, int q, double t_minutes);

/// 10 log10(signal_energy / perturbation_energy). Throws DegenerateInputError
/// for a zero perturbation.
double spr_db(double signal_energy, double perturbation_energy);

/// Sum of squares.
double energy(const MatrixXd& x);

/// SPR of `perturbation` against `reference` over the whole matrix; shapes must match.
double spr_db(const MatrixXd& reference, const MatrixXd& perturbation);

/// Rescale `p` so that spr_db(reference_energy, energy(p)) == spr_db.
MatrixXd scale_to_spr(const MatrixXd& p, double reference_energy, double spr_db);

}  // namespace spellattack::metrics
