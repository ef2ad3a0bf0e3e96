#pragma once

#include <vector>

#include "metastable/system_model.hpp"

namespace metastable {

// n x n matrix of transition costs V_ij(c) = V^{a(.,c)}(O_i, O_j) at a fixed
// solution level c.  Entries are nonnegative with zero diagonal and, in 1D,
// additive along ordered triples.
struct VMatrixAtC {
    double c = 0.0;
    int n = 0;
    std::vector<double> values;  // row-major

    double& at(int i, int j) { return values[i * n + j]; }
    double at(int i, int j) const { return values[i * n + j]; }
};

// V^{a(.,c)}(x, y) = 2 * integral over [min(x,y),max(x,y)] of
// max(-sign(y-x) b(s), 0) / a(s,c) ds: only drift-opposing stretches cost.
// Adaptive quadrature to relative tolerance 1e-10, split at drift sign
// changes (pass them in `drift_breaks` when known; otherwise they are
// detected by a scan).
double quasipotential_1d(const SystemSpec& spec, double c, double x, double y);
double quasipotential_1d(const SystemSpec& spec, double c, double x, double y,
                         const std::vector<double>& drift_breaks);

// Direct minimization of the normalized action over piecewise-linear paths:
// the per-segment time parameterization is optimized in closed form (which
// realizes the free-knot-time contract exactly), interior knot positions by
// coordinate descent.  Returns an upper bound on the quasi-potential.
double action_bruteforce(const SystemSpec& spec, double c, double x, double y,
                         int n_knots, int n_iters);

// Pairwise quasi-potentials between stable equilibria; verifies the 1D
// additivity invariant to 1e-8.
VMatrixAtC vmatrix(const SystemSpec& spec, const EquilibriumSet& eq, double c);

// Same with per-basin constants: alpha = a(x, sum_i c_i chi_{D_i}(x)).
VMatrixAtC vmatrix_tuple(const SystemSpec& spec, const EquilibriumSet& eq,
                         const std::vector<double>& c_per_basin);

}  // namespace metastable
