#pragma once

#include <map>
#include <vector>

#include "metastable/system_model.hpp"

namespace metastable {

struct StepControls {
    double dt0 = 1e-4;        // initial step
    double growth = 1.05;     // geometric mesh ratio after the transient
    double min_dt = 1e-12;    // fixed-point fallback floor
    long max_steps = 400000;  // time budget
    double fp_tol = 1e-10;    // lagged-coefficient fixed-point tolerance
    int fp_max_iters = 60;
};

// Backward-Euler solution history of the quasi-linear problem
//   u_t = (eps^2 / 2) a(x,u) u_xx + b(x) u_x,  u(0,.) = g,
// with zero-flux (reflecting) walls.  All accepted steps are retained so the
// coupled SDE stage can interpolate u at arbitrary (t, x).
struct PDESolution {
    double eps = 0.0;
    std::vector<double> xs;
    std::vector<double> times;                // accepted step times, times[0] = 0
    std::vector<std::vector<double>> states;  // one field per accepted time
    std::map<double, std::size_t> checkpoints;  // lambda -> time index, t = exp(lambda/eps^2)

    // scheme diagnostics
    int max_fp_iters = 0;
    long n_steps = 0;
    double max_residual = 0.0;
    int step_halvings = 0;

    double t_end() const { return times.back(); }
    double u_at(double t, double x) const;       // bilinear in (t, x)
    double value_at(std::size_t time_index, double x) const;
    const std::vector<double>& field_at_lambda(double lambda) const;
};

// Integrates to T = exp(lambda_end/eps^2), recording u at every requested
// lambda checkpoint.  The nonlinear coefficient is frozen at the previous
// iterate and re-evaluated in a fixed-point loop per step; if the loop
// stagnates the step is halved (StepFailure below min_dt).  The spatial
// operator is kept an M-matrix (discrete maximum principle); too coarse a
// grid for the requested eps raises ConfigError with the required N.
PDESolution solve_pde(const SystemSpec& spec, double eps, double lambda_end, int n_space,
                      const StepControls& ctl, const std::vector<double>& lambda_checkpoints);

struct Lemma1Report {
    double lambda = 0.0;
    double delta = 0.0;
    std::vector<double> basin_deviation;  // max_i |u(T, x) - u(T, O_i)| over D_i^delta
    double max_deviation = 0.0;
    bool pass = false;
    std::string to_text() const;
};

// Plateau check: max over shrunk basins of the deviation from the basin
// centre value; pass iff <= delta.
Lemma1Report check_lemma1(const PDESolution& sol, const EquilibriumSet& eq, double delta,
                          double lambda);

}  // namespace metastable
