#pragma once

#include <cstdint>

#include "metastable/pde.hpp"

namespace metastable {

struct SdeControls {
    double dt = 2e-3;
    double min_dt = 1e-9;
    double max_move = 0.25;  // trigger for local sub-stepping, in domain widths
    int n_threads = 0;       // 0: hardware concurrency
};

struct EnsembleResult {
    double eps = 0.0;
    double lambda = 0.0;
    double horizon = 0.0;
    double x0 = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;

    std::vector<double> basin_weights;      // empirical occupation at the horizon
    std::vector<double> basin_half_widths;  // 95% binomial half-widths
    double mean_g = 0.0;                    // estimator of E g(X_T)
    double half_width = 0.0;                // 95% half-width of mean_g

    std::string to_text() const;
};

// Euler-Maruyama ensemble of the nonlinear perturbation
//   dX = b(X) ds + eps * sigma(X, u(t - s, X)) dW,  sigma = sqrt(a),
// with u interpolated from the PDE history and reflecting walls.  Paths are
// seeded from a splittable per-path stream, so the result is reproducible
// and independent of the thread schedule.
EnsembleResult simulate_nonlinear_sde(const SystemSpec& spec, const EquilibriumSet& eq, double eps,
                                      double lambda, double x0, const PDESolution& sol,
                                      long n_paths, const SdeControls& ctl, std::uint64_t seed);

}  // namespace metastable
