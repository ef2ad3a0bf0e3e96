#pragma once

#include <functional>
#include <vector>

namespace metastable {

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_depth = 48;
    long max_evals = 2'000'000;
};

// Adaptive Simpson integration of f on [a, b].  Throws QuadratureFailure when
// the refinement budget is exhausted before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt = {});

// Same, but the integration interval is pre-split at the given interior
// points (kinks of the integrand, e.g. sign changes of the drift).
double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& interior_breaks,
                       const QuadratureOptions& opt = {});

}  // namespace metastable
