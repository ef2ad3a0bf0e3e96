#pragma once

#include <string>
#include <vector>

#include "metastable/config.hpp"
#include "metastable/expr.hpp"

namespace metastable {

// Problem statement: drift b(x), solution-dependent diffusion a(x,c),
// initial data g(x) on a truncated interval with inward drift at both ends.
struct SystemSpec {
    Expr b;
    Expr a;
    Expr g;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double g_min = 0.0;  // inf g over the domain
    double g_max = 0.0;  // sup g over the domain
    double lipschitz_bound = 1e4;   // declared pass threshold for sampled ratios
    double ellipticity_floor = 1e-8;
    int grid_n = 4096;
    double root_tol = 1e-12;

    static SystemSpec from_config(const Config& cfg);

    // Content identity for cache keys: the coefficient expressions and domain.
    std::string content_key() const;
};

struct Interval {
    double lo = 0.0, hi = 0.0;
    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct EquilibriumSet {
    std::vector<double> stable;    // O_1 < ... < O_n
    std::vector<double> unstable;  // separatrix points
    std::vector<Interval> basins;  // D_i, open intervals, one per stable point

    int size() const { return static_cast<int>(stable.size()); }
    // Index of the basin containing x (-1 when x sits on a separatrix).
    int basin_of(double x) const;
};

struct AssumptionCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass() const;
    std::string to_text() const;
};

// Sign-scan on a uniform grid followed by bisection to root_tol.  Stable
// roots are + -> - sign changes of b; - -> + changes are separatrices.
// Sign-degenerate (tangent) roots are reported as errors, not classified.
EquilibriumSet find_equilibria(const SystemSpec& spec, double root_tol);
EquilibriumSet find_equilibria(const SystemSpec& spec);

// D_i^delta = { x in D_i : dist(x, boundary of D_i) >= delta, |x| <= 1/delta }.
Interval shrunk_basin(const Interval& basin, double delta);

// Samples ellipticity, Lipschitz ratios and confinement; failures are report
// entries, never exceptions.
AssumptionReport validate_assumptions(const SystemSpec& spec, int grid_n);

}  // namespace metastable
