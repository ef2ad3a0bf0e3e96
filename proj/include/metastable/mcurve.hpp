#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metastable/hierarchy.hpp"

namespace metastable {

// Tabulated, piecewise-monotone representation of a transition-rate curve
// M_Gamma(c) on [c_lo, c_hi].  The sample table drives structure discovery
// (monotone segments, local maxima); root solves are refined against the
// exact evaluator when one is attached, so downstream breakpoints inherit
// quadrature accuracy rather than interpolation accuracy.
class MCurve {
  public:
    std::string cycle_id;
    std::vector<double> cs;  // strictly increasing sample locations
    std::vector<double> ms;  // curve values, finite and >= 0
    std::vector<double> local_maxima;      // interior local-max locations, refined
    std::vector<double> segment_breaks;    // interior extremum locations splitting monotone pieces
    std::function<double(double)> exact;   // optional exact evaluator

    double c_lo() const { return cs.front(); }
    double c_hi() const { return cs.back(); }

    double eval(double c) const;  // exact when attached, else linear interpolation

    // Builds structure (refined extrema, monotone segments) from the samples.
    // Interior extrema are golden-section refined to 1e-9 when `exact` is set.
    void build_structure();

    // min{ c in [lo,hi] : M(c) = lambda }  (NaN when the set is empty)
    double min_solution(double lambda, double lo, double hi) const;
    // max{ c in [lo,hi] : M(c) = lambda }
    double max_solution(double lambda, double lo, double hi) const;
    // inf{ c > c1 : M(c) >= lambda } restricted to the curve domain (NaN when empty)
    double inf_above(double c1, double lambda) const;
    // sup{ c < c1 : M(c) >= lambda }
    double sup_below(double c1, double lambda) const;

    // +1 / -1 for locally increasing / decreasing at c; 0 when degenerate.
    int slope_sign(double c) const;

    // Global max over [lo,hi] (sample scan + refinement).
    double max_on(double lo, double hi) const;

    std::string to_table_text(const std::string& key_hex) const;
    static MCurve from_table_text(const std::string& text, std::string* key_hex_out);
};

// All rate curves of a (stable) hierarchy tabulated over a c-grid in one
// sweep: at each grid c the V matrix is rebuilt, the hierarchy structure is
// compared (a flip raises HierarchyUnstable naming the offending cycle), and
// every cycle of rank < R contributes one sample.  Curves are keyed by the
// member-set key of their cycle; promoted singletons share their base
// cycle's curve.
std::map<std::string, MCurve> tabulate_all_m_curves(const SystemSpec& spec,
                                                    const EquilibriumSet& eq,
                                                    const Hierarchy& h,
                                                    double c_lo, double c_hi, int n_grid,
                                                    const std::string& cache_dir = "");

// Single-cycle front end (the hierarchy acts as the probe for structure
// stability across grid values).
MCurve tabulate_m_curve(const SystemSpec& spec, const EquilibriumSet& eq, const Hierarchy& probe,
                        const std::string& cycle_key, double c_lo, double c_hi, int n_grid,
                        const std::string& cache_dir = "");

// User-supplied V tables: rows "c v11 v12 ... vnn" (row-major, zero diagonal).
// Returns matrices sorted by c.
std::vector<VMatrixAtC> read_vtable_file(const std::string& path);

// M-curves for every cycle of a hierarchy built from user tables, linearly
// interpolated between table rows.
std::map<std::string, MCurve> m_curves_from_vtables(const std::vector<VMatrixAtC>& tables,
                                                    const Hierarchy& h);

}  // namespace metastable
