#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "metastable/quasipotential.hpp"
#include "metastable/system_model.hpp"

namespace metastable {

// One cycle in the hierarchy.  Rank-0 cycles are singletons {O_i}; a rank
// r+1 cycle is either a periodic orbit of rank-r cycles under the "next"
// map or a promoted singleton (which keeps its rank-r exit rates).
struct Cycle {
    int id = -1;
    int rank = 0;
    std::vector<int> members;          // equilibrium indices, sorted
    int nu = -1;                       // next equilibrium nu(Gamma); -1 for the top cycle
    int next_cycle = -1;               // same-rank cycle containing nu; -1 for top
    std::map<int, double> exit_rates;  // O_j outside the cycle -> V_{Gamma,O_j}
    bool promoted = false;             // singleton promotion (rates carried over)

    bool contains(int eq_index) const;
    double rate_to_nu() const { return exit_rates.at(nu); }
    std::string key() const;  // member-set key, e.g. "2" or "1+2"; rank-free
};

struct Hierarchy {
    std::vector<Cycle> all;                // indexed by Cycle::id
    std::vector<std::vector<int>> levels;  // rank -> cycle ids

    int top_rank() const { return static_cast<int>(levels.size()) - 1; }
    int n_equilibria() const;
    const Cycle& cyc(int id) const { return all[id]; }
    int top_cycle_id() const { return levels.back().front(); }

    // Cycle of rank `rank` containing equilibrium i.
    int cycle_at_rank(int eq_index, int rank) const;
    // Enclosing cycle of rank+1 (-1 when `id` is the top cycle).
    int parent_of(int id) const;

    // Rank-indented text document with nu, N and exit rates.
    std::string to_text(const EquilibriumSet& eq) const;

    // Structure signature: per-rank partition plus all nu assignments.
    // Two hierarchies coincide as structures iff the signatures match.
    std::string signature() const;
};

// Builds the hierarchy from a rate matrix via the inductive procedure; the
// minimum defining each "next" equilibrium must be attained uniquely
// (ties within 1e-9 raise AssumptionAViolation).
Hierarchy build_hierarchy(const VMatrixAtC& V);

// Re-evaluates every cycle's exit rates on a fresh matrix while keeping the
// hierarchy structure (membership and nu assignments) fixed.  Returns
// rate-to-nu per cycle id; used to tabulate M_Gamma(c).
std::vector<double> cycle_rates_on(const Hierarchy& h, const VMatrixAtC& V);

struct StabilityReport {
    bool stable = false;
    bool threshold_found = false;
    double threshold = 0.0;        // smallest c where the structure flips
    std::string signature_lo;      // structure below the threshold
    std::string signature_hi;      // structure above
    std::vector<double> c_grid;
    int tuple_probes = 0;          // randomized per-basin tuples checked
    std::string to_text() const;
};

// Builds the hierarchy for alpha = a(x, c) at every grid value of c (equal
// per-basin constants) and reports whether the structure and every
// nu(Gamma) coincide across the grid; if not, bisects the smallest flip
// threshold to 1e-6.  Optionally probes `tuple_probes` randomized per-basin
// tuples drawn from [g_min, g_max]^n.
StabilityReport check_hierarchy_stability(const SystemSpec& spec, const EquilibriumSet& eq,
                                          const std::vector<double>& c_grid,
                                          int tuple_probes = 0, std::uint64_t seed = 1);

}  // namespace metastable
