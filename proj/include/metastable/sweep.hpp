#pragma once

#include "metastable/profile.hpp"

namespace metastable {

struct SweepInputs {
    Hierarchy hierarchy;                  // structure, stable in c
    std::map<std::string, MCurve> curves; // rate curve per member-set key, every rank < R cycle
    std::vector<double> g;                // g(O_i)
    double g_min = 0.0, g_max = 0.0;
};

// The general inductive construction: special points Lambda^1..Lambda^4 are
// discovered (statically from the curves, dynamically as groups merge), and
// the profiles are extended interval by interval through the case rules and
// the cluster procedure.  Inputs that violate the genericity assumptions
// (tied special values, non-isolated curve crossings, degenerate slopes at a
// tracked level) raise GenericityViolation naming the assumption.
ProfileSet general_sweep(const SweepInputs& in);

}  // namespace metastable
