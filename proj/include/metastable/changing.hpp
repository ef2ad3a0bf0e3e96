#pragma once

#include "metastable/profile.hpp"

namespace metastable {

// Inputs for the single-threshold hierarchy-bifurcation scenario with three
// equilibria on a line.  Below the threshold the pair {O1,O2} forms the
// rank-one cycle; above it {O2,O3} does.  Curves are keyed by member-set
// ("1", "2", "1+2" for the low regime; "1", "2", "3", "2+3" for the high
// regime) and tabulated on the regime's own c-interval.
struct ChangingHierarchyInputs {
    std::map<std::string, MCurve> regime_low;   // c in [g_min, cbar]
    std::map<std::string, MCurve> regime_high;  // c in [cbar, g_max]
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;
    double cbar = 0.0;
    double g_min = 0.0, g_max = 0.0;
};

// The full construction: two-well stage to c*, joint rise of the pair to the
// threshold, regime switch, merge of O2 with O3 at c**, descent of the new
// cycle toward O1 and the final merge at c***.  Every ordering
// lambda_1 < ... < lambda_9 is verified and an OrderingViolation names the
// first failed inequality.
ProfileSet changing_hierarchy_profile(const ChangingHierarchyInputs& in);

}  // namespace metastable
