#pragma once

#include <map>
#include <string>
#include <vector>

#include "metastable/mcurve.hpp"

namespace metastable {

enum class CycleState { passive, engaged, active };
const char* to_string(CycleState s);

enum class BreakTag { zero, lambda1, lambda2, lambda3, lambda4, sec3, infinity };
const char* to_string(BreakTag t);

struct Breakpoint {
    double lambda = 0.0;
    BreakTag tag = BreakTag::sec3;
    std::string label;  // e.g. "lambda_3: merge at c*" or "A_{1+2}"
};

// One piece of a profile on [lo_lambda, hi_lambda).  `track` follows
// C(anchor, +/-inf, lambda, M); `level_lower`/`level_upper` are the paper's
// bounded min/max displays min{hi, min{c in [lo,hi]: M(c)=lambda}} and
// max{lo, max{c in [lo,hi]: M(c)=lambda}} with the empty-set convention
// resolving to the bound.
struct Piece {
    enum class Kind { constant, level_lower, level_upper, track } kind = Kind::constant;
    double value = 0.0;       // constant
    std::string curve;        // curve key for non-constant pieces
    double lo = 0.0, hi = 0.0;  // c-range for level_lower/level_upper
    double anchor = 0.0;      // track anchor s(O_i)
    int dir = +1;             // track direction: +1 toward +inf, -1 toward -inf
};

struct MergeLevel {
    std::string label;  // "c*", "c**", "c***"
    double lambda = 0.0;
    double level = 0.0;
};

struct CycleStateLedger {
    std::vector<std::string> cycle_keys;
    // states on each open interval (lambda_k, lambda_{k+1})
    std::vector<std::map<std::string, CycleState>> interval_states;
    // one-sided limits at each breakpoint, per equilibrium
    std::vector<std::vector<double>> q_at;  // left limits
    std::vector<std::vector<double>> s_at;  // right limits
};

// The limit profiles: breakpoint set Lambda with provenance, one descriptor
// list per equilibrium, cycle states, and the merge levels c*, c**, ...
// Evaluation at a breakpoint returns the right limit (the theorems exclude
// lambda in Lambda).
struct ProfileSet {
    int n = 0;
    double g_min = 0.0, g_max = 0.0;
    std::vector<Breakpoint> breakpoints;          // first is 0, last is the inf sentinel
    std::vector<std::vector<Piece>> profiles;     // [equilibrium][interval]
    std::map<std::string, MCurve> curves;
    CycleStateLedger ledger;
    std::vector<MergeLevel> merge_levels;

    double eval(int i, double lambda) const;
    double eval_piece(const Piece& p, double lambda) const;
    int interval_of(double lambda) const;
    double last_finite_breakpoint() const;
    std::string to_text() const;
};

// C(c1, c2, lambda, Gamma) from the general construction: movement from c1
// toward c2 clamped at the first c where M_Gamma(c) >= lambda.
double clamp_C(double c1, double c2, double lambda, const MCurve& m);

// The two-equilibrium closed form.  m12/m21 are the exit-rate curves of the
// lower-g and higher-g equilibrium; the indices are swap-normalized so that
// profile 0 belongs to the first argument's equilibrium.
ProfileSet two_well_profile(const MCurve& m12, const MCurve& m21, double g1, double g2);

// Weights of the two-point metastable distribution mu = a1 d_{O1} + a2 d_{O2}
// solving a1 g1 + a2 g2 = cbar, a1 + a2 = 1.
std::pair<double, double> metastable_distribution(double cbar, double g1, double g2);

struct ThreeWellInputs {
    MCurve m12, m21;   // inner pair
    MCurve mG3, m3G;   // cycle {O1,O2} exit curve and O3's return curve
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;
};

// The three-equilibrium construction with a persistent inner cycle
// {O1,O2}: the inner pair merges at c*, the pair is then treated as a
// single site against O3, and everything merges at c**.
ProfileSet three_well_profile(const ThreeWellInputs& in);

// Derives cycle states on every interval from the profile values and the
// curves (passive/engaged/active by comparing M(level) with the interval's
// opening breakpoint), plus the q/s ledger columns.
void synthesize_ledger(ProfileSet& ps, const std::vector<std::vector<int>>& cycle_members);

}  // namespace metastable
