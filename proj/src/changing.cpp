#include "metastable/changing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "metastable/errors.hpp"
#include "metastable/util.hpp"

namespace metastable {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double first_meet_lam(const std::function<double(double)>& lhs,
                      const std::function<double(double)>& rhs, double lam_lo, double lam_hi,
                      const char* what) {
    auto pred = [&](double l) { return lhs(l) >= rhs(l) - 1e-13; };
    if (pred(lam_lo)) return lam_lo;
    const int n = 4096;
    double prev = lam_lo;
    for (int i = 1; i <= n; ++i) {
        double l = lam_lo + (lam_hi - lam_lo) * i / double(n);
        if (pred(l)) return bisect_predicate(pred, prev, l, 1e-10);
        prev = l;
    }
    throw LambdaGammaUnbounded(std::string("no merge point found for ") + what);
}

bool continuous_at(const std::function<double(double)>& f, double lam, double scale) {
    double h = std::max(1e-9, 1e-7 * std::max(lam, 1.0));
    double left = f(lam - h), right = f(lam + h), mid = f(lam);
    double tol = std::max(1e-6 * scale, 1e-9);
    return std::fabs(left - right) <= tol && std::fabs(mid - left) <= tol;
}

}  // namespace

ProfileSet changing_hierarchy_profile(const ChangingHierarchyInputs& in) {
    auto require = [](bool ok, const std::string& which) {
        if (!ok) throw OrderingViolation("changing-hierarchy ordering failed: " + which);
    };
    require(in.g1 <= in.g2, "g(O_1) <= g(O_2)");
    require(in.g2 < in.cbar, "g(O_2) < c-bar (strict-regime assumption)");
    require(in.cbar < in.g3, "c-bar < g(O_3) (strict-regime assumption)");

    auto curve = [&](const std::map<std::string, MCurve>& reg, const std::string& key) -> const MCurve& {
        auto it = reg.find(key);
        if (it == reg.end())
            throw ConfigError("changing_hierarchy_profile: missing regime curve {" + key + "}");
        return it->second;
    };
    const MCurve& m12 = curve(in.regime_low, "1");
    const MCurve& m21 = curve(in.regime_low, "2");
    const MCurve& mP3 = curve(in.regime_low, "1+2");   // M_{Gamma',3}
    const MCurve& m1P = curve(in.regime_high, "1");    // M_{1,Gamma''} = V_12 above the threshold
    const MCurve& m23 = curve(in.regime_high, "2");
    const MCurve& m32 = curve(in.regime_high, "3");
    const MCurve& mP1 = curve(in.regime_high, "2+3");  // M_{Gamma'',1}

    // two-well stage on the low regime
    ProfileSet inner = two_well_profile(m12, m21, in.g1, in.g2);
    const double lam3 = inner.merge_levels.front().lambda;
    const double cstar = inner.merge_levels.front().level;
    const double lam1 = m12.eval(in.g1);
    const double lam2 = m21.eval(in.g2);
    require(lam1 < lam2, "lambda_1 < lambda_2");
    require(lam2 < lam3, "lambda_2 < lambda_3");

    // joint rise of the pair toward the threshold
    const double lam4 = mP3.eval(cstar);
    const double lam5 = mP3.max_on(cstar, in.cbar);
    require(lam3 < lam4, "lambda_3 < lambda_4");
    require(lam4 < lam5, "lambda_4 < lambda_5");

    // high regime: O2 runs toward O3 while O3 descends
    const double lam6 = m32.eval(in.g3);
    require(lam5 < lam6, "lambda_5 < lambda_6");

    auto d2 = [&](double lam) {
        double s = m23.min_solution(lam, in.cbar, in.g3);
        return std::isnan(s) ? in.g3 : std::min(in.g3, s);
    };
    auto c3 = [&](double lam) {
        if (lam < lam6) return in.g3;
        double s = m32.max_solution(lam, in.cbar, in.g3);
        return std::isnan(s) ? in.cbar : std::max(in.cbar, s);
    };
    double lam_cap = std::max({m23.max_on(in.cbar, in.g3), m32.max_on(in.cbar, in.g3)}) + 1.0;
    const double lam7 = first_meet_lam(d2, c3, lam5 + 1e-12, lam_cap, "d2 vs c3");
    require(lam6 < lam7, "lambda_6 < lambda_7");

    double cdd;  // c**
    {
        double scale = in.g3 - in.cbar;
        bool cont2 = continuous_at(d2, lam7, scale);
        bool cont3 = continuous_at(c3, lam7, scale);
        if (!cont2 && !cont3)
            throw BothDiscontinuousAtMerge("neither d2 nor c3 is continuous at lambda_7 = " +
                                           format_double(lam7));
        cdd = cont2 ? d2(lam7) : c3(lam7);
    }

    const double lam8 = mP1.eval(cdd);
    require(lam7 < lam8, "lambda_7 < lambda_8");

    auto d1 = [&](double lam) {
        double s = m1P.min_solution(lam, in.cbar, cdd);
        return std::isnan(s) ? cdd : std::min(cdd, s);
    };
    auto cPP = [&](double lam) {
        if (lam < lam8) return cdd;
        double s = mP1.max_solution(lam, in.cbar, cdd);
        return std::isnan(s) ? in.cbar : std::max(in.cbar, s);
    };
    double lam_cap2 = std::max({m1P.max_on(in.cbar, cdd), mP1.max_on(in.cbar, cdd), lam8}) + 1.0;
    const double lam9 = first_meet_lam(d1, cPP, lam8 + 1e-12, lam_cap2, "d1 vs cGamma''");
    require(lam8 < lam9, "lambda_8 < lambda_9");

    double cddd;  // c***
    {
        double scale = cdd - in.cbar;
        bool cont1 = continuous_at(d1, lam9, scale);
        bool contP = continuous_at(cPP, lam9, scale);
        if (!cont1 && !contP)
            throw BothDiscontinuousAtMerge("neither d1 nor cGamma'' is continuous at lambda_9 = " +
                                           format_double(lam9));
        cddd = cont1 ? d1(lam9) : cPP(lam9);
    }

    // ---- assembly -------------------------------------------------------
    ProfileSet ps;
    ps.n = 3;
    ps.g_min = in.g_min;
    ps.g_max = in.g_max;
    for (const auto& [k, m] : in.regime_low) ps.curves["A:" + k] = m;
    for (const auto& [k, m] : in.regime_high) ps.curves["B:" + k] = m;

    std::vector<double> lams = {lam1, lam2, lam3, lam4, lam5, lam6, lam7, lam8, lam9};
    const char* labels[] = {
        "lambda_1 = M_12(g(O_1))",          "lambda_2 = M_21(g(O_2))",
        "lambda_3: pair merges at c*",      "lambda_4 = M_{Gamma',3}(c*)",
        "lambda_5: level reaches c-bar (hierarchy flips)",
        "lambda_6 = M_32(g(O_3))",          "lambda_7: O2 and O3 merge at c**",
        "lambda_8 = M_{Gamma'',1}(c**)",    "lambda_9: all profiles merge at c***"};
    ps.breakpoints.push_back({0.0, BreakTag::zero, "lambda_0"});
    for (size_t i = 0; i < lams.size(); ++i)
        ps.breakpoints.push_back({lams[i], BreakTag::sec3, labels[i]});
    ps.breakpoints.push_back({kInf, BreakTag::infinity, "lambda_m"});

    ps.merge_levels.push_back({"c*", lam3, cstar});
    ps.merge_levels.push_back({"c**", lam7, cdd});
    ps.merge_levels.push_back({"c***", lam9, cddd});

    const int n_iv = static_cast<int>(ps.breakpoints.size()) - 1;
    ps.profiles.assign(3, std::vector<Piece>(n_iv));
    auto piece_const = [](double v) { return Piece{Piece::Kind::constant, v}; };
    auto piece_lower = [](const std::string& k, double lo, double hi) {
        Piece p;
        p.kind = Piece::Kind::level_lower;
        p.curve = k;
        p.lo = lo;
        p.hi = hi;
        return p;
    };
    auto piece_upper = [](const std::string& k, double lo, double hi) {
        Piece p;
        p.kind = Piece::Kind::level_upper;
        p.curve = k;
        p.lo = lo;
        p.hi = hi;
        return p;
    };

    for (int k = 0; k < n_iv; ++k) {
        double lo = ps.breakpoints[k].lambda;
        Piece p1, p2, p3v;
        // O1
        if (lo < lam1) p1 = piece_const(in.g1);
        else if (lo < lam3) p1 = piece_lower("A:1", in.g1, in.g2);
        else if (lo < lam4) p1 = piece_const(cstar);
        else if (lo < lam5) p1 = piece_lower("A:1+2", cstar, in.cbar);
        else if (lo < lam9) p1 = piece_lower("B:1", in.cbar, cdd);
        else p1 = piece_const(cddd);
        // O2
        if (lo < lam2) p2 = piece_const(in.g2);
        else if (lo < lam3) p2 = piece_upper("A:2", in.g1, in.g2);
        else if (lo < lam4) p2 = piece_const(cstar);
        else if (lo < lam5) p2 = piece_lower("A:1+2", cstar, in.cbar);
        else if (lo < lam7) p2 = piece_lower("B:2", in.cbar, in.g3);
        else if (lo < lam8) p2 = piece_const(cdd);
        else if (lo < lam9) p2 = piece_upper("B:2+3", in.cbar, cdd);
        else p2 = piece_const(cddd);
        // O3
        if (lo < lam6) p3v = piece_const(in.g3);
        else if (lo < lam7) p3v = piece_upper("B:3", in.cbar, in.g3);
        else if (lo < lam8) p3v = piece_const(cdd);
        else if (lo < lam9) p3v = piece_upper("B:2+3", in.cbar, cdd);
        else p3v = piece_const(cddd);
        ps.profiles[0][k] = p1;
        ps.profiles[1][k] = p2;
        ps.profiles[2][k] = p3v;
    }

    // ---- ledger ----------------------------------------------------------
    const int n_bp = n_iv + 1;
    ps.ledger.q_at.assign(n_bp, std::vector<double>(3, 0.0));
    ps.ledger.s_at.assign(n_bp, std::vector<double>(3, 0.0));
    for (int k = 0; k < n_bp; ++k) {
        double lam = ps.breakpoints[k].lambda;
        for (int i = 0; i < 3; ++i) {
            if (std::isinf(lam)) {
                ps.ledger.q_at[k][i] = cddd;
                ps.ledger.s_at[k][i] = cddd;
                continue;
            }
            double h = std::max(1e-9, 1e-9 * std::max(1.0, lam));
            ps.ledger.q_at[k][i] = (k == 0) ? ps.eval(i, 0.0) : ps.eval(i, lam - h);
            ps.ledger.s_at[k][i] = ps.eval(i, lam + h);
        }
    }
    // cycle states: low-regime cycles before the flip, high-regime after
    struct LedgerCycle {
        std::string key;
        std::vector<int> members;
    };
    std::vector<LedgerCycle> low = {{"A:1", {0}}, {"A:2", {1}}, {"A:1+2", {0, 1}}, {"A:3", {2}}};
    std::vector<LedgerCycle> high = {{"B:1", {0}}, {"B:2", {1}}, {"B:3", {2}}, {"B:2+3", {1, 2}}};
    for (const auto& lc : low)
        if (ps.curves.count(lc.key)) ps.ledger.cycle_keys.push_back(lc.key);
    for (const auto& lc : high)
        if (ps.curves.count(lc.key)) ps.ledger.cycle_keys.push_back(lc.key);
    ps.ledger.interval_states.assign(n_iv, {});
    for (int k = 0; k < n_iv; ++k) {
        double lam_k = ps.breakpoints[k].lambda;
        bool low_regime = lam_k < lam5;
        for (const auto& lc : low_regime ? low : high) {
            if (!ps.curves.count(lc.key)) continue;
            const MCurve& m = ps.curves.at(lc.key);
            double level = ps.ledger.s_at[k][lc.members.front()];
            double mv = m.eval(std::min(std::max(level, m.c_lo()), m.c_hi()));
            CycleState st;
            if (mv > lam_k + 1e-8) st = CycleState::passive;
            else if (mv < lam_k - 1e-8) st = CycleState::active;
            else st = CycleState::engaged;
            ps.ledger.interval_states[k][lc.key] = st;
        }
    }
    return ps;
}

}  // namespace metastable
