#include "metastable/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "metastable/errors.hpp"
#include "metastable/util.hpp"

namespace metastable {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLambdaBisectTol = 1e-10;
}

const char* to_string(CycleState s) {
    switch (s) {
        case CycleState::passive: return "passive";
        case CycleState::engaged: return "engaged";
        case CycleState::active: return "active";
    }
    return "?";
}

const char* to_string(BreakTag t) {
    switch (t) {
        case BreakTag::zero: return "0";
        case BreakTag::lambda1: return "L1";
        case BreakTag::lambda2: return "L2";
        case BreakTag::lambda3: return "L3";
        case BreakTag::lambda4: return "L4";
        case BreakTag::sec3: return "S3";
        case BreakTag::infinity: return "inf";
    }
    return "?";
}

int ProfileSet::interval_of(double lambda) const {
    // pieces live on [lambda_k, lambda_{k+1}); evaluation at a breakpoint
    // yields the right limit
    int k = 0;
    for (size_t i = 1; i + 1 < breakpoints.size(); ++i)
        if (lambda >= breakpoints[i].lambda) k = static_cast<int>(i);
        else break;
    return k;
}

double ProfileSet::last_finite_breakpoint() const {
    return breakpoints[breakpoints.size() - 2].lambda;
}

double ProfileSet::eval_piece(const Piece& p, double lambda) const {
    switch (p.kind) {
        case Piece::Kind::constant:
            return p.value;
        case Piece::Kind::level_lower: {
            const MCurve& m = curves.at(p.curve);
            double s = m.min_solution(lambda, p.lo, p.hi);
            if (std::isnan(s)) return p.hi;
            return std::min(p.hi, s);
        }
        case Piece::Kind::level_upper: {
            const MCurve& m = curves.at(p.curve);
            double s = m.max_solution(lambda, p.lo, p.hi);
            if (std::isnan(s)) return p.lo;
            return std::max(p.lo, s);
        }
        case Piece::Kind::track: {
            const MCurve& m = curves.at(p.curve);
            if (p.dir > 0) {
                double s = m.inf_above(p.anchor, lambda);
                return std::isnan(s) ? m.c_hi() : s;
            }
            double s = m.sup_below(p.anchor, lambda);
            return std::isnan(s) ? m.c_lo() : s;
        }
    }
    return 0.0;
}

double ProfileSet::eval(int i, double lambda) const {
    return eval_piece(profiles[i][interval_of(lambda)], lambda);
}

std::string ProfileSet::to_text() const {
    std::ostringstream out;
    out << "profile set: " << n << " equilibria, " << breakpoints.size() << " breakpoints\n";
    out << "breakpoints (lambda, provenance):\n";
    for (const auto& b : breakpoints) {
        out << "  " << (std::isinf(b.lambda) ? "inf" : format_double(b.lambda)) << "  ["
            << to_string(b.tag) << "] " << b.label << "\n";
    }
    out << "merge levels:\n";
    for (const auto& m : merge_levels)
        out << "  " << m.label << " = " << format_double(m.level) << " at lambda = "
            << format_double(m.lambda) << "\n";
    for (int i = 0; i < n; ++i) {
        out << "profile c" << i + 1 << ":\n";
        for (size_t k = 0; k < profiles[i].size(); ++k) {
            const Piece& p = profiles[i][k];
            double lo = breakpoints[k].lambda;
            double hi = breakpoints[k + 1].lambda;
            out << "  [" << format_double(lo) << ", " << (std::isinf(hi) ? "inf" : format_double(hi))
                << "): ";
            switch (p.kind) {
                case Piece::Kind::constant: out << "constant " << format_double(p.value); break;
                case Piece::Kind::level_lower:
                    out << "min-solve M_{" << p.curve << "}(c) = lambda on [" << format_double(p.lo)
                        << ", " << format_double(p.hi) << "]";
                    break;
                case Piece::Kind::level_upper:
                    out << "max-solve M_{" << p.curve << "}(c) = lambda on [" << format_double(p.lo)
                        << ", " << format_double(p.hi) << "]";
                    break;
                case Piece::Kind::track:
                    out << "clamp-track M_{" << p.curve << "} from " << format_double(p.anchor)
                        << (p.dir > 0 ? " upward" : " downward");
                    break;
            }
            out << "\n";
        }
    }
    if (!ledger.interval_states.empty()) {
        out << "cycle states per interval:\n";
        for (size_t k = 0; k < ledger.interval_states.size(); ++k) {
            double lo = breakpoints[k].lambda;
            double hi = breakpoints[k + 1].lambda;
            out << "  (" << format_double(lo) << ", " << (std::isinf(hi) ? "inf" : format_double(hi))
                << "):";
            for (const auto& [key, st] : ledger.interval_states[k])
                out << "  {" << key << "}=" << to_string(st);
            out << "\n";
        }
    }
    return out.str();
}

double clamp_C(double c1, double c2, double lambda, const MCurve& m) {
    if (c2 >= c1) {
        double s = m.inf_above(c1, lambda);
        if (std::isnan(s)) return c2;
        return std::min(c2, s);
    }
    double s = m.sup_below(c1, lambda);
    if (std::isnan(s)) return c2;
    return std::max(c2, s);
}

namespace {

// inf{lambda : lhs(lambda) >= rhs(lambda)} located by forward scan plus
// predicate bisection.
double first_meet(const std::function<double(double)>& lhs, const std::function<double(double)>& rhs,
                  double lam_lo, double lam_hi, const char* what) {
    auto pred = [&](double l) { return lhs(l) >= rhs(l) - 1e-13; };
    if (pred(lam_lo)) return lam_lo;
    const int n = 4096;
    double prev = lam_lo;
    for (int i = 1; i <= n; ++i) {
        double l = lam_lo + (lam_hi - lam_lo) * i / double(n);
        if (pred(l)) return bisect_predicate(pred, prev, l, kLambdaBisectTol);
        prev = l;
    }
    throw LambdaGammaUnbounded(std::string("no merge point found for ") + what + " in (" +
                               format_double(lam_lo) + ", " + format_double(lam_hi) + ")");
}

// one-sided continuity probe at a breakpoint
bool continuous_at(const std::function<double(double)>& f, double lam, double scale) {
    double h = std::max(1e-9, 1e-7 * std::max(lam, 1.0));
    double left = f(lam - h), right = f(lam + h), mid = f(lam);
    double tol = std::max(1e-6 * scale, 1e-9);
    return std::fabs(left - right) <= tol && std::fabs(mid - left) <= tol;
}

void push_unique_break(std::vector<Breakpoint>& bps, Breakpoint b) {
    for (const auto& e : bps)
        if (std::fabs(e.lambda - b.lambda) <= 1e-12 * std::max(1.0, std::fabs(b.lambda))) return;
    bps.push_back(std::move(b));
}

}  // namespace

std::pair<double, double> metastable_distribution(double cbar, double g1, double g2) {
    if (g1 == g2) throw DegenerateData("metastable_distribution: g1 = g2");
    if (g1 > g2) {
        auto [a2, a1] = metastable_distribution(cbar, g2, g1);
        return {a1, a2};
    }
    if (cbar < g1 - 1e-12 || cbar > g2 + 1e-12)
        throw DegenerateData("metastable_distribution: cbar outside [g1, g2]");
    double a2 = (cbar - g1) / (g2 - g1);
    a2 = std::min(1.0, std::max(0.0, a2));
    return {1.0 - a2, a2};
}

ProfileSet two_well_profile(const MCurve& m12_in, const MCurve& m21_in, double g1, double g2) {
    if (g1 > g2) {
        // swap-normalize, then swap the two profiles back
        ProfileSet ps = two_well_profile(m21_in, m12_in, g2, g1);
        std::swap(ps.profiles[0], ps.profiles[1]);
        return ps;
    }

    ProfileSet ps;
    ps.n = 2;
    ps.g_min = g1;
    ps.g_max = g2;
    ps.curves["1"] = m12_in;
    ps.curves["2"] = m21_in;
    const MCurve& m12 = ps.curves["1"];
    const MCurve& m21 = ps.curves["2"];

    const double lam1 = m12.eval(g1);
    const double lam2 = m21.eval(g2);

    auto c1 = [&](double lam) {
        if (lam < lam1) return g1;
        double s = m12.min_solution(lam, g1, g2);
        return std::isnan(s) ? g2 : std::min(g2, s);
    };
    auto c2 = [&](double lam) {
        if (lam < lam2) return g2;
        double s = m21.max_solution(lam, g1, g2);
        return std::isnan(s) ? g1 : std::max(g1, s);
    };

    double lam_cap = std::max({m12.max_on(g1, g2), m21.max_on(g1, g2), lam1, lam2}) + 1.0;
    const double lam3 = (g1 == g2) ? 0.0 : first_meet(c1, c2, 0.0, lam_cap, "c1 vs c2");

    double cstar;
    if (g1 == g2) {
        cstar = g1;
    } else {
        const double scale = g2 - g1;
        bool cont1 = continuous_at(c1, lam3, scale);
        bool cont2 = continuous_at(c2, lam3, scale);
        if (!cont1 && !cont2)
            throw BothDiscontinuousAtMerge("neither c1 nor c2 is continuous at lambda_3 = " +
                                           format_double(lam3));
        cstar = cont1 ? c1(lam3) : c2(lam3);
    }

    // breakpoint set: 0, lambda_1, lambda_2, lambda_3 plus any interior
    // local-max values of the curves that fire before the merge (the
    // level-set solutions jump across exhausted humps there)
    ps.breakpoints.push_back({0.0, BreakTag::zero, "lambda_0"});
    push_unique_break(ps.breakpoints, {lam1, BreakTag::sec3, "lambda_1 = M_12(g(O_1))"});
    push_unique_break(ps.breakpoints, {lam2, BreakTag::sec3, "lambda_2 = M_21(g(O_2))"});
    push_unique_break(ps.breakpoints, {lam3, BreakTag::sec3, "lambda_3: profiles merge at c*"});
    for (double c : m12.local_maxima) {
        double v = m12.eval(c);
        if (c > g1 && c < g2 && v > lam1 && v < lam3)
            push_unique_break(ps.breakpoints, {v, BreakTag::lambda2, "local max of M_12"});
    }
    for (double c : m21.local_maxima) {
        double v = m21.eval(c);
        if (c > g1 && c < g2 && v > lam2 && v < lam3)
            push_unique_break(ps.breakpoints, {v, BreakTag::lambda2, "local max of M_21"});
    }
    std::sort(ps.breakpoints.begin(), ps.breakpoints.end(),
              [](const Breakpoint& a, const Breakpoint& b) { return a.lambda < b.lambda; });
    // drop anything past the merge (nothing changes after lambda_3)
    while (ps.breakpoints.back().lambda > lam3 + 1e-15) ps.breakpoints.pop_back();
    ps.breakpoints.push_back({kInf, BreakTag::infinity, "lambda_m"});

    ps.merge_levels.push_back({"c*", lam3, cstar});

    const int n_iv = static_cast<int>(ps.breakpoints.size()) - 1;
    ps.profiles.assign(2, std::vector<Piece>(n_iv));
    for (int k = 0; k < n_iv; ++k) {
        double lo = ps.breakpoints[k].lambda;
        Piece p1, p2;
        if (lo >= lam3) {
            p1 = {Piece::Kind::constant, cstar};
            p2 = {Piece::Kind::constant, cstar};
        } else {
            if (lo < lam1) {
                p1 = {Piece::Kind::constant, g1};
            } else {
                p1.kind = Piece::Kind::level_lower;
                p1.curve = "1";
                p1.lo = g1;
                p1.hi = g2;
            }
            if (lo < lam2) {
                p2 = {Piece::Kind::constant, g2};
            } else {
                p2.kind = Piece::Kind::level_upper;
                p2.curve = "2";
                p2.lo = g1;
                p2.hi = g2;
            }
        }
        ps.profiles[0][k] = p1;
        ps.profiles[1][k] = p2;
    }

    synthesize_ledger(ps, {{0}, {1}});
    return ps;
}

ProfileSet three_well_profile(const ThreeWellInputs& in) {
    if (!(in.g1 <= in.g2 && in.g2 <= in.g3))
        throw OrderingViolation("three_well_profile requires g(O_1) <= g(O_2) <= g(O_3)");

    // inner two-well stage
    ProfileSet inner = two_well_profile(in.m12, in.m21, in.g1, in.g2);
    const double lam3 = inner.merge_levels.front().lambda;
    const double cstar = inner.merge_levels.front().level;
    double lam1 = in.m12.eval(in.g1), lam2 = in.m21.eval(in.g2);

    ProfileSet ps;
    ps.n = 3;
    ps.g_min = in.g1;
    ps.g_max = in.g3;
    ps.curves = inner.curves;
    ps.curves["1+2"] = in.mG3;
    ps.curves["3"] = in.m3G;
    const MCurve& mG3 = ps.curves.at("1+2");
    const MCurve& m3G = ps.curves.at("3");

    const double lam4 = mG3.eval(cstar);
    const double lam5 = m3G.eval(in.g3);

    auto require = [](bool ok, const std::string& which) {
        if (!ok) throw OrderingViolation("three-well ordering failed: " + which);
    };
    require(lam1 < lam2, "lambda_1 < lambda_2");
    require(lam2 < lam3, "lambda_2 < lambda_3");
    require(lam3 < lam4, "lambda_3 < lambda_4");
    require(lam4 < lam5, "lambda_4 < lambda_5");

    auto cG = [&](double lam) {
        if (lam < lam4) return cstar;
        double s = mG3.min_solution(lam, cstar, in.g3);
        return std::isnan(s) ? in.g3 : std::min(in.g3, s);
    };
    auto c3 = [&](double lam) {
        if (lam < lam5) return in.g3;
        double s = m3G.max_solution(lam, cstar, in.g3);
        return std::isnan(s) ? cstar : std::max(cstar, s);
    };

    double lam_cap = std::max({mG3.max_on(cstar, in.g3), m3G.max_on(cstar, in.g3), lam4, lam5}) + 1.0;
    const double lam6 = first_meet(cG, c3, lam3 + 1e-12, lam_cap, "cGamma vs c3");
    require(lam5 < lam6, "lambda_5 < lambda_6");

    double cdstar;
    {
        const double scale = in.g3 - cstar;
        bool contG = continuous_at(cG, lam6, scale);
        bool cont3 = continuous_at(c3, lam6, scale);
        if (!contG && !cont3)
            throw BothDiscontinuousAtMerge("neither cGamma nor c3 is continuous at lambda_6 = " +
                                           format_double(lam6));
        cdstar = contG ? cG(lam6) : c3(lam6);
    }

    // breakpoints: the inner stage's plus lambda_4..lambda_6 and hump values
    ps.breakpoints = inner.breakpoints;
    ps.breakpoints.pop_back();  // drop the inf sentinel, re-added below
    push_unique_break(ps.breakpoints, {lam4, BreakTag::sec3, "lambda_4 = M_{Gamma,3}(c*)"});
    push_unique_break(ps.breakpoints, {lam5, BreakTag::sec3, "lambda_5 = M_{3,Gamma}(g(O_3))"});
    push_unique_break(ps.breakpoints, {lam6, BreakTag::sec3, "lambda_6: all profiles merge at c**"});
    for (double c : mG3.local_maxima) {
        double v = mG3.eval(c);
        if (c > cstar && c < in.g3 && v > lam4 && v < lam6)
            push_unique_break(ps.breakpoints, {v, BreakTag::lambda2, "local max of M_{Gamma,3}"});
    }
    for (double c : m3G.local_maxima) {
        double v = m3G.eval(c);
        if (c > cstar && c < in.g3 && v > lam5 && v < lam6)
            push_unique_break(ps.breakpoints, {v, BreakTag::lambda2, "local max of M_{3,Gamma}"});
    }
    std::sort(ps.breakpoints.begin(), ps.breakpoints.end(),
              [](const Breakpoint& a, const Breakpoint& b) { return a.lambda < b.lambda; });
    while (ps.breakpoints.back().lambda > lam6 + 1e-15) ps.breakpoints.pop_back();
    ps.breakpoints.push_back({kInf, BreakTag::infinity, "lambda_m"});

    ps.merge_levels.push_back({"c*", lam3, cstar});
    ps.merge_levels.push_back({"c**", lam6, cdstar});

    const int n_iv = static_cast<int>(ps.breakpoints.size()) - 1;
    ps.profiles.assign(3, std::vector<Piece>(n_iv));
    for (int k = 0; k < n_iv; ++k) {
        double lo = ps.breakpoints[k].lambda;
        Piece p12, p3;
        if (lo >= lam6) {
            p12 = {Piece::Kind::constant, cdstar};
            p3 = {Piece::Kind::constant, cdstar};
        } else {
            if (lo < lam4) {
                // inner stage still running (or the pair sits at c*)
                p12 = {};  // filled from inner below
            } else {
                p12.kind = Piece::Kind::level_lower;
                p12.curve = "1+2";
                p12.lo = cstar;
                p12.hi = in.g3;
            }
            if (lo < lam5) {
                p3 = {Piece::Kind::constant, in.g3};
            } else {
                p3.kind = Piece::Kind::level_upper;
                p3.curve = "3";
                p3.lo = cstar;
                p3.hi = in.g3;
            }
        }
        if (lo < lam4) {
            // delegate to the inner profile pieces (constant c* after lam3)
            int kk = inner.interval_of(lo);
            ps.profiles[0][k] = inner.profiles[0][kk];
            ps.profiles[1][k] = inner.profiles[1][kk];
        } else {
            ps.profiles[0][k] = p12;
            ps.profiles[1][k] = p12;
        }
        ps.profiles[2][k] = p3;
    }

    synthesize_ledger(ps, {{0}, {1}, {0, 1}, {2}});
    return ps;
}

void synthesize_ledger(ProfileSet& ps, const std::vector<std::vector<int>>& cycle_members) {
    ps.ledger = {};
    const int n_bp = static_cast<int>(ps.breakpoints.size());
    const int n_iv = n_bp - 1;

    // q/s tables at each breakpoint (one-sided limits of the profiles)
    ps.ledger.q_at.assign(n_bp, std::vector<double>(ps.n, 0.0));
    ps.ledger.s_at.assign(n_bp, std::vector<double>(ps.n, 0.0));
    for (int k = 0; k < n_bp; ++k) {
        double lam = ps.breakpoints[k].lambda;
        for (int i = 0; i < ps.n; ++i) {
            if (std::isinf(lam)) {
                double last = ps.last_finite_breakpoint() + 1.0;
                ps.ledger.q_at[k][i] = ps.eval(i, last);
                ps.ledger.s_at[k][i] = ps.ledger.q_at[k][i];
                continue;
            }
            double h = std::max(1e-9, 1e-9 * std::max(1.0, lam));
            ps.ledger.q_at[k][i] = (k == 0) ? ps.eval(i, 0.0) : ps.eval(i, lam - h);
            ps.ledger.s_at[k][i] = ps.eval(i, lam + h);
        }
    }

    ps.ledger.interval_states.assign(n_iv, {});
    for (const auto& mem : cycle_members) {
        std::ostringstream keyss;
        for (size_t i = 0; i < mem.size(); ++i) keyss << (i ? "+" : "") << mem[i] + 1;
        const std::string key = keyss.str();
        if (!ps.curves.count(key)) continue;  // top cycle has no curve
        const MCurve& m = ps.curves.at(key);
        ps.ledger.cycle_keys.push_back(key);
        for (int k = 0; k < n_iv; ++k) {
            double lam_k = ps.breakpoints[k].lambda;
            double level = ps.ledger.s_at[k][mem.front()];
            double mv = m.eval(std::min(std::max(level, m.c_lo()), m.c_hi()));
            CycleState st;
            if (mv > lam_k + 1e-8) st = CycleState::passive;
            else if (mv < lam_k - 1e-8) st = CycleState::active;
            else st = CycleState::engaged;
            ps.ledger.interval_states[k][key] = st;
        }
    }
}

}  // namespace metastable
