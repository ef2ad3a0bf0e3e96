#include "metastable/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "metastable/errors.hpp"
#include "metastable/util.hpp"

namespace metastable {

SystemSpec SystemSpec::from_config(const Config& cfg) {
    SystemSpec s;
    s.b = Expr::parse(cfg.get_string("system", "b"));
    s.a = Expr::parse(cfg.get_string("system", "a"));
    s.g = Expr::parse(cfg.get_string("system", "g"));
    s.x_lo = cfg.get_double("system", "x_lo");
    s.x_hi = cfg.get_double("system", "x_hi");
    if (!(s.x_lo < s.x_hi)) throw ConfigError("system: x_lo must be < x_hi");
    s.grid_n = static_cast<int>(cfg.get_int("numerics", "grid_n", 4096));
    if (s.grid_n < 2) throw ConfigError("numerics: grid_n must be >= 2");
    s.root_tol = cfg.get_double("numerics", "root_tol", 1e-12);
    s.lipschitz_bound = cfg.get_double("numerics", "lipschitz_bound", 1e4);
    s.ellipticity_floor = cfg.get_double("numerics", "ellipticity_floor", 1e-8);

    // g bounds by dense sampling; explicit overrides allowed.
    double gmin = 1e300, gmax = -1e300;
    for (double x : linspace(s.x_lo, s.x_hi, s.grid_n)) {
        double g = s.g.eval(x);
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
    }
    s.g_min = cfg.get_double("system", "g_min", gmin);
    s.g_max = cfg.get_double("system", "g_max", gmax);
    if (!(s.g_min <= s.g_max)) throw ConfigError("system: g_min must be <= g_max");
    return s;
}

std::string SystemSpec::content_key() const {
    std::ostringstream ss;
    ss << "b=" << b.text() << ";a=" << a.text() << ";g=" << g.text()
       << ";dom=[" << format_double(x_lo) << ',' << format_double(x_hi) << ']';
    return ss.str();
}

int EquilibriumSet::basin_of(double x) const {
    for (size_t i = 0; i < basins.size(); ++i)
        if (x > basins[i].lo && x < basins[i].hi) return static_cast<int>(i);
    return -1;
}

EquilibriumSet find_equilibria(const SystemSpec& spec, double root_tol) {
    const int n = spec.grid_n;
    std::vector<double> xs = linspace(spec.x_lo, spec.x_hi, n);
    std::vector<double> bs(n);
    for (int i = 0; i < n; ++i) bs[i] = spec.b.eval(xs[i]);

    if (bs.front() <= 0.0)
        throw TangentRoot("drift not inward at x_lo (b(x_lo) <= 0): confinement assumption fails");
    if (bs.back() >= 0.0)
        throw TangentRoot("drift not inward at x_hi (b(x_hi) >= 0): confinement assumption fails");

    EquilibriumSet eq;
    auto bfun = [&](double x) { return spec.b.eval(x); };
    const double h = xs[1] - xs[0];

    for (int i = 0; i + 1 < n; ++i) {
        if (bs[i] == 0.0) {
            // grid point exactly on a root; classify by neighbours
            double left = (i > 0) ? bs[i - 1] : bs[i + 1];
            double right = bs[i + 1];
            if (left > 0.0 && right < 0.0) eq.stable.push_back(xs[i]);
            else if (left < 0.0 && right > 0.0) eq.unstable.push_back(xs[i]);
            else throw TangentRoot("sign-degenerate root near x = " + format_double(xs[i]));
            continue;
        }
        if (bs[i] * bs[i + 1] < 0.0) {
            double r = bisect_root(bfun, xs[i], xs[i + 1], root_tol);
            if (bs[i] > 0.0) eq.stable.push_back(r);
            else eq.unstable.push_back(r);
        }
    }
    // tangency sweep: interior local minima of |b| that touch zero at grid
    // resolution without a sign change.  The threshold scales with h^2
    // (a double root passes within ~|b''| h^2/8 of zero).
    double bscale = 0.0;
    for (double v : bs) bscale = std::max(bscale, std::fabs(v));
    const double touch_tol = std::max(root_tol, 25.0 * h * h * bscale);
    for (int i = 1; i + 1 < n; ++i) {
        double ab = std::fabs(bs[i]);
        if (bs[i] != 0.0 && ab <= touch_tol && ab <= std::fabs(bs[i - 1]) &&
            ab <= std::fabs(bs[i + 1]) && bs[i - 1] * bs[i + 1] > 0.0) {
            throw TangentRoot("sign-degenerate root suspected near x = " + format_double(xs[i]));
        }
    }

    if (eq.stable.empty()) throw NoStableEquilibrium("drift has no + -> - sign change on the grid");

    std::sort(eq.stable.begin(), eq.stable.end());
    std::sort(eq.unstable.begin(), eq.unstable.end());

    // stable and unstable points must interleave given inward drift at the ends
    if (eq.unstable.size() + 1 != eq.stable.size())
        throw TangentRoot("stable/unstable roots do not interleave (" +
                          std::to_string(eq.stable.size()) + " stable, " +
                          std::to_string(eq.unstable.size()) + " unstable)");
    for (size_t i = 0; i < eq.unstable.size(); ++i)
        if (!(eq.stable[i] < eq.unstable[i] && eq.unstable[i] < eq.stable[i + 1]))
            throw TangentRoot("stable/unstable roots do not interleave");

    // basins partition (x_lo, x_hi) up to the separatrix points
    double left = spec.x_lo;
    for (size_t i = 0; i < eq.stable.size(); ++i) {
        double right = (i < eq.unstable.size()) ? eq.unstable[i] : spec.x_hi;
        eq.basins.push_back({left, right});
        left = right;
    }
    return eq;
}

EquilibriumSet find_equilibria(const SystemSpec& spec) { return find_equilibria(spec, spec.root_tol); }

Interval shrunk_basin(const Interval& basin, double delta) {
    if (delta <= 0.0) throw ConfigError("shrunk_basin: delta must be positive");
    Interval s{basin.lo + delta, basin.hi - delta};
    double cap = 1.0 / delta;
    s.lo = std::max(s.lo, -cap);
    s.hi = std::min(s.hi, cap);
    if (s.lo > s.hi)
        throw EmptyShrunkBasin("shrunk basin empty: D = (" + format_double(basin.lo) + "," +
                               format_double(basin.hi) + "), delta = " + format_double(delta));
    return s;
}

bool AssumptionReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string AssumptionReport::to_text() const {
    std::ostringstream out;
    for (const auto& c : checks)
        out << (c.pass ? "[pass] " : "[FAIL] ") << c.name << " = " << format_double(c.value)
            << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
    return out.str();
}

AssumptionReport validate_assumptions(const SystemSpec& spec, int grid_n) {
    AssumptionReport rep;
    if (grid_n < 2) throw ConfigError("validate_assumptions: grid_n must be >= 2");
    std::vector<double> xs = linspace(spec.x_lo, spec.x_hi, grid_n);
    const int nc = std::max(2, grid_n / 32);
    std::vector<double> cs = linspace(spec.g_min, spec.g_max, nc);

    double min_a = 1e300;
    double min_a_x = 0.0, min_a_c = 0.0;
    for (double x : xs) {
        for (double c : cs) {
            double v = spec.a.eval(x, c);
            if (v < min_a) {
                min_a = v;
                min_a_x = x;
                min_a_c = c;
            }
        }
    }
    rep.checks.push_back({"ellipticity: min a(x,c)", min_a > spec.ellipticity_floor, min_a,
                          "at x = " + format_double(min_a_x) + ", c = " + format_double(min_a_c) +
                              ", floor " + format_double(spec.ellipticity_floor)});

    auto lip_x = [&](const Expr& f, double c) {
        double m = 0.0;
        for (size_t i = 0; i + 1 < xs.size(); ++i) {
            double d = std::fabs(f.eval(xs[i + 1], c) - f.eval(xs[i], c)) / (xs[i + 1] - xs[i]);
            m = std::max(m, d);
        }
        return m;
    };
    double lb = lip_x(spec.b, 0.0);
    rep.checks.push_back({"lipschitz: max |db/dx| sampled", lb <= spec.lipschitz_bound, lb,
                          "bound " + format_double(spec.lipschitz_bound)});
    double lg = lip_x(spec.g, 0.0);
    rep.checks.push_back({"lipschitz: max |dg/dx| sampled", lg <= spec.lipschitz_bound, lg, ""});
    double la = 0.0;
    for (double c : cs) la = std::max(la, lip_x(spec.a, c));
    for (double x : xs) {
        for (size_t j = 0; j + 1 < cs.size(); ++j) {
            double d = std::fabs(spec.a.eval(x, cs[j + 1]) - spec.a.eval(x, cs[j])) /
                       std::max(cs[j + 1] - cs[j], 1e-300);
            la = std::max(la, d);
        }
    }
    rep.checks.push_back({"lipschitz: max |da| sampled (x and c)", la <= spec.lipschitz_bound, la, ""});

    double blo = spec.b.eval(spec.x_lo), bhi = spec.b.eval(spec.x_hi);
    rep.checks.push_back({"confinement: b(x_lo)", blo > 0.0, blo, "must be > 0"});
    rep.checks.push_back({"confinement: b(x_hi)", bhi < 0.0, bhi, "must be < 0"});
    return rep;
}

}  // namespace metastable
