#include "metastable/quasipotential.hpp"

#include <algorithm>
#include <cmath>

#include "metastable/errors.hpp"
#include "metastable/quadrature.hpp"
#include "metastable/util.hpp"

namespace metastable {

namespace {

// sign changes of b on [lo, hi], located by scan + bisection; these are the
// kinks of the integrand max(-dir*b, 0).
std::vector<double> drift_sign_changes(const SystemSpec& spec, double lo, double hi) {
    std::vector<double> out;
    const int n = 512;
    auto xs = linspace(lo, hi, n);
    double prev = spec.b.eval(xs[0]);
    for (int i = 1; i < n; ++i) {
        double cur = spec.b.eval(xs[i]);
        if (prev == 0.0) out.push_back(xs[i - 1]);
        else if (prev * cur < 0.0)
            out.push_back(bisect_root([&](double x) { return spec.b.eval(x); }, xs[i - 1], xs[i], 1e-13));
        prev = cur;
    }
    return out;
}

double qp_integral(const SystemSpec& spec, double c, double x, double y,
                   const std::vector<double>& breaks) {
    if (x == y) return 0.0;
    const double lo = std::min(x, y), hi = std::max(x, y);
    const double dir = (y > x) ? 1.0 : -1.0;
    auto f = [&](double s) {
        double opp = -dir * spec.b.eval(s);
        if (opp <= 0.0) return 0.0;
        return opp / spec.a.eval(s, c);
    };
    QuadratureOptions opt;
    opt.rel_tol = 1e-10;
    return 2.0 * integrate_split(f, lo, hi, breaks, opt);
}

}  // namespace

double quasipotential_1d(const SystemSpec& spec, double c, double x, double y,
                         const std::vector<double>& drift_breaks) {
    return qp_integral(spec, c, x, y, drift_breaks);
}

double quasipotential_1d(const SystemSpec& spec, double c, double x, double y) {
    if (x == y) return 0.0;
    return qp_integral(spec, c, x, y, drift_sign_changes(spec, std::min(x, y), std::max(x, y)));
}

namespace {

// Exact action of one straight segment [p, q] traversed at the optimal
// constant speed.  With A = int ds/a, B = int b^2/a ds, C = int b/a ds the
// optimum over the speed v (equivalently the segment time) is
//   S = sqrt(A B) - sgn(q - p) C,
// nonnegative by Cauchy-Schwarz and zero only on drift-aligned segments.
double segment_action(const SystemSpec& spec, double c, double p, double q) {
    if (p == q) return 0.0;
    QuadratureOptions opt;
    opt.rel_tol = 1e-9;
    opt.max_depth = 40;
    double lo = std::min(p, q), hi = std::max(p, q);
    double A = integrate([&](double s) { return 1.0 / spec.a.eval(s, c); }, lo, hi, opt);
    double B = integrate([&](double s) { double b = spec.b.eval(s); return b * b / spec.a.eval(s, c); },
                         lo, hi, opt);
    double C = integrate([&](double s) { return spec.b.eval(s) / spec.a.eval(s, c); }, lo, hi, opt);
    double sgn = (q > p) ? 1.0 : -1.0;
    return std::max(0.0, std::sqrt(A * B) - sgn * C);
}

}  // namespace

double action_bruteforce(const SystemSpec& spec, double c, double x, double y,
                         int n_knots, int n_iters) {
    if (n_knots < 3) throw ConfigError("action_bruteforce: n_knots must be >= 3");
    if (x == y) return 0.0;

    std::vector<double> knots(n_knots);
    for (int i = 0; i < n_knots; ++i)
        knots[i] = x + (y - x) * i / double(n_knots - 1);

    auto total = [&]() {
        double s = 0.0;
        for (int i = 0; i + 1 < n_knots; ++i) s += segment_action(spec, c, knots[i], knots[i + 1]);
        return s;
    };

    double best = total();
    const double span = std::fabs(y - x);
    for (int it = 0; it < n_iters; ++it) {
        double moved = 0.0;
        for (int i = 1; i + 1 < n_knots; ++i) {
            // local golden-section over the knot position; only the two
            // adjacent segments change
            double lo = knots[i - 1], hi = knots[i + 1];
            if (lo > hi) std::swap(lo, hi);
            double margin = 1e-9 * span;
            lo += margin;
            hi -= margin;
            if (lo >= hi) continue;
            double old = knots[i];
            double arg = golden_max(
                [&](double z) {
                    return -(segment_action(spec, c, knots[i - 1], z) +
                             segment_action(spec, c, z, knots[i + 1]));
                },
                lo, hi, 1e-7 * span);
            knots[i] = arg;
            moved = std::max(moved, std::fabs(arg - old));
        }
        double cur = total();
        best = std::min(best, cur);
        if (moved < 1e-9 * span) break;
    }
    return best;
}

VMatrixAtC vmatrix(const SystemSpec& spec, const EquilibriumSet& eq, double c) {
    const int n = eq.size();
    VMatrixAtC m;
    m.c = c;
    m.n = n;
    m.values.assign(n * n, 0.0);
    auto breaks = drift_sign_changes(spec, spec.x_lo, spec.x_hi);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) m.at(i, j) = quasipotential_1d(spec, c, eq.stable[i], eq.stable[j], breaks);

    // additivity along the line: V_ik = V_ij + V_jk for ordered triples
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (!((i < j && j < k) || (i > j && j > k))) continue;
                double lhs = m.at(i, k), rhs = m.at(i, j) + m.at(j, k);
                if (std::fabs(lhs - rhs) > 1e-8 * std::max(1.0, std::fabs(lhs)))
                    throw QuadratureFailure("1D additivity violated: |V_" + std::to_string(i) +
                                            std::to_string(k) + " - (V_ij + V_jk)| = " +
                                            format_double(std::fabs(lhs - rhs)));
            }
    return m;
}

VMatrixAtC vmatrix_tuple(const SystemSpec& spec, const EquilibriumSet& eq,
                         const std::vector<double>& c_per_basin) {
    const int n = eq.size();
    if (static_cast<int>(c_per_basin.size()) != n)
        throw ConfigError("vmatrix_tuple: need one constant per basin");
    VMatrixAtC m;
    m.c = c_per_basin.empty() ? 0.0 : c_per_basin[0];
    m.n = n;
    m.values.assign(n * n, 0.0);
    auto breaks = drift_sign_changes(spec, spec.x_lo, spec.x_hi);

    // alpha = a(x, f(x)) with f constant per basin: integrate piecewise with
    // the basin's constant.  Adjacent costs first, the rest by additivity.
    auto piece_cost = [&](int bi, double lo, double hi, double dir) {
        auto f = [&](double s) {
            double opp = -dir * spec.b.eval(s);
            if (opp <= 0.0) return 0.0;
            return opp / spec.a.eval(s, c_per_basin[bi]);
        };
        QuadratureOptions opt;
        opt.rel_tol = 1e-10;
        return 2.0 * integrate_split(f, lo, hi, breaks, opt);
    };

    for (int i = 0; i + 1 < n; ++i) {
        // O_i -> O_{i+1}: pieces split at the separatrix between D_i, D_{i+1}
        double sep = eq.unstable[i];
        m.at(i, i + 1) = piece_cost(i, eq.stable[i], sep, +1.0) +
                         piece_cost(i + 1, sep, eq.stable[i + 1], +1.0);
        m.at(i + 1, i) = piece_cost(i + 1, sep, eq.stable[i + 1], -1.0) +
                         piece_cost(i, eq.stable[i], sep, -1.0);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 2; j < n; ++j) {
            double up = 0.0, down = 0.0;
            for (int k = i; k < j; ++k) {
                up += m.at(k, k + 1);
                down += m.at(k + 1, k);
            }
            m.at(i, j) = up;
            m.at(j, i) = down;
        }
    }
    return m;
}

}  // namespace metastable
