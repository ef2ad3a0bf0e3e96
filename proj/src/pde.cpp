#include "metastable/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "metastable/errors.hpp"
#include "metastable/util.hpp"

namespace metastable {

double PDESolution::value_at(std::size_t ti, double x) const {
    const auto& u = states[ti];
    if (x <= xs.front()) return u.front();
    if (x >= xs.back()) return u.back();
    double h = xs[1] - xs[0];
    double pos = (x - xs.front()) / h;
    std::size_t j = std::min(static_cast<std::size_t>(pos), xs.size() - 2);
    double t = pos - j;
    return u[j] * (1.0 - t) + u[j + 1] * t;
}

double PDESolution::u_at(double t, double x) const {
    if (t <= times.front()) return value_at(0, x);
    if (t >= times.back()) return value_at(times.size() - 1, x);
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it - times.begin();
    double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return value_at(k - 1, x) * (1.0 - w) + value_at(k, x) * w;
}

const std::vector<double>& PDESolution::field_at_lambda(double lambda) const {
    for (const auto& [lam, idx] : checkpoints)
        if (std::fabs(lam - lambda) <= 1e-12 * std::max(1.0, std::fabs(lambda))) return states[idx];
    throw ConfigError("PDE solution has no checkpoint at lambda = " + format_double(lambda));
}

namespace {

// one backward-Euler step with the nonlinear coefficient lagged; returns the
// number of fixed-point iterations or -1 when the loop stagnates
int implicit_step(const SystemSpec& spec, double eps, const std::vector<double>& xs,
                  const std::vector<double>& bs, const std::vector<double>& u_old, double dt,
                  const StepControls& ctl, std::vector<double>& u_new, double& residual) {
    const std::size_t n = xs.size();
    const double h = xs[1] - xs[0];
    static thread_local std::vector<double> diag, lower, upper, rhs, tmp, u_iter;
    diag.assign(n, 0.0);
    lower.assign(n, 0.0);
    upper.assign(n, 0.0);
    rhs.assign(n, 0.0);
    u_iter = u_old;

    for (int it = 0; it < ctl.fp_max_iters; ++it) {
        for (std::size_t j = 0; j < n; ++j) {
            double a = spec.a.eval(xs[j], u_iter[j]);
            double alpha = 0.5 * eps * eps * a / (h * h);
            double beta = bs[j] / (2.0 * h);
            lower[j] = -dt * (alpha - beta);
            diag[j] = 1.0 + 2.0 * dt * alpha;
            upper[j] = -dt * (alpha + beta);
            rhs[j] = u_old[j];
        }
        // zero-flux walls: symmetric ghost values fold into the inner band
        upper[0] += lower[0];
        lower[0] = 0.0;
        lower[n - 1] += upper[n - 1];
        upper[n - 1] = 0.0;

        // Thomas solve
        tmp.assign(n, 0.0);
        double den = diag[0];
        u_new.assign(n, 0.0);
        tmp[0] = upper[0] / den;
        u_new[0] = rhs[0] / den;
        for (std::size_t j = 1; j < n; ++j) {
            den = diag[j] - lower[j] * tmp[j - 1];
            tmp[j] = upper[j] / den;
            u_new[j] = (rhs[j] - lower[j] * u_new[j - 1]) / den;
        }
        for (std::size_t j = n - 1; j-- > 0;) u_new[j] -= tmp[j] * u_new[j + 1];

        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) delta = std::max(delta, std::fabs(u_new[j] - u_iter[j]));
        u_iter = u_new;
        if (delta < ctl.fp_tol) {
            residual = delta;
            return it + 1;
        }
    }
    return -1;
}

}  // namespace

PDESolution solve_pde(const SystemSpec& spec, double eps, double lambda_end, int n_space,
                      const StepControls& ctl, const std::vector<double>& lambda_checkpoints) {
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("solve_pde: eps must lie in (0,1)");
    if (n_space < 16) throw ConfigError("solve_pde: n_space too small");

    PDESolution sol;
    sol.eps = eps;
    sol.xs = linspace(spec.x_lo, spec.x_hi, n_space);
    const double h = sol.xs[1] - sol.xs[0];

    std::vector<double> bs(n_space);
    for (int j = 0; j < n_space; ++j) bs[j] = spec.b.eval(sol.xs[j]);

    // M-matrix (discrete maximum principle) requires alpha >= |beta|
    double worst = 0.0;
    for (int j = 0; j < n_space; ++j) {
        double a_min_at_x = 1e300;
        for (double c : {spec.g_min, 0.5 * (spec.g_min + spec.g_max), spec.g_max})
            a_min_at_x = std::min(a_min_at_x, spec.a.eval(sol.xs[j], c));
        double need_h = eps * eps * a_min_at_x / std::max(1e-300, std::fabs(bs[j]));
        worst = std::max(worst, h / need_h);
    }
    if (worst > 1.0) {
        int need_n = static_cast<int>(std::ceil((n_space - 1) * worst)) + 2;
        throw ConfigError("solve_pde: grid too coarse for the discrete maximum principle at eps = " +
                          format_double(eps) + "; need n_space >= " + std::to_string(need_n));
    }

    std::vector<double> u(n_space);
    for (int j = 0; j < n_space; ++j) u[j] = spec.g.eval(sol.xs[j]);

    std::vector<double> targets;
    for (double lam : lambda_checkpoints) targets.push_back(std::exp(lam / (eps * eps)));
    const double t_end = std::exp(lambda_end / (eps * eps));
    targets.push_back(t_end);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    while (!targets.empty() && targets.back() > t_end * (1.0 + 1e-12))
        throw ConfigError("solve_pde: a lambda checkpoint exceeds lambda_end");

    sol.times.push_back(0.0);
    sol.states.push_back(u);

    double t = 0.0, dt = ctl.dt0;
    std::size_t next_target = 0;
    std::vector<double> u_new;
    while (t < t_end * (1.0 - 1e-15)) {
        if (++sol.n_steps > ctl.max_steps)
            throw BudgetExceeded("solve_pde: exceeded max_steps = " + std::to_string(ctl.max_steps));
        double dt_eff = std::min(dt, t_end - t);
        if (next_target < targets.size())
            dt_eff = std::min(dt_eff, targets[next_target] - t);

        double residual = 0.0;
        int iters = implicit_step(spec, eps, sol.xs, bs, u, dt_eff, ctl, u_new, residual);
        if (iters < 0) {
            dt *= 0.5;
            ++sol.step_halvings;
            if (dt < ctl.min_dt)
                throw StepFailure("solve_pde: fixed-point loop stagnates at minimum step");
            continue;
        }
        sol.max_fp_iters = std::max(sol.max_fp_iters, iters);
        sol.max_residual = std::max(sol.max_residual, residual);
        u = u_new;
        t += dt_eff;

        // the scheme is an M-matrix solve of a constant-free equation:
        // bounds must hold at every accepted step
        for (double v : u) {
            if (v < spec.g_min - 1e-7 || v > spec.g_max + 1e-7)
                throw StepFailure("solve_pde: discrete maximum principle violated (u = " +
                                  format_double(v) + ")");
        }

        sol.times.push_back(t);
        sol.states.push_back(u);
        if (next_target < targets.size() && t >= targets[next_target] * (1.0 - 1e-12)) {
            ++next_target;
        }
        dt = std::min(dt * ctl.growth, t_end);
    }

    for (double lam : lambda_checkpoints) {
        double tt = std::exp(lam / (eps * eps));
        std::size_t best = 0;
        double err = 1e300;
        for (std::size_t k = 0; k < sol.times.size(); ++k) {
            double e = std::fabs(sol.times[k] - tt);
            if (e < err) {
                err = e;
                best = k;
            }
        }
        if (err > 1e-6 * std::max(1.0, tt))
            throw StepFailure("solve_pde: missed checkpoint t = " + format_double(tt));
        sol.checkpoints[lam] = best;
    }
    return sol;
}

std::string Lemma1Report::to_text() const {
    std::ostringstream out;
    out << "lemma-1 plateau check at lambda = " << format_double(lambda)
        << ", delta = " << format_double(delta) << "\n";
    for (std::size_t i = 0; i < basin_deviation.size(); ++i)
        out << "  basin " << i + 1 << ": max |u - u(O_i)| = " << format_double(basin_deviation[i])
            << "\n";
    out << "  max deviation " << format_double(max_deviation) << " -> "
        << (pass ? "pass" : "FAIL") << "\n";
    return out.str();
}

Lemma1Report check_lemma1(const PDESolution& sol, const EquilibriumSet& eq, double delta,
                          double lambda) {
    Lemma1Report rep;
    rep.lambda = lambda;
    rep.delta = delta;
    const auto& u = sol.field_at_lambda(lambda);
    for (int i = 0; i < eq.size(); ++i) {
        Interval s = shrunk_basin(eq.basins[i], delta);
        double centre = 0.0;
        {
            // value at O_i by interpolation on the stored field
            double x = eq.stable[i];
            double h = sol.xs[1] - sol.xs[0];
            double pos = (x - sol.xs.front()) / h;
            std::size_t j = std::min(static_cast<std::size_t>(std::max(0.0, pos)), sol.xs.size() - 2);
            double t = pos - j;
            centre = u[j] * (1.0 - t) + u[j + 1] * t;
        }
        double dev = 0.0;
        for (std::size_t j = 0; j < sol.xs.size(); ++j)
            if (sol.xs[j] >= s.lo && sol.xs[j] <= s.hi) dev = std::max(dev, std::fabs(u[j] - centre));
        rep.basin_deviation.push_back(dev);
        rep.max_deviation = std::max(rep.max_deviation, dev);
    }
    rep.pass = rep.max_deviation <= delta;
    return rep;
}

}  // namespace metastable
