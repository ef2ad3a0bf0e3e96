#include "metastable/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "metastable/errors.hpp"

namespace metastable {

namespace {

struct SimpsonState {
    const std::function<double(double)>& f;
    const QuadratureOptions& opt;
    long evals = 0;

    double eval(double x) {
        if (++evals > opt.max_evals)
            throw QuadratureFailure("adaptive quadrature exceeded evaluation budget");
        return f(x);
    }

    // Classic adaptive Simpson with Richardson correction.
    double recurse(double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
        double m = 0.5 * (a + b);
        double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double flm = eval(lm), frm = eval(rm);
        double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        double delta = left + right - whole;
        if (depth >= opt.max_depth)
            throw QuadratureFailure("adaptive quadrature exceeded depth limit");
        if (std::fabs(delta) <= 15.0 * tol)
            return left + right + delta / 15.0;
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
               recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
    }

    double run(double a, double b) {
        if (a == b) return 0.0;
        double fa = eval(a), fb = eval(b), fm = eval(0.5 * (a + b));
        double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        double tol = std::max(opt.abs_tol, opt.rel_tol * std::max(std::fabs(whole), 1e-3));
        return recurse(a, b, fa, fm, fb, whole, tol, 0);
    }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opt) {
    SimpsonState st{f, opt};
    return st.run(a, b);
}

double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& interior_breaks,
                       const QuadratureOptions& opt) {
    std::vector<double> pts;
    pts.push_back(a);
    for (double p : interior_breaks)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    SimpsonState st{f, opt};
    double total = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) total += st.run(pts[i], pts[i + 1]);
    return total;
}

}  // namespace metastable
