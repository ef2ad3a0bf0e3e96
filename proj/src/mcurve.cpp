#include "metastable/mcurve.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "metastable/errors.hpp"
#include "metastable/util.hpp"

namespace metastable {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRootTol = 1e-10;
}

double MCurve::eval(double c) const {
    if (exact) return exact(c);
    if (cs.empty()) throw ConfigError("MCurve: empty sample table");
    if (c <= cs.front()) return ms.front();
    if (c >= cs.back()) return ms.back();
    auto it = std::upper_bound(cs.begin(), cs.end(), c);
    size_t j = it - cs.begin();
    double t = (c - cs[j - 1]) / (cs[j] - cs[j - 1]);
    return ms[j - 1] + t * (ms[j] - ms[j - 1]);
}

void MCurve::build_structure() {
    local_maxima.clear();
    segment_breaks.clear();
    const size_t n = cs.size();
    if (n < 3) return;

    // discrete slope sign changes, then golden-section refinement
    for (size_t i = 1; i + 1 < n; ++i) {
        double dl = ms[i] - ms[i - 1];
        double dr = ms[i + 1] - ms[i];
        bool is_max = dl > 0.0 && dr < 0.0;
        bool is_min = dl < 0.0 && dr > 0.0;
        if (!is_max && !is_min) continue;
        double loc = cs[i];
        if (exact) {
            if (is_max)
                loc = golden_max([&](double c) { return exact(c); }, cs[i - 1], cs[i + 1], 1e-9);
            else
                loc = golden_max([&](double c) { return -exact(c); }, cs[i - 1], cs[i + 1], 1e-9);
        }
        segment_breaks.push_back(loc);
        if (is_max) local_maxima.push_back(loc);
        // pin the refined extremum into the sample table so interpolation
        // and solving see the true turning point
        double val = eval(loc);
        auto it = std::upper_bound(cs.begin(), cs.end(), loc);
        size_t j = it - cs.begin();
        if (j > 0 && std::fabs(cs[j - 1] - loc) < 1e-12) {
            ms[j - 1] = val;
        } else {
            cs.insert(cs.begin() + j, loc);
            ms.insert(ms.begin() + j, val);
            ++i;
        }
    }
}

namespace {

// root of f on [a,b] given f(a)*f(b) <= 0; bisection is enough at 1e-10
double refine(const std::function<double(double)>& f, double a, double b) {
    return bisect_root(f, a, b, kRootTol);
}

}  // namespace

double MCurve::min_solution(double lambda, double lo, double hi) const {
    lo = std::max(lo, c_lo());
    hi = std::min(hi, c_hi());
    if (lo > hi) return kNaN;
    auto f = [&](double c) { return eval(c) - lambda; };
    double flo = f(lo);
    if (flo == 0.0) return lo;
    // walk sample intervals left to right
    size_t j0 = std::upper_bound(cs.begin(), cs.end(), lo) - cs.begin();
    double prev_c = lo, prev_f = flo;
    for (size_t j = j0; j < cs.size() && prev_c < hi; ++j) {
        double c = std::min(cs[j], hi);
        if (c <= prev_c) continue;
        double fc = f(c);
        if (prev_f == 0.0) return prev_c;
        if (prev_f * fc <= 0.0) return refine(f, prev_c, c);
        prev_c = c;
        prev_f = fc;
    }
    if (prev_c < hi) {
        double fc = f(hi);
        if (prev_f * fc <= 0.0) return refine(f, prev_c, hi);
    }
    return kNaN;
}

double MCurve::max_solution(double lambda, double lo, double hi) const {
    lo = std::max(lo, c_lo());
    hi = std::min(hi, c_hi());
    if (lo > hi) return kNaN;
    auto f = [&](double c) { return eval(c) - lambda; };
    double fhi = f(hi);
    if (fhi == 0.0) return hi;
    size_t j0 = std::lower_bound(cs.begin(), cs.end(), hi) - cs.begin();
    double prev_c = hi, prev_f = fhi;
    for (size_t jj = j0; jj-- > 0 && prev_c > lo;) {
        double c = std::max(cs[jj], lo);
        if (c >= prev_c) continue;
        double fc = f(c);
        if (prev_f == 0.0) return prev_c;
        if (prev_f * fc <= 0.0) return refine(f, c, prev_c);
        prev_c = c;
        prev_f = fc;
    }
    if (prev_c > lo) {
        double fc = f(lo);
        if (prev_f * fc <= 0.0) return refine(f, lo, prev_c);
    }
    return kNaN;
}

double MCurve::inf_above(double c1, double lambda) const {
    double lo = std::max(c1, c_lo());
    if (lo > c_hi()) return kNaN;
    if (eval(lo) >= lambda) return lo;
    auto f = [&](double c) { return eval(c) - lambda; };
    size_t j0 = std::upper_bound(cs.begin(), cs.end(), lo) - cs.begin();
    double prev_c = lo, prev_f = f(lo);
    for (size_t j = j0; j < cs.size(); ++j) {
        double fc = f(cs[j]);
        if (fc >= 0.0) return refine(f, prev_c, cs[j]);
        prev_c = cs[j];
        prev_f = fc;
    }
    (void)prev_f;
    return kNaN;
}

double MCurve::sup_below(double c1, double lambda) const {
    double hi = std::min(c1, c_hi());
    if (hi < c_lo()) return kNaN;
    if (eval(hi) >= lambda) return hi;
    auto f = [&](double c) { return eval(c) - lambda; };
    size_t j0 = std::lower_bound(cs.begin(), cs.end(), hi) - cs.begin();
    double prev_c = hi;
    for (size_t jj = j0; jj-- > 0;) {
        double fc = f(cs[jj]);
        if (fc >= 0.0) return refine(f, cs[jj], prev_c);
        prev_c = cs[jj];
    }
    return kNaN;
}

int MCurve::slope_sign(double c) const {
    double h = std::max(1e-7, 1e-7 * (c_hi() - c_lo()));
    double lo = std::max(c - h, c_lo());
    double hi = std::min(c + h, c_hi());
    double d = eval(hi) - eval(lo);
    double scale = std::max({std::fabs(eval(c)), 1e-12});
    if (std::fabs(d) <= 1e-12 * scale) return 0;
    return d > 0.0 ? 1 : -1;
}

double MCurve::max_on(double lo, double hi) const {
    lo = std::max(lo, c_lo());
    hi = std::min(hi, c_hi());
    double best = std::max(eval(lo), eval(hi));
    for (size_t i = 0; i < cs.size(); ++i)
        if (cs[i] > lo && cs[i] < hi) best = std::max(best, ms[i]);
    for (double m : local_maxima)
        if (m >= lo && m <= hi) best = std::max(best, eval(m));
    return best;
}

std::string MCurve::to_table_text(const std::string& key_hex) const {
    std::ostringstream out;
    out << "# metastable m-curve cache v1\n";
    out << "# key " << key_hex << "\n";
    out << "# cycle " << cycle_id << "\n";
    out << "# columns c M\n";
    for (size_t i = 0; i < cs.size(); ++i)
        out << format_double(cs[i]) << ' ' << format_double(ms[i]) << '\n';
    return out.str();
}

MCurve MCurve::from_table_text(const std::string& text, std::string* key_hex_out) {
    MCurve m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tag;
            ls >> tag;
            if (tag == "key" && key_hex_out) ls >> *key_hex_out;
            if (tag == "cycle") ls >> m.cycle_id;
            continue;
        }
        std::istringstream ls(line);
        double c, v;
        if (ls >> c >> v) {
            m.cs.push_back(c);
            m.ms.push_back(v);
        }
    }
    if (m.cs.size() < 2) throw ConfigError("m-curve table: fewer than two samples");
    for (size_t i = 1; i < m.cs.size(); ++i)
        if (!(m.cs[i] > m.cs[i - 1])) throw ConfigError("m-curve table: c column not strictly increasing");
    return m;
}

namespace {

std::string cache_path(const std::string& dir, const std::string& cycle_key, std::uint64_t key) {
    std::ostringstream ss;
    ss << dir << "/mcurve_" << cycle_key << '_' << std::hex << key << ".txt";
    return ss.str();
}

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << v;
    return ss.str();
}

}  // namespace

std::map<std::string, MCurve> tabulate_all_m_curves(const SystemSpec& spec,
                                                    const EquilibriumSet& eq,
                                                    const Hierarchy& h,
                                                    double c_lo, double c_hi, int n_grid,
                                                    const std::string& cache_dir) {
    if (n_grid < 8) throw ConfigError("tabulate_all_m_curves: n_grid must be >= 8");
    const std::string ref_sig = h.signature();

    // one curve per distinct member-set key of rank < R
    std::vector<int> curve_cycles;  // representative cycle ids
    std::vector<std::string> keys;
    for (int r = 0; r < h.top_rank(); ++r)
        for (int id : h.levels[r]) {
            const std::string k = h.all[id].key();
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
                keys.push_back(k);
                curve_cycles.push_back(id);
            }
        }

    const std::uint64_t content_key = fnv1a64(
        spec.content_key() + ";grid=" + std::to_string(n_grid) + ";dom=[" + format_double(c_lo) +
        "," + format_double(c_hi) + "];sig=" + ref_sig);

    std::map<std::string, MCurve> out;

    // cache probe
    bool all_cached = !cache_dir.empty();
    if (all_cached) {
        for (const auto& k : keys) {
            std::ifstream in(cache_path(cache_dir, k, content_key));
            if (!in) {
                all_cached = false;
                break;
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            std::string key_hex;
            MCurve m = MCurve::from_table_text(ss.str(), &key_hex);
            if (key_hex != hex64(content_key)) {
                all_cached = false;
                break;
            }
            m.cycle_id = k;
            out[k] = std::move(m);
        }
        if (!all_cached) out.clear();
    }

    if (!all_cached) {
        auto grid = linspace(c_lo, c_hi, n_grid);
        std::vector<std::vector<double>> samples(keys.size());
        for (double c : grid) {
            VMatrixAtC V = vmatrix(spec, eq, c);
            Hierarchy hc = build_hierarchy(V);
            if (hc.signature() != ref_sig)
                throw HierarchyUnstable("hierarchy structure changes at c = " + format_double(c) +
                                        " (nu or cycle membership flips); run the stability scan");
            auto rates = cycle_rates_on(h, V);
            for (size_t q = 0; q < keys.size(); ++q) samples[q].push_back(rates[curve_cycles[q]]);
        }
        for (size_t q = 0; q < keys.size(); ++q) {
            MCurve m;
            m.cycle_id = keys[q];
            m.cs = grid;
            m.ms = samples[q];
            out[keys[q]] = std::move(m);
        }
    }

    // exact evaluators always come from the live spec; the cache only skips
    // the tabulation scan (shared snapshot keeps the curves self-contained)
    struct Snapshot {
        SystemSpec spec;
        EquilibriumSet eq;
        Hierarchy h;
    };
    auto snap = std::make_shared<Snapshot>(Snapshot{spec, eq, h});
    for (size_t q = 0; q < keys.size(); ++q) {
        int cid = curve_cycles[q];
        out[keys[q]].exact = [snap, cid](double c) {
            VMatrixAtC V = vmatrix(snap->spec, snap->eq, c);
            return cycle_rates_on(snap->h, V)[cid];
        };
        out[keys[q]].build_structure();
    }

    if (!cache_dir.empty() && !all_cached) {
        std::filesystem::create_directories(cache_dir);
        for (const auto& k : keys) {
            std::ofstream f(cache_path(cache_dir, k, content_key));
            f << out[k].to_table_text(hex64(content_key));
        }
    }
    return out;
}

MCurve tabulate_m_curve(const SystemSpec& spec, const EquilibriumSet& eq, const Hierarchy& probe,
                        const std::string& cycle_key, double c_lo, double c_hi, int n_grid,
                        const std::string& cache_dir) {
    auto curves = tabulate_all_m_curves(spec, eq, probe, c_lo, c_hi, n_grid, cache_dir);
    auto it = curves.find(cycle_key);
    if (it == curves.end())
        throw ConfigError("tabulate_m_curve: no cycle with key {" + cycle_key + "} below the top rank");
    return it->second;
}

std::vector<VMatrixAtC> read_vtable_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open v-table file: " + path);
    std::vector<VMatrixAtC> rows;
    std::string line;
    int n = -1;
    while (std::getline(in, line)) {
        size_t cpos = line.find('#');
        if (cpos != std::string::npos) line = line.substr(0, cpos);
        std::istringstream ls(line);
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        if (vals.empty()) continue;
        int nn = static_cast<int>(std::lround(std::sqrt(double(vals.size() - 1))));
        if (nn * nn + 1 != static_cast<int>(vals.size()))
            throw ConfigError("v-table row must be 'c' followed by n*n matrix entries");
        if (n < 0) n = nn;
        if (nn != n) throw ConfigError("v-table rows have inconsistent sizes");
        VMatrixAtC m;
        m.c = vals[0];
        m.n = n;
        m.values.assign(vals.begin() + 1, vals.end());
        for (int i = 0; i < n; ++i) {
            if (m.at(i, i) != 0.0) throw ConfigError("v-table diagonal must be zero");
            for (int j = 0; j < n; ++j)
                if (m.at(i, j) < 0.0) throw ConfigError("v-table entries must be nonnegative");
        }
        rows.push_back(std::move(m));
    }
    if (rows.size() < 2) throw ConfigError("v-table needs at least two c rows");
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.c < b.c; });
    return rows;
}

std::map<std::string, MCurve> m_curves_from_vtables(const std::vector<VMatrixAtC>& tables,
                                                    const Hierarchy& h) {
    std::map<std::string, MCurve> out;
    const std::string ref_sig = h.signature();
    for (const auto& t : tables) {
        Hierarchy ht = build_hierarchy(t);
        if (ht.signature() != ref_sig)
            throw HierarchyUnstable("hierarchy structure changes at table row c = " +
                                    format_double(t.c));
    }
    for (int r = 0; r < h.top_rank(); ++r) {
        for (int id : h.levels[r]) {
            const std::string k = h.all[id].key();
            if (out.count(k)) continue;
            MCurve m;
            m.cycle_id = k;
            for (const auto& t : tables) {
                m.cs.push_back(t.c);
                m.ms.push_back(cycle_rates_on(h, t)[id]);
            }
            m.build_structure();
            out[k] = std::move(m);
        }
    }
    return out;
}

}  // namespace metastable
