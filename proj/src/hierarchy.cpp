#include "metastable/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "metastable/errors.hpp"
#include "metastable/util.hpp"

namespace metastable {

namespace {
constexpr double kTieTol = 1e-9;
}

bool Cycle::contains(int eq_index) const {
    return std::find(members.begin(), members.end(), eq_index) != members.end();
}

std::string Cycle::key() const {
    std::ostringstream ss;
    for (size_t i = 0; i < members.size(); ++i) {
        if (i) ss << '+';
        ss << members[i] + 1;  // user-facing indices are 1-based
    }
    return ss.str();
}

int Hierarchy::n_equilibria() const { return static_cast<int>(levels[0].size()); }

int Hierarchy::cycle_at_rank(int eq_index, int rank) const {
    for (int id : levels[rank])
        if (all[id].contains(eq_index)) return id;
    return -1;
}

int Hierarchy::parent_of(int id) const {
    const Cycle& c = all[id];
    if (c.rank == top_rank()) return -1;
    return cycle_at_rank(c.members.front(), c.rank + 1);
}

std::string Hierarchy::to_text(const EquilibriumSet& eq) const {
    std::ostringstream out;
    out << "hierarchy of cycles: " << n_equilibria() << " equilibria, top rank " << top_rank() << "\n";
    for (int r = top_rank(); r >= 0; --r) {
        for (int id : levels[r]) {
            const Cycle& c = all[id];
            for (int i = 0; i < top_rank() - r; ++i) out << "  ";
            out << "rank " << r << " cycle {" << c.key() << "}";
            if (c.promoted) out << " (promoted)";
            if (c.nu >= 0) {
                out << "  nu = O" << c.nu + 1;
                if (c.nu < static_cast<int>(eq.stable.size()))
                    out << " @ " << format_double(eq.stable[c.nu]);
                const Cycle& nxt = all[c.next_cycle];
                out << "  N = {" << nxt.key() << "}";
                out << "  exit rates:";
                for (const auto& [j, v] : c.exit_rates) out << " O" << j + 1 << ":" << format_double(v);
            }
            out << "\n";
        }
    }
    return out.str();
}

std::string Hierarchy::signature() const {
    std::ostringstream ss;
    for (size_t r = 0; r < levels.size(); ++r) {
        ss << 'r' << r << ':';
        std::vector<std::string> parts;
        for (int id : levels[r]) {
            const Cycle& c = all[id];
            parts.push_back(c.key() + (c.nu >= 0 ? ">" + std::to_string(c.nu + 1) : ""));
        }
        std::sort(parts.begin(), parts.end());
        for (const auto& p : parts) ss << p << '|';
        ss << ';';
    }
    return ss.str();
}

namespace {

// argmin over exit rates with the Assumption A uniqueness check
int next_equilibrium(const Cycle& c) {
    int best = -1;
    double bestv = 0.0;
    for (const auto& [j, v] : c.exit_rates) {
        if (best < 0 || v < bestv) {
            best = j;
            bestv = v;
        }
    }
    std::vector<int> tied;
    for (const auto& [j, v] : c.exit_rates)
        if (j != best && v - bestv <= kTieTol) tied.push_back(j);
    if (!tied.empty()) {
        std::ostringstream ss;
        ss << "Assumption A violated for cycle {" << c.key() << "}: min over exit rates is not "
           << "achieved for a single value of j (O" << best + 1;
        for (int j : tied) ss << ", O" << j + 1;
        ss << " within " << kTieTol << ")";
        throw AssumptionAViolation(ss.str());
    }
    return best;
}

}  // namespace

Hierarchy build_hierarchy(const VMatrixAtC& V) {
    const int n = V.n;
    Hierarchy h;
    h.levels.emplace_back();
    for (int i = 0; i < n; ++i) {
        Cycle c;
        c.id = static_cast<int>(h.all.size());
        c.rank = 0;
        c.members = {i};
        for (int j = 0; j < n; ++j)
            if (j != i) c.exit_rates[j] = V.at(i, j);
        h.levels[0].push_back(c.id);
        h.all.push_back(std::move(c));
    }

    int rank = 0;
    while (h.levels[rank].size() > 1) {
        auto& level = h.levels[rank];
        const int m = static_cast<int>(level.size());

        // "next" assignments at this rank
        for (int li = 0; li < m; ++li) {
            Cycle& c = h.all[level[li]];
            c.nu = next_equilibrium(c);
            for (int lj = 0; lj < m; ++lj)
                if (h.all[level[lj]].contains(c.nu)) c.next_cycle = level[lj];
        }

        // orbit detection in the functional graph level -> next
        std::vector<int> idx_of(h.all.size(), -1);
        for (int li = 0; li < m; ++li) idx_of[level[li]] = li;
        std::vector<bool> on_orbit(m, false);
        for (int s = 0; s < m; ++s) {
            int cur = s;
            for (int step = 0; step <= m; ++step) {
                cur = idx_of[h.all[level[cur]].next_cycle];
                if (cur == s) {
                    // walk the orbit once more to mark all its nodes
                    int t = s;
                    do {
                        on_orbit[t] = true;
                        t = idx_of[h.all[level[t]].next_cycle];
                    } while (t != s);
                    break;
                }
            }
        }

        std::vector<int> next_level;
        std::vector<bool> consumed(m, false);
        for (int s = 0; s < m; ++s) {
            if (consumed[s]) continue;
            if (!on_orbit[s]) {
                // singleton promotion: rates carried over unchanged
                const Cycle& src = h.all[level[s]];
                Cycle c;
                c.id = static_cast<int>(h.all.size());
                c.rank = rank + 1;
                c.members = src.members;
                c.exit_rates = src.exit_rates;
                c.promoted = true;
                consumed[s] = true;
                next_level.push_back(c.id);
                h.all.push_back(std::move(c));
                continue;
            }
            // collect the orbit through s
            std::vector<int> orbit;
            int t = s;
            do {
                orbit.push_back(t);
                consumed[t] = true;
                t = idx_of[h.all[level[t]].next_cycle];
            } while (t != s);

            Cycle c;
            c.id = static_cast<int>(h.all.size());
            c.rank = rank + 1;
            for (int li : orbit)
                for (int e : h.all[level[li]].members) c.members.push_back(e);
            std::sort(c.members.begin(), c.members.end());

            // rate formula for a merged cycle:
            //   V_{Gamma,O_j} = max_m V_{C_m,nu(C_m)} + min_m (V_{C_m,O_j} - V_{C_m,nu(C_m)})
            double max_rot = 0.0;
            for (int li : orbit)
                max_rot = std::max(max_rot, h.all[level[li]].rate_to_nu());
            for (int j = 0; j < n; ++j) {
                if (c.contains(j)) continue;
                double best = 0.0;
                bool first = true;
                for (int li : orbit) {
                    const Cycle& cm = h.all[level[li]];
                    double d = cm.exit_rates.at(j) - cm.rate_to_nu();
                    if (first || d < best) {
                        best = d;
                        first = false;
                    }
                }
                c.exit_rates[j] = max_rot + best;
            }
            next_level.push_back(c.id);
            h.all.push_back(std::move(c));
        }
        h.levels.push_back(std::move(next_level));
        ++rank;
    }
    return h;
}

std::vector<double> cycle_rates_on(const Hierarchy& h, const VMatrixAtC& V) {
    // exit-rate table per cycle id on the new matrix, structure held fixed
    std::vector<std::map<int, double>> rates(h.all.size());
    std::vector<double> to_nu(h.all.size(), 0.0);
    const int n = V.n;
    for (size_t id = 0; id < h.all.size(); ++id) {
        const Cycle& c = h.all[id];
        if (c.rank == 0) {
            int i = c.members[0];
            for (int j = 0; j < n; ++j)
                if (j != i) rates[id][j] = V.at(i, j);
        } else if (c.promoted) {
            int child = h.cycle_at_rank(c.members.front(), c.rank - 1);
            rates[id] = rates[child];
        } else {
            // the constituents form the orbit that built this cycle
            std::vector<int> parts;
            for (int cid : h.levels[c.rank - 1])
                if (c.contains(h.all[cid].members.front()) &&
                    std::includes(c.members.begin(), c.members.end(), h.all[cid].members.begin(),
                                  h.all[cid].members.end()))
                    parts.push_back(cid);
            double max_rot = 0.0;
            for (int cid : parts) max_rot = std::max(max_rot, rates[cid].at(h.all[cid].nu));
            for (int j = 0; j < n; ++j) {
                if (c.contains(j)) continue;
                double best = 0.0;
                bool first = true;
                for (int cid : parts) {
                    double d = rates[cid].at(j) - rates[cid].at(h.all[cid].nu);
                    if (first || d < best) {
                        best = d;
                        first = false;
                    }
                }
                rates[id][j] = max_rot + best;
            }
        }
        to_nu[id] = (c.nu >= 0) ? rates[id].at(c.nu) : 0.0;
    }
    return to_nu;
}

std::string StabilityReport::to_text() const {
    std::ostringstream out;
    if (stable) {
        out << "hierarchy stable across c-grid (" << c_grid.size() << " values";
        if (tuple_probes > 0) out << ", " << tuple_probes << " randomized tuples";
        out << ")\n";
    } else {
        out << "hierarchy UNSTABLE across c-grid\n";
        if (threshold_found)
            out << "threshold c-bar = " << format_double(threshold) << "\n";
        out << "structure below: " << signature_lo << "\nstructure above: " << signature_hi << "\n";
    }
    return out.str();
}

StabilityReport check_hierarchy_stability(const SystemSpec& spec, const EquilibriumSet& eq,
                                          const std::vector<double>& c_grid,
                                          int tuple_probes, std::uint64_t seed) {
    if (c_grid.empty()) throw ConfigError("check_hierarchy_stability: empty c grid");
    StabilityReport rep;
    rep.c_grid = c_grid;

    // A tie exactly at a grid value marks the flip point itself (Assumption A
    // fails only at the threshold in the single-flip scenario); ties are
    // treated as a signature of their own rather than a fatal error here.
    auto sig_at = [&](double c) -> std::string {
        try {
            return build_hierarchy(vmatrix(spec, eq, c)).signature();
        } catch (const AssumptionAViolation& e) {
            return std::string("!tie: ") + e.what();
        }
    };

    std::vector<std::string> sigs;
    sigs.reserve(c_grid.size());
    for (double c : c_grid) sigs.push_back(sig_at(c));

    if (sigs[0].rfind("!tie", 0) == 0)
        throw AssumptionAViolation(sigs[0].substr(6) + " at c = " + format_double(c_grid[0]));

    size_t flip = 0;
    for (size_t i = 1; i < sigs.size(); ++i)
        if (sigs[i] != sigs[0]) {
            flip = i;
            break;
        }

    if (flip == 0) {
        rep.stable = true;
        // randomized per-basin tuples guard the general (non-equal-constant) case
        if (tuple_probes > 0) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(spec.g_min, spec.g_max);
            for (int p = 0; p < tuple_probes; ++p) {
                std::vector<double> tup(eq.size());
                for (auto& t : tup) t = u(rng);
                std::string s = build_hierarchy(vmatrix_tuple(spec, eq, tup)).signature();
                if (s != sigs[0]) {
                    rep.stable = false;
                    rep.signature_lo = sigs[0];
                    rep.signature_hi = s;
                    return rep;
                }
                ++rep.tuple_probes;
            }
        }
        return rep;
    }

    rep.stable = false;
    rep.signature_lo = sigs[flip - 1];
    // first clean signature after the flip (skip a tie landing on the threshold)
    rep.signature_hi = sigs[flip];
    for (size_t i = flip; i < sigs.size(); ++i)
        if (sigs[i].rfind("!tie", 0) != 0) {
            rep.signature_hi = sigs[i];
            break;
        }
    // smallest threshold between the last matching and first flipped grid value
    double lo = c_grid[flip - 1], hi = c_grid[flip];
    const std::string base = sigs[flip - 1];
    rep.threshold = bisect_predicate([&](double c) { return sig_at(c) != base; }, lo, hi, 1e-6);
    rep.threshold_found = true;
    return rep;
}

}  // namespace metastable
