#include "metastable/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "metastable/errors.hpp"
#include "metastable/util.hpp"

namespace metastable {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEventTol = 1e-9;  // distinctness tolerance for special points

struct Event {
    enum class Kind { L1, L2, L3, L4 } kind;
    double lambda = 0.0;
    int cycle = -1;        // triggering cycle id (Gamma)
    int other = -1;        // Upsilon id for L3/L4
    double c = 0.0;        // local max location (L2), crossing location (L3), a_Upsilon (L4)
    std::string label;
};

const char* kind_name(Event::Kind k) {
    switch (k) {
        case Event::Kind::L1: return "Lambda^1";
        case Event::Kind::L2: return "Lambda^2";
        case Event::Kind::L3: return "Lambda^3";
        case Event::Kind::L4: return "Lambda^4";
    }
    return "?";
}

BreakTag tag_of(Event::Kind k) {
    switch (k) {
        case Event::Kind::L1: return BreakTag::lambda1;
        case Event::Kind::L2: return BreakTag::lambda2;
        case Event::Kind::L3: return BreakTag::lambda3;
        case Event::Kind::L4: return BreakTag::lambda4;
    }
    return BreakTag::sec3;
}

struct SweepEngine {
    const SweepInputs& in;
    const Hierarchy& h;
    int n = 0;
    double value_scale = 1.0;

    // per cycle id
    std::vector<CycleState> type;
    std::vector<bool> merged;
    std::vector<double> merge_lambda, merge_value;  // lambda_Gamma, a_Gamma

    // per equilibrium
    std::vector<double> s;        // right limits at the last breakpoint
    std::vector<Piece> piece;     // active descriptor on the current interval

    std::vector<Event> pending;   // future special points
    std::set<std::string> event_ids;  // dedupe (promoted singletons share curves)

    ProfileSet ps;
    double cur_lambda = 0.0;

    explicit SweepEngine(const SweepInputs& inputs) : in(inputs), h(inputs.hierarchy) {
        n = h.n_equilibria();
        value_scale = std::max(1e-12, in.g_max - in.g_min);
    }

    const MCurve& curve_of(int cid) const {
        auto it = in.curves.find(h.all[cid].key());
        if (it == in.curves.end())
            throw ConfigError("general_sweep: missing M-curve for cycle {" + h.all[cid].key() + "}");
        return it->second;
    }
    bool has_curve(int cid) const { return in.curves.count(h.all[cid].key()) > 0; }

    bool values_equal(double a, double b) const { return std::fabs(a - b) <= 1e-9 * value_scale; }

    // ---- event queue -------------------------------------------------

    void add_event(Event e, bool allow_past = false) {
        std::ostringstream id;
        id << static_cast<int>(e.kind) << '|' << h.all[e.cycle].key() << '|'
           << (e.other >= 0 ? h.all[e.other].key() : "") << '|' << format_double(e.c);
        if (!event_ids.insert(id.str()).second) return;  // same special point (promoted copy)
        if (!allow_past && e.lambda <= cur_lambda + 1e-15) return;
        for (const Event& q : pending) {
            if (std::fabs(q.lambda - e.lambda) <= kEventTol) {
                throw GenericityViolation(
                    "special points are not distinct: " + std::string(kind_name(q.kind)) + " (" +
                    q.label + ") and " + kind_name(e.kind) + " (" + e.label + ") both at lambda = " +
                    format_double(e.lambda));
            }
        }
        pending.push_back(std::move(e));
    }

    Event pop_next() {
        size_t best = 0;
        for (size_t i = 1; i < pending.size(); ++i)
            if (pending[i].lambda < pending[best].lambda) best = i;
        Event e = pending[best];
        pending.erase(pending.begin() + best);
        return e;
    }

    // ---- static special points ---------------------------------------

    void schedule_static_events() {
        // Lambda^2: local maxima of every curve
        std::set<std::string> seen_keys;
        for (int r = 0; r < h.top_rank(); ++r) {
            for (int id : h.levels[r]) {
                const Cycle& c = h.all[id];
                if (!seen_keys.insert(c.key()).second) continue;
                const MCurve& m = curve_of(id);
                for (double cm : m.local_maxima) {
                    Event e{Event::Kind::L2, m.eval(cm), id, -1, cm,
                            "local max of M_{" + c.key() + "} at c = " + format_double(cm)};
                    add_event(std::move(e), true);
                }
            }
        }
        // Lambda^3: crossings of M_Gamma with M_Upsilon for Upsilon inside
        // the enclosing cycle minus Gamma
        std::set<std::string> seen_pairs;
        std::vector<std::array<double, 2>> crossing_locs;  // {c, lambda} for disjointness checks
        for (int r = 0; r < h.top_rank(); ++r) {
            for (int gid : h.levels[r]) {
                int parent = h.parent_of(gid);
                if (parent < 0) continue;
                const Cycle& G = h.all[gid];
                for (const Cycle& U : h.all) {
                    if (U.id == gid || U.rank >= h.top_rank()) continue;
                    if (U.key() == G.key()) continue;
                    // U contained in parent \ G
                    bool inside = std::includes(h.all[parent].members.begin(), h.all[parent].members.end(),
                                                U.members.begin(), U.members.end());
                    bool disjoint = true;
                    for (int m : U.members)
                        if (G.contains(m)) disjoint = false;
                    if (!inside || !disjoint) continue;
                    std::string pair_key = std::min(G.key(), U.key()) + "/" + std::max(G.key(), U.key());
                    if (!seen_pairs.insert(pair_key).second) continue;
                    find_crossings(gid, U.id, crossing_locs);
                }
            }
        }
    }

    void find_crossings(int gid, int uid, std::vector<std::array<double, 2>>& crossing_locs) {
        const MCurve& mg = curve_of(gid);
        const MCurve& mu = curve_of(uid);
        double lo = std::max(mg.c_lo(), mu.c_lo());
        double hi = std::min(mg.c_hi(), mu.c_hi());
        if (lo >= hi) return;
        const int N = 1024;
        auto diff = [&](double c) { return mg.eval(c) - mu.eval(c); };
        double prev_c = lo, prev_d = diff(lo);
        int degenerate_run = 0;
        for (int i = 1; i <= N; ++i) {
            double c = lo + (hi - lo) * i / double(N);
            double d = diff(c);
            double scale = std::max({std::fabs(mg.eval(c)), std::fabs(mu.eval(c)), 1e-12});
            if (std::fabs(d) <= 1e-11 * scale) {
                if (++degenerate_run >= 8)
                    throw GenericityViolation("crossing set I_{" + h.all[gid].key() + "," +
                                              h.all[uid].key() +
                                              "} is not finite (curves coincide on an interval)");
            } else {
                degenerate_run = 0;
            }
            if (prev_d * d < 0.0) {
                double cx = bisect_root(diff, prev_c, c, 1e-12);
                double lam = mg.eval(cx);
                for (const auto& loc : crossing_locs) {
                    if (std::fabs(loc[0] - cx) <= kEventTol)
                        throw GenericityViolation(
                            "crossing sets I_{Gamma,Upsilon} are not pairwise disjoint near c = " +
                            format_double(cx));
                }
                crossing_locs.push_back({cx, lam});
                Event e{Event::Kind::L3, lam, gid, uid, cx,
                        "M_{" + h.all[gid].key() + "} crosses M_{" + h.all[uid].key() + "} at c = " +
                            format_double(cx)};
                add_event(std::move(e), true);
            }
            prev_c = c;
            prev_d = d;
        }
    }

    // ---- merge bookkeeping --------------------------------------------

    // records newly merged cycles, schedules their Lambda^1 / Lambda^4
    // events; returns cycles whose release is overdue (A_Gamma <= lambda_k)
    std::vector<int> detect_merges() {
        std::vector<int> overdue;
        for (const Cycle& c : h.all) {
            if (merged[c.id] || c.members.size() < 1) continue;
            double v0 = s[c.members.front()];
            bool all_eq = true;
            for (int m : c.members)
                if (!values_equal(s[m], v0)) all_eq = false;
            if (!all_eq) continue;
            merged[c.id] = true;
            merge_lambda[c.id] = cur_lambda;
            merge_value[c.id] = v0;
            if (c.rank < h.top_rank() || c.nu >= 0) {
                if (has_curve(c.id)) {
                    double A = curve_of(c.id).eval(v0);
                    if (A <= cur_lambda + 1e-15) {
                        overdue.push_back(c.id);
                    } else {
                        add_event({Event::Kind::L1, A, c.id, -1, v0,
                                   "A_{" + c.key() + "} (group level " + format_double(v0) + ")"});
                    }
                }
            }
            // Lambda^4 entries M_Gamma'(a_Upsilon) for nu(Gamma') in Upsilon,
            // rank(Upsilon) <= rank(Gamma')
            for (const Cycle& g : h.all) {
                if (g.rank >= h.top_rank() && g.nu < 0) continue;
                if (!has_curve(g.id) || g.nu < 0) continue;
                if (!c.contains(g.nu)) continue;
                if (c.rank > g.rank) continue;
                double lam = curve_of(g.id).eval(v0);
                if (lam > cur_lambda + 1e-15) {
                    add_event({Event::Kind::L4, lam, g.id, c.id, v0,
                               "M_{" + g.key() + "}(a_{" + c.key() + "})"});
                }
            }
        }
        return overdue;
    }

    // ---- chains and clusters ------------------------------------------

    // Is `from` connected to `to` by a chain whose cycles (excluding `from`
    // itself) all satisfy `admissible`?  Chain steps follow nu: from a cycle
    // X, the pointer nu(X) may be picked up by any cycle containing it.
    bool chain_connected(int from, int to, const std::function<bool(int)>& admissible) const {
        std::vector<int> stack{from};
        std::set<int> visited{from};
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            int e = h.all[x].nu;
            if (e < 0) continue;
            if (h.all[to].contains(e)) return true;
            for (const Cycle& y : h.all) {
                if (!y.contains(e) || visited.count(y.id)) continue;
                if (!admissible(y.id)) continue;
                visited.insert(y.id);
                stack.push_back(y.id);
            }
        }
        return false;
    }

    // cycles connected to `target` by chains of engaged-or-active cycles
    // (previous-interval types), the cycle itself engaged-or-active, and not
    // contained in `target`
    std::vector<int> cluster_of(int target, const std::vector<CycleState>& prev_type) const {
        auto engaged_or_active = [&](int id) {
            return prev_type[id] == CycleState::engaged || prev_type[id] == CycleState::active;
        };
        std::vector<int> out;
        for (const Cycle& c : h.all) {
            if (c.id == target) continue;
            bool contained = std::includes(h.all[target].members.begin(), h.all[target].members.end(),
                                           c.members.begin(), c.members.end());
            if (contained) continue;
            if (!engaged_or_active(c.id)) continue;
            if (chain_connected(c.id, target, engaged_or_active)) out.push_back(c.id);
        }
        return out;
    }

    // ---- type updates ---------------------------------------------------

    void set_type_by_level(int cid, double level, double lambda_k) {
        const MCurve& m = curve_of(cid);
        double mv = m.eval(level);
        CycleState st;
        if (std::fabs(mv - lambda_k) <= 1e-8 * std::max(1.0, lambda_k)) st = CycleState::engaged;
        else if (mv < lambda_k) st = CycleState::active;
        else st = type[cid];  // blocked straight away: no type change
        set_type_synced(cid, st);
    }

    // promoted copies of the same member set carry the same type
    void set_type_synced(int cid, CycleState st) {
        const std::string key = h.all[cid].key();
        for (const Cycle& c : h.all)
            if (c.key() == key && (c.nu >= 0 || c.rank < h.top_rank())) type[c.id] = st;
    }

    // ---- case application ------------------------------------------------

    // releases cycle `gid` at lambda_k: members move toward q(nu) clamped by
    // the cycle's own curve; then the cluster connected to it is propagated.
    void release_cycle(int gid, double lambda_k, const std::vector<double>& q,
                       const std::vector<CycleState>& prev_type) {
        const Cycle& G = h.all[gid];
        double target = q[G.nu];
        double val = 0.0;
        for (int m : G.members) {
            double v = clamp_C(q[m], target, lambda_k, curve_of(gid));
            s[m] = v;
            val = v;
        }
        set_type_by_level(gid, val, lambda_k);
        propagate_cluster(gid, lambda_k, q, prev_type);
    }

    void propagate_cluster(int gid, double lambda_k, const std::vector<double>& q,
                           const std::vector<CycleState>& prev_type) {
        std::vector<int> cluster = cluster_of(gid, prev_type);
        std::set<int> assigned;  // equilibria with fresh s
        for (int m : h.all[gid].members) assigned.insert(m);

        std::set<int> done;
        bool progress = true;
        while (progress) {
            progress = false;
            // maximal cluster cycles whose nu points into the assigned set
            for (int cid : cluster) {
                if (done.count(cid)) continue;
                const Cycle& c = h.all[cid];
                if (!assigned.count(c.nu)) continue;
                bool is_max = true;
                for (int other : cluster) {
                    if (other == cid || done.count(other)) continue;
                    const Cycle& oc = h.all[other];
                    if (oc.members.size() > c.members.size() && assigned.count(oc.nu) &&
                        std::includes(oc.members.begin(), oc.members.end(), c.members.begin(),
                                      c.members.end()))
                        is_max = false;
                }
                if (!is_max) continue;
                // q must agree across the cycle (it was internally merged)
                double qc = q[c.members.front()];
                for (int m : c.members)
                    if (!values_equal(q[m], qc))
                        throw GenericityViolation("cluster cycle {" + c.key() +
                                                  "} has unequal left limits at lambda = " +
                                                  format_double(lambda_k));
                double val = clamp_C(qc, s[c.nu], lambda_k, curve_of(cid));
                for (int m : c.members) {
                    s[m] = val;
                    assigned.insert(m);
                }
                set_type_by_level(cid, val, lambda_k);
                done.insert(cid);
                progress = true;
            }
        }
        // remaining cluster cycles (nested below an assigned one): refresh
        // their type at the new level of their members
        for (int cid : cluster) {
            if (done.count(cid)) continue;
            const Cycle& c = h.all[cid];
            bool covered = true;
            for (int m : c.members)
                if (!assigned.count(m)) covered = false;
            if (!covered) continue;
            double v0 = s[c.members.front()];
            bool eq = true;
            for (int m : c.members)
                if (!values_equal(s[m], v0)) eq = false;
            if (eq) set_type_by_level(cid, v0, lambda_k);
        }
    }

    void apply_event(const Event& e, const std::vector<double>& q,
                     const std::vector<CycleState>& prev_type) {
        const double lambda_k = cur_lambda;
        switch (e.kind) {
            case Event::Kind::L1: {
                release_cycle(e.cycle, lambda_k, q, prev_type);
                break;
            }
            case Event::Kind::L2: {
                const Cycle& G = h.all[e.cycle];
                bool at_level = true;
                for (int m : G.members)
                    if (!values_equal(q[m], e.c)) at_level = false;
                if (prev_type[e.cycle] == CycleState::engaged && at_level)
                    release_cycle(e.cycle, lambda_k, q, prev_type);
                break;
            }
            case Event::Kind::L3: {
                const Cycle& G = h.all[e.cycle];
                const Cycle& U = h.all[e.other];
                bool at_level = true;
                for (int m : G.members)
                    if (!values_equal(q[m], e.c)) at_level = false;
                for (int m : U.members)
                    if (!values_equal(q[m], e.c)) at_level = false;
                if (!at_level) break;
                auto only_active = [&](int id) { return prev_type[id] == CycleState::active; };
                bool g_engaged = prev_type[e.cycle] == CycleState::engaged;
                bool u_engaged = prev_type[e.other] == CycleState::engaged;
                bool u_to_g = chain_connected(e.other, e.cycle, only_active);
                bool g_to_u = chain_connected(e.cycle, e.other, only_active);
                bool u_passive = prev_type[e.other] == CycleState::passive;
                bool g_passive = prev_type[e.cycle] == CycleState::passive;
                if (g_engaged && u_engaged && u_to_g && g_to_u) {
                    // (a) both equilibrate together
                    set_type_synced(e.cycle, CycleState::active);
                    set_type_synced(e.other, CycleState::active);
                } else if (g_to_u && !u_to_g && !u_passive && !g_passive) {
                    // (b) Gamma flips between engaged and active
                    set_type_synced(e.cycle, prev_type[e.cycle] == CycleState::engaged
                                                 ? CycleState::active
                                                 : CycleState::engaged);
                } else if (u_to_g && !g_to_u && !g_passive && !u_passive) {
                    // (c) = (b) with the roles interchanged
                    set_type_synced(e.other, prev_type[e.other] == CycleState::engaged
                                                 ? CycleState::active
                                                 : CycleState::engaged);
                }
                // (d): nothing changes
                break;
            }
            case Event::Kind::L4: {
                const Cycle& G = h.all[e.cycle];
                bool at_level = true;
                for (int m : G.members)
                    if (!values_equal(q[m], e.c)) at_level = false;
                double A_upsilon = merged[e.other] && has_curve(e.other)
                                       ? curve_of(e.other).eval(merge_value[e.other])
                                       : kInf;
                if (prev_type[e.cycle] == CycleState::engaged && at_level && e.lambda < A_upsilon)
                    set_type_synced(e.cycle, CycleState::active);
                break;
            }
        }
    }

    // ---- profile rule ----------------------------------------------------

    Piece piece_for(int i, double lambda_k) {
        // smallest cycle containing O_i whose s values are not all equal
        int gov = -1;
        for (int r = 0; r <= h.top_rank() && gov < 0; ++r) {
            int cid = h.cycle_at_rank(i, r);
            if (cid < 0) continue;
            const Cycle& c = h.all[cid];
            double v0 = s[c.members.front()];
            for (int m : c.members)
                if (!values_equal(s[m], v0)) {
                    gov = cid;
                    break;
                }
        }
        if (gov < 0) return Piece{Piece::Kind::constant, s[i]};

        // constituents of gov along the N-orbit, starting at O_i's own one
        const Cycle& G = h.all[gov];
        int sub = h.cycle_at_rank(i, G.rank - 1);
        std::vector<int> orbit;
        int cur = sub;
        do {
            orbit.push_back(cur);
            cur = h.all[cur].next_cycle;
        } while (cur != sub && cur >= 0 && orbit.size() <= h.all.size());

        int gate = -1;
        for (int cid : orbit) {
            if (type[cid] == CycleState::passive || type[cid] == CycleState::engaged) {
                gate = cid;
                break;
            }
        }
        if (gate < 0)
            throw LambdaGammaUnbounded(
                "all constituents of cycle {" + G.key() +
                "} are active while its levels differ (inconsistent construction) at lambda = " +
                format_double(lambda_k));
        if (type[gate] == CycleState::passive) return Piece{Piece::Kind::constant, s[i]};

        const MCurve& m = curve_of(gate);
        int sgn = m.slope_sign(s[i]);
        if (sgn == 0)
            throw GenericityViolation("M_{" + h.all[gate].key() +
                                      "} has a degenerate slope at the tracked level c = " +
                                      format_double(s[i]));
        Piece p;
        p.kind = Piece::Kind::track;
        p.curve = h.all[gate].key();
        p.anchor = s[i];
        p.dir = sgn;
        return p;
    }

    // ---- main loop ---------------------------------------------------

    ProfileSet run() {
        piece.assign(n, {});
        type.assign(h.all.size(), CycleState::passive);
        merged.assign(h.all.size(), false);
        merge_lambda.assign(h.all.size(), 0.0);
        merge_value.assign(h.all.size(), 0.0);
        s = in.g;
        cur_lambda = 0.0;

        ps.n = n;
        ps.g_min = in.g_min;
        ps.g_max = in.g_max;
        ps.curves = in.curves;
        ps.profiles.assign(n, {});
        ps.breakpoints.push_back({0.0, BreakTag::zero, "lambda_0"});

        schedule_static_events();
        auto overdue = detect_merges();
        // a cycle already past its own release level at lambda = 0 cannot
        // occur for positive rates; treat defensively as immediate release
        for (int cid : overdue) release_cycle(cid, 0.0, s, type);

        // initial interval: all passive, profiles constant at g
        for (int i = 0; i < n; ++i) piece[i] = Piece{Piece::Kind::constant, s[i]};
        record_interval_state();

        int guard = 0;
        const int guard_max = 4096;
        while (!pending.empty()) {
            if (++guard > guard_max)
                throw LambdaGammaUnbounded("sweep did not terminate (event cascade)");
            Event e = pop_next();
            // left limits at the incoming breakpoint
            std::vector<double> q(n);
            for (int i = 0; i < n; ++i) q[i] = ps.eval_piece(piece[i], e.lambda);
            std::vector<CycleState> prev_type = type;

            cur_lambda = e.lambda;
            s = q;
            apply_event(e, q, prev_type);

            ps.breakpoints.push_back({e.lambda, tag_of(e.kind), e.label});
            ps.ledger.q_at.push_back(q);
            ps.ledger.s_at.push_back(s);

            for (int i = 0; i < n; ++i) piece[i] = piece_for(i, e.lambda);
            for (int i = 0; i < n; ++i) ps.profiles[i].push_back(piece[i]);
            record_interval_state();

            auto late = detect_merges();
            for (int cid : late) {
                // release level already passed when the group formed: the
                // release happens at this same breakpoint
                std::vector<double> q2 = s;
                release_cycle(cid, cur_lambda, q2, type);
                for (int i = 0; i < n; ++i) piece[i] = piece_for(i, cur_lambda);
                for (int i = 0; i < n; ++i) ps.profiles[i].back() = piece[i];
                ps.ledger.s_at.back() = s;
                interval_state_log.pop_back();
                record_interval_state();
            }
        }

        // all groups must have merged; otherwise some lambda_Gamma is not finite
        double v0 = s[0];
        for (int i = 1; i < n; ++i)
            if (!values_equal(s[i], v0))
                throw LambdaGammaUnbounded("profiles did not reach a common value (lambda_Gamma = inf)");

        ps.breakpoints.push_back({kInf, BreakTag::infinity, "lambda_m"});
        // ledger rows for the inf sentinel
        ps.ledger.q_at.push_back(s);
        ps.ledger.s_at.push_back(s);
        // initial breakpoint rows
        ps.ledger.q_at.insert(ps.ledger.q_at.begin(), in.g);
        ps.ledger.s_at.insert(ps.ledger.s_at.begin(), in.g);

        finalize_profiles();
        return ps;
    }

    std::vector<std::map<std::string, CycleState>> interval_state_log;

    void record_interval_state() {
        std::map<std::string, CycleState> st;
        for (const Cycle& c : h.all)
            if (has_curve(c.id)) st[c.key()] = type[c.id];
        interval_state_log.push_back(std::move(st));
    }

    void finalize_profiles() {
        // pieces were appended per interval; the initial interval's pieces
        // are the g constants
        for (int i = 0; i < n; ++i)
            ps.profiles[i].insert(ps.profiles[i].begin(), Piece{Piece::Kind::constant, in.g[i]});
        ps.ledger.interval_states = interval_state_log;
        for (const Cycle& c : h.all)
            if (has_curve(c.id)) {
                std::string k = c.key();
                if (std::find(ps.ledger.cycle_keys.begin(), ps.ledger.cycle_keys.end(), k) ==
                    ps.ledger.cycle_keys.end())
                    ps.ledger.cycle_keys.push_back(k);
            }
        // merge levels in discovery order for multi-member cycles
        std::vector<std::pair<double, double>> found;  // lambda, value
        for (const Cycle& c : h.all) {
            if (c.members.size() < 2 || !merged[c.id]) continue;
            bool dup = false;
            for (auto& f : found)
                if (std::fabs(f.first - merge_lambda[c.id]) < 1e-12 &&
                    std::fabs(f.second - merge_value[c.id]) < 1e-12)
                    dup = true;
            if (!dup) found.push_back({merge_lambda[c.id], merge_value[c.id]});
        }
        std::sort(found.begin(), found.end());
        const char* names[] = {"c*", "c**", "c***", "c****", "c*****"};
        for (size_t i = 0; i < found.size(); ++i) {
            std::string label = i < 5 ? names[i] : ("c*x" + std::to_string(i + 1));
            ps.merge_levels.push_back({label, found[i].first, found[i].second});
        }
    }
};

}  // namespace

ProfileSet general_sweep(const SweepInputs& in) {
    if (in.g.size() != static_cast<size_t>(in.hierarchy.n_equilibria()))
        throw ConfigError("general_sweep: g values do not match the hierarchy size");
    SweepEngine eng(in);
    return eng.run();
}

}  // namespace metastable
