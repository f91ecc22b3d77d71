#include "rankconsol/consolidation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_set>

namespace rankconsol {

namespace {

std::uint64_t pair_key(int i, int j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

std::string format_cycle(const std::vector<int>& cycle) {
    std::ostringstream os;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        if (i) os << " -> ";
        os << cycle[i];
    }
    return os.str();
}

void check_constraints(const std::vector<double>& base, const ConstraintSet& cs) {
    const int n = static_cast<int>(base.size());
    if (cs.n_docs != n)
        throw std::invalid_argument("constraint set sized for " + std::to_string(cs.n_docs) +
                                    " docs, base has " + std::to_string(n));
    for (double v : base)
        if (!std::isfinite(v)) throw std::invalid_argument("base scores must be finite");
    for (const Constraint& c : cs.constraints)
        if (c.i < 0 || c.j < 0 || c.i >= n || c.j >= n || c.i == c.j)
            throw std::invalid_argument("constraint (" + std::to_string(c.i) + "," +
                                        std::to_string(c.j) + ") out of range");
}

std::vector<Constraint> dedupe(const std::vector<Constraint>& in) {
    std::vector<Constraint> out;
    out.reserve(in.size());
    std::unordered_set<std::uint64_t> seen;
    for (const Constraint& c : in)
        if (seen.insert(pair_key(c.i, c.j)).second) out.push_back(c);
    return out;
}

// Iterative DFS; throws on the first back edge with the closed cycle.
void require_acyclic(const std::string& query_id, int n, const std::vector<Constraint>& con) {
    std::vector<std::vector<int>> adj(n);
    for (const Constraint& c : con) adj[c.i].push_back(c.j);

    enum : unsigned char { White, Grey, Black };
    std::vector<unsigned char> color(n, White);
    std::vector<int> parent(n, -1);
    struct Frame {
        int node;
        std::size_t next = 0;
    };
    std::vector<Frame> stack;
    for (int root = 0; root < n; ++root) {
        if (color[root] != White) continue;
        color[root] = Grey;
        stack.push_back({root});
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < adj[f.node].size()) {
                int to = adj[f.node][f.next++];
                if (color[to] == Grey) {
                    std::vector<int> cycle{to};
                    for (int v = f.node; v != to; v = parent[v]) cycle.push_back(v);
                    cycle.push_back(to);
                    std::reverse(cycle.begin() + 1, cycle.end() - 1);
                    throw CycleError(query_id, std::move(cycle));
                }
                if (color[to] == White) {
                    color[to] = Grey;
                    parent[to] = f.node;
                    stack.push_back({to});
                }
            } else {
                color[f.node] = Black;
                stack.pop_back();
            }
        }
    }
}

double max_violation_of(const std::vector<double>& x, const std::vector<Constraint>& con) {
    double worst = 0.0;
    for (const Constraint& c : con) worst = std::max(worst, x[c.j] - x[c.i]);
    return worst;
}

double objective_of(const std::vector<double>& x, const std::vector<double>& base) {
    double obj = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - base[i];
        obj += d * d;
    }
    return obj;
}

struct Dsu {
    std::vector<int> parent;

    explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    }

    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Snap a converged iterate to the exact projection it is approaching. The
// projection always has pooled-means structure: docs connected by active
// constraints share one value, the mean of base over the pool. Pools are
// read off the iterate (slack <= act_tol), so the snap is trusted only when
// it barely moves anything, stays feasible, and does not worsen the
// objective; otherwise the raw iterate is kept.
std::optional<std::vector<double>> try_snap(const std::vector<double>& base,
                                            const std::vector<Constraint>& con,
                                            const std::vector<double>& x, double scale) {
    const double act_tol = 1e-9 * scale;
    const int n = static_cast<int>(base.size());
    Dsu dsu(n);
    for (const Constraint& c : con)
        if (x[c.i] - x[c.j] <= act_tol) dsu.unite(c.i, c.j);

    std::vector<double> sum(n, 0.0);
    std::vector<int> count(n, 0);
    for (int v = 0; v < n; ++v) {
        int r = dsu.find(v);
        sum[r] += base[v];
        count[r] += 1;
    }
    std::vector<double> z(n);
    for (int v = 0; v < n; ++v) {
        int r = dsu.find(v);
        z[v] = sum[r] / count[r];
        if (std::abs(z[v] - x[v]) > 1e-7 * scale) return std::nullopt;
    }

    if (max_violation_of(z, con) > 1e-12 * scale) return std::nullopt;
    double obj_x = objective_of(x, base);
    double obj_z = objective_of(z, base);
    if (obj_z > obj_x + 1e-8 * (1.0 + obj_x)) return std::nullopt;
    return z;
}

ConsolidationResult make_result(const ScoreVector& base, std::vector<double> x,
                                SolverStats stats) {
    ConsolidationResult res;
    res.delta.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) res.delta[i] = x[i] - base.values[i];
    res.objective = 0.0;
    for (double d : res.delta) res.objective += d * d;
    res.adjusted.query_id = base.query_id;
    res.adjusted.kind = ScoreKind::Consolidated;
    res.adjusted.values = std::move(x);
    res.stats = stats;
    return res;
}

}  // namespace

CycleError::CycleError(std::string query_id_in, std::vector<int> cycle_in)
    : std::runtime_error("contradictory constraint cycle: " + format_cycle(cycle_in)),
      query_id(std::move(query_id_in)),
      cycle(std::move(cycle_in)) {}

NonConvergence::NonConvergence(std::string query_id_in, double residual_in,
                               std::size_t cycles_in)
    : std::runtime_error("projection did not converge after " + std::to_string(cycles_in) +
                         " cycles (residual " + std::to_string(residual_in) + ")"),
      query_id(std::move(query_id_in)),
      residual(residual_in),
      cycles(cycles_in) {}

ConstraintSet constraints_from_scores(const ScoreVector& s) {
    const int n = static_cast<int>(s.values.size());
    for (double v : s.values)
        if (!std::isfinite(v)) throw std::invalid_argument("scores must be finite");
    ConstraintSet cs;
    cs.query_id = s.query_id;
    cs.n_docs = n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && s.values[i] > s.values[j]) cs.constraints.push_back({i, j});
    return cs;
}

ConstraintSet constraints_from_preferences(const PreferenceSet& prefs) {
    ConstraintSet cs;
    cs.query_id = prefs.query_id();
    cs.n_docs = prefs.n_docs();
    for (const Preference& p : prefs.prefs()) {
        if (p.verdict == Verdict::IWins) cs.constraints.push_back({p.i, p.j});
        else if (p.verdict == Verdict::JWins) cs.constraints.push_back({p.j, p.i});
    }
    return cs;
}

ConsolidationResult solve_projection(const ScoreVector& base, const ConstraintSet& cs,
                                     const SolverConfig& cfg) {
    check_constraints(base.values, cs);
    const std::vector<Constraint> con = dedupe(cs.constraints);
    const int n = static_cast<int>(base.values.size());
    require_acyclic(cs.query_id, n, con);

    const std::vector<double>& y = base.values;
    const double tol = cfg.feasibility_tol;

    if (max_violation_of(y, con) <= tol) {
        SolverStats stats;
        stats.max_violation = max_violation_of(y, con);
        return make_result(base, y, stats);
    }

    double scale = 1.0;
    for (double v : y) scale = std::max(scale, std::abs(v));

    std::vector<double> x = y;
    std::vector<double> u(con.size(), 0.0);  // scalar correction per half-space
    const std::size_t cap =
        cfg.max_cycles ? cfg.max_cycles
                       : 100 * static_cast<std::size_t>(std::max(n, 1)) *
                             std::max<std::size_t>(con.size(), 1);

    SolverStats stats;
    // Movement below this floor means the iterate has effectively settled;
    // the remaining distance to the projection is orders of magnitude below
    // every tolerance in use.
    const double move_floor = 1e-13 * scale;

    while (true) {
        if (stats.cycles >= cap)
            throw NonConvergence(cs.query_id, max_violation_of(x, con), stats.cycles);
        ++stats.cycles;

        double move = 0.0;
        for (std::size_t c = 0; c < con.size(); ++c) {
            const int i = con[c].i, j = con[c].j;
            const double wi = x[i] - u[c];
            const double wj = x[j] + u[c];
            double ni, nj, nu;
            if (wi >= wj) {
                ni = wi;
                nj = wj;
                nu = 0.0;
            } else {
                const double mid = 0.5 * (wi + wj);
                ni = mid;
                nj = mid;
                nu = 0.5 * (wj - wi);
            }
            move = std::max({move, std::abs(ni - x[i]), std::abs(nj - x[j])});
            x[i] = ni;
            x[j] = nj;
            u[c] = nu;
        }

        if (move <= move_floor && max_violation_of(x, con) <= tol) break;
    }

    if (auto z = try_snap(y, con, x, scale)) {
        x = std::move(*z);
        stats.polished = true;
    }

    stats.max_violation = max_violation_of(x, con);
    if (stats.max_violation > tol)
        throw NonConvergence(cs.query_id, stats.max_violation, stats.cycles);
    return make_result(base, std::move(x), stats);
}

ConsolidationResult solve_projection_total_order(const ScoreVector& base,
                                                 const Ranking& order) {
    if (base.values.size() != order.size())
        throw std::invalid_argument("base and order length mismatch");
    for (double v : base.values)
        if (!std::isfinite(v)) throw std::invalid_argument("base scores must be finite");

    const std::size_t n = base.values.size();
    std::vector<double> along(n);
    for (std::size_t r = 0; r < n; ++r) along[r] = base.values[order.sorted_indices[r]];

    std::vector<double> fitted =
        isotonic_fit(along, std::vector<double>(n, 1.0), /*increasing=*/false);

    std::vector<double> x(n);
    for (std::size_t r = 0; r < n; ++r) x[order.sorted_indices[r]] = fitted[r];

    SolverStats stats;
    for (std::size_t r = 0; r + 1 < n; ++r)
        stats.max_violation = std::max(stats.max_violation, fitted[r + 1] - fitted[r]);
    stats.max_violation = std::max(stats.max_violation, 0.0);
    return make_result(base, std::move(x), stats);
}

std::vector<double> isotonic_fit(const std::vector<double>& values,
                                 const std::vector<double>& weights, bool increasing) {
    if (values.size() != weights.size())
        throw std::invalid_argument("values and weights length mismatch");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("weights must be strictly positive");

    if (!increasing) {
        std::vector<double> neg(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) neg[i] = -values[i];
        std::vector<double> fit = isotonic_fit(neg, weights, true);
        for (double& v : fit) v = -v;
        return fit;
    }

    struct Block {
        double sum_w;
        double sum_wy;
        std::size_t count;
        double mean() const { return sum_wy / sum_w; }
    };
    std::vector<Block> stack;
    stack.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        stack.push_back({weights[i], weights[i] * values[i], 1});
        while (stack.size() >= 2 &&
               stack[stack.size() - 1].mean() < stack[stack.size() - 2].mean()) {
            Block top = stack.back();
            stack.pop_back();
            stack.back().sum_w += top.sum_w;
            stack.back().sum_wy += top.sum_wy;
            stack.back().count += top.count;
        }
    }

    std::vector<double> out;
    out.reserve(values.size());
    for (const Block& b : stack) out.insert(out.end(), b.count, b.mean());
    return out;
}

std::vector<double> brute_force_projection(const std::vector<double>& base,
                                           const ConstraintSet& cs) {
    const int n = static_cast<int>(base.size());
    if (n > 8) throw std::invalid_argument("brute force reference limited to n <= 8");
    check_constraints(base, cs);
    const std::vector<Constraint> con = dedupe(cs.constraints);
    const std::size_t m = con.size();
    if (m > 22) throw std::invalid_argument("brute force reference limited to 22 constraints");

    double scale = 1.0;
    for (double v : base) scale = std::max(scale, std::abs(v));
    const double feas_eps = 1e-12 * scale;

    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<double> best;
    std::vector<double> z(n);
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        Dsu dsu(n);
        for (std::size_t b = 0; b < m; ++b)
            if (mask & (1u << b)) dsu.unite(con[b].i, con[b].j);

        double sum[8] = {0};
        int count[8] = {0};
        for (int v = 0; v < n; ++v) {
            int r = dsu.find(v);
            sum[r] += base[v];
            count[r] += 1;
        }
        for (int v = 0; v < n; ++v) {
            int r = dsu.find(v);
            z[v] = sum[r] / count[r];
        }

        bool feasible = true;
        for (const Constraint& c : con) {
            if (z[c.i] < z[c.j] - feas_eps) {
                feasible = false;
                break;
            }
        }
        if (!feasible) continue;

        double obj = objective_of(z, base);
        if (obj < best_obj) {
            best_obj = obj;
            best = z;
        }
    }
    return best;
}

}  // namespace rankconsol
