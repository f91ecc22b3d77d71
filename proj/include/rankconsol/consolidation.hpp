#pragma once

// Minimal-L2 adjustment of per-doc scores under pairwise order constraints:
// find delta minimizing sum(delta^2) subject to
// (base_i + delta_i) >= (base_j + delta_j) for every constraint (i, j).
// This is the Euclidean projection of base onto a convex polyhedron, so the
// optimum is unique. Solvers: an exact O(n) pool-adjacent-violators path for
// total orders, a cyclic-projection solver for arbitrary acyclic constraint
// sets, and an exhaustive active-set reference for small instances.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankconsol/domain.hpp"
#include "rankconsol/ranking.hpp"

namespace rankconsol {

// Directed requirement: adjusted score of i must be >= adjusted score of j.
struct Constraint {
    int i = 0;
    int j = 0;
};

struct ConstraintSet {
    std::string query_id;
    int n_docs = 0;
    std::vector<Constraint> constraints;
};

struct SolverConfig {
    double feasibility_tol = 1e-9;
    std::size_t max_cycles = 0;  // 0 = 100 * n_docs * |constraints|
};

struct SolverStats {
    std::size_t cycles = 0;       // full passes over the constraint list
    double max_violation = 0.0;   // residual max(adjusted_j - adjusted_i, 0)
    bool polished = false;        // exact pooled solution replaced the iterate
};

struct ConsolidationResult {
    std::vector<double> delta;
    ScoreVector adjusted;  // kind=Consolidated, base + delta
    double objective = 0.0;
    SolverStats stats;
};

// A directed cycle in the constraint graph. Under weak inequalities a cycle
// would merely force equality, but it can only come from contradictory
// upstream verdicts, so it is treated as an input error.
class CycleError : public std::runtime_error {
public:
    CycleError(std::string query_id, std::vector<int> cycle);

    std::string query_id;
    std::vector<int> cycle;  // doc indices; front() == back()
};

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(std::string query_id, double residual, std::size_t cycles);

    std::string query_id;
    double residual;
    std::size_t cycles;
};

// One constraint per ordered pair with a strictly larger score; ties are
// left unconstrained.
ConstraintSet constraints_from_scores(const ScoreVector& s);

// Directional verdicts become constraints verbatim; Inconsistent pairs are
// skipped. No transitive closure is added.
ConstraintSet constraints_from_preferences(const PreferenceSet& prefs);

// Projection onto the constraint polyhedron via cyclic projections with
// correction terms, then an exact pooling refinement. Feasible inputs
// return delta = 0 without iterating.
ConsolidationResult solve_projection(const ScoreVector& base, const ConstraintSet& cs,
                                     const SolverConfig& cfg = {});

// Exact projection when the constraints are "non-increasing along a total
// order": isotonic regression by pool-adjacent-violators.
ConsolidationResult solve_projection_total_order(const ScoreVector& base, const Ranking& order);

// Weighted least-squares fit of a monotone sequence to `values` (weights
// strictly positive). Returns the fitted values.
std::vector<double> isotonic_fit(const std::vector<double>& values,
                                 const std::vector<double>& weights, bool increasing);

// Reference solver: enumerates every subset of constraints as the active
// set, merges each active subset into equal-value groups with the group
// means, and returns the feasible candidate with the smallest objective.
// Exponential in |constraints|; rejects n > 8.
std::vector<double> brute_force_projection(const std::vector<double>& base,
                                           const ConstraintSet& cs);

}  // namespace rankconsol
