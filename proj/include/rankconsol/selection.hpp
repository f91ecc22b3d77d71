#pragma once

// Constraint regimes: Allpair queries every pair and constrains by win-count
// order; SlideWin queries the pairs a bubble sort touches; TopAll queries
// the top-k (by base score) against everything, top-k included.

#include <string>

#include "rankconsol/consolidation.hpp"
#include "rankconsol/domain.hpp"
#include "rankconsol/ranking.hpp"

namespace rankconsol {

enum class SelectionMethod {
    Allpair,
    SlideWin,
    TopAll,
};

const char* to_string(SelectionMethod m);
SelectionMethod selection_method_from_string(const std::string& s);

struct SelectionResult {
    PreferenceSet prefs;
    ConstraintSet constraints;
    std::size_t pairs_queried = 0;  // distinct oracle comparisons issued
};

// All n(n-1)/2 pairs; constraints follow the sign of win-count differences.
SelectionResult select_allpair(PreferenceOracle& oracle, const CandidateList& list);

// k bubble passes from `initial`; the queried verdicts become constraints
// directly. At most k(n-1) oracle calls.
SelectionResult select_slidewin(PreferenceOracle& oracle, const CandidateList& list,
                                const Ranking& initial, int k);

// Top-k docs by `base` (ties broken by `tie_break`) against every doc,
// intra-top-k pairs included: exactly k(n-k) + k(k-1)/2 calls.
SelectionResult select_topall(PreferenceOracle& oracle, const CandidateList& list,
                              const ScoreVector& base, const Ranking& tie_break, int k);

}  // namespace rankconsol
