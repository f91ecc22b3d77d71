#pragma once

// Pairwise-preference aggregation: win-count scores, score-based rankings,
// and the sliding-window bubble sort that samples adjacent-pair judgments
// from an oracle.

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankconsol/domain.hpp"

namespace rankconsol {

// A total order over one query's docs. rank_of[d] in 1..n (1 = best);
// sorted_indices[r-1] is the doc at rank r. The two views stay consistent.
struct Ranking {
    std::string query_id;
    std::vector<int> rank_of;
    std::vector<int> sorted_indices;

    static Ranking from_rank_of(std::string query_id, std::vector<int> rank_of);
    static Ranking from_sorted(std::string query_id, std::vector<int> sorted_indices);

    std::size_t size() const { return rank_of.size(); }
};

// Raised by oracles that fail to produce a verdict; carries the pair so
// callers can report exactly which comparison broke.
class OracleError : public std::runtime_error {
public:
    OracleError(std::string query_id, int i, int j, const std::string& what)
        : std::runtime_error(what), query_id(std::move(query_id)), i(i), j(j) {}

    std::string query_id;
    int i;
    int j;
};

// Answers "which of docs i, j better matches the query". Implementations
// must be antisymmetric: compare(list, j, i) is the flipped verdict.
class PreferenceOracle {
public:
    virtual ~PreferenceOracle() = default;
    virtual Verdict compare(const CandidateList& list, int i, int j) = 0;
};

// Caching wrapper keyed by (query_id, unordered pair). Thread-safe; counts
// how many comparisons reached the wrapped backend.
class MemoizingOracle final : public PreferenceOracle {
public:
    explicit MemoizingOracle(PreferenceOracle& backend) : backend_(backend) {}

    Verdict compare(const CandidateList& list, int i, int j) override;
    std::size_t backend_calls() const;

private:
    PreferenceOracle& backend_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::unordered_map<std::uint64_t, Verdict>> cache_;
    std::size_t backend_calls_ = 0;
};

// Win counting: one point per victory, half a point to each member of an
// Inconsistent pair. Missing pairs contribute nothing.
ScoreVector win_count_scores(const PreferenceSet& prefs);

// Descending sort on scores; exact ties fall back to tie_break's order.
Ranking rank_by_scores(const ScoreVector& scores, const Ranking& tie_break);

struct SlideResult {
    PreferenceSet prefs;  // every distinct pair the sort queried
    Ranking ranking;
};

// k bottom-to-top bubble passes with an adjacent comparison window. After
// pass p the doc at position p can no longer change (consistent oracle), so
// k passes pin down the top-k prefix. Repeated pairs are answered from a
// per-call cache, so the oracle sees each pair at most once.
SlideResult sliding_window_pairs(const CandidateList& list, const Ranking& initial,
                                 int k, PreferenceOracle& oracle);

}  // namespace rankconsol
