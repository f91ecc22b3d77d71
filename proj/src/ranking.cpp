#include "rankconsol/ranking.hpp"

#include <algorithm>
#include <numeric>

namespace rankconsol {

namespace {

std::uint64_t pair_key(int i, int j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

void check_permutation(const std::vector<int>& rank_of) {
    const int n = static_cast<int>(rank_of.size());
    std::vector<bool> seen(rank_of.size() + 1, false);
    for (int r : rank_of) {
        if (r < 1 || r > n || seen[r])
            throw std::invalid_argument("rank_of is not a permutation of 1..n");
        seen[r] = true;
    }
}

}  // namespace

Ranking Ranking::from_rank_of(std::string query_id, std::vector<int> rank_of) {
    check_permutation(rank_of);
    Ranking rk;
    rk.query_id = std::move(query_id);
    rk.sorted_indices.resize(rank_of.size());
    for (std::size_t d = 0; d < rank_of.size(); ++d)
        rk.sorted_indices[rank_of[d] - 1] = static_cast<int>(d);
    rk.rank_of = std::move(rank_of);
    return rk;
}

Ranking Ranking::from_sorted(std::string query_id, std::vector<int> sorted_indices) {
    const int n = static_cast<int>(sorted_indices.size());
    std::vector<int> rank_of(sorted_indices.size(), 0);
    for (int r = 0; r < n; ++r) {
        int d = sorted_indices[r];
        if (d < 0 || d >= n || rank_of[d] != 0)
            throw std::invalid_argument("sorted_indices is not a permutation of 0..n-1");
        rank_of[d] = r + 1;
    }
    Ranking rk;
    rk.query_id = std::move(query_id);
    rk.rank_of = std::move(rank_of);
    rk.sorted_indices = std::move(sorted_indices);
    return rk;
}

Verdict MemoizingOracle::compare(const CandidateList& list, int i, int j) {
    int a = i, b = j;
    bool swapped = false;
    if (a > b) {
        std::swap(a, b);
        swapped = true;
    }
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto qit = cache_.find(list.query_id);
        if (qit != cache_.end()) {
            auto pit = qit->second.find(pair_key(a, b));
            if (pit != qit->second.end())
                return swapped ? flipped(pit->second) : pit->second;
        }
    }
    // Ask outside the lock; concurrent duplicate asks are acceptable, the
    // backend is required to be deterministic per pair.
    Verdict v = backend_.compare(list, a, b);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto [pit, inserted] = cache_[list.query_id].emplace(pair_key(a, b), v);
        if (inserted) ++backend_calls_;
        v = pit->second;
    }
    return swapped ? flipped(v) : v;
}

std::size_t MemoizingOracle::backend_calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return backend_calls_;
}

ScoreVector win_count_scores(const PreferenceSet& prefs) {
    ScoreVector sv;
    sv.query_id = prefs.query_id();
    sv.kind = ScoreKind::PrpScore;
    sv.values.assign(static_cast<std::size_t>(prefs.n_docs()), 0.0);
    for (const Preference& p : prefs.prefs()) {
        switch (p.verdict) {
            case Verdict::IWins: sv.values[p.i] += 1.0; break;
            case Verdict::JWins: sv.values[p.j] += 1.0; break;
            case Verdict::Inconsistent:
                sv.values[p.i] += 0.5;
                sv.values[p.j] += 0.5;
                break;
        }
    }
    return sv;
}

Ranking rank_by_scores(const ScoreVector& scores, const Ranking& tie_break) {
    if (scores.values.size() != tie_break.rank_of.size())
        throw std::invalid_argument("scores and tie_break length mismatch");
    std::vector<int> idx(scores.values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (scores.values[a] != scores.values[b])
            return scores.values[a] > scores.values[b];
        return tie_break.rank_of[a] < tie_break.rank_of[b];
    });
    return Ranking::from_sorted(scores.query_id, std::move(idx));
}

SlideResult sliding_window_pairs(const CandidateList& list, const Ranking& initial,
                                 int k, PreferenceOracle& oracle) {
    const int n = static_cast<int>(list.size());
    if (initial.size() != list.size())
        throw std::invalid_argument("initial ranking does not match list size");
    if (k < 1 || k > n) throw std::invalid_argument("pass count k must be in [1, n]");

    std::vector<int> order = initial.sorted_indices;  // position -> doc index
    PreferenceSet prefs(list.query_id, n);
    std::unordered_map<std::uint64_t, Verdict> cache;

    // Verdict for (upper, lower); only cache misses reach the oracle.
    auto duel = [&](int upper, int lower) -> Verdict {
        int a = upper, b = lower;
        bool swapped = false;
        if (a > b) {
            std::swap(a, b);
            swapped = true;
        }
        auto it = cache.find(pair_key(a, b));
        if (it == cache.end()) {
            Verdict v = oracle.compare(list, a, b);
            it = cache.emplace(pair_key(a, b), v).first;
            prefs.add(a, b, v);
        }
        return swapped ? flipped(it->second) : it->second;
    };

    for (int pass = 0; pass < k; ++pass) {
        for (int pos = n - 2; pos >= 0; --pos) {
            // Swap only when the lower doc wins; Inconsistent keeps the order.
            if (duel(order[pos], order[pos + 1]) == Verdict::JWins)
                std::swap(order[pos], order[pos + 1]);
        }
    }

    SlideResult out{std::move(prefs), Ranking::from_sorted(list.query_id, std::move(order))};
    return out;
}

}  // namespace rankconsol
