#include "rankconsol/selection.hpp"

#include <algorithm>
#include <stdexcept>

namespace rankconsol {

const char* to_string(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::Allpair: return "allpair";
        case SelectionMethod::SlideWin: return "slidewin";
        case SelectionMethod::TopAll: return "topall";
    }
    return "allpair";
}

SelectionMethod selection_method_from_string(const std::string& s) {
    if (s == "allpair") return SelectionMethod::Allpair;
    if (s == "slidewin") return SelectionMethod::SlideWin;
    if (s == "topall") return SelectionMethod::TopAll;
    throw std::invalid_argument("unknown selection method: " + s);
}

SelectionResult select_allpair(PreferenceOracle& oracle, const CandidateList& list) {
    const int n = static_cast<int>(list.size());
    PreferenceSet prefs(list.query_id, n);
    std::size_t asked = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            prefs.add(i, j, oracle.compare(list, i, j));
            ++asked;
        }
    }
    ScoreVector wins = win_count_scores(prefs);
    SelectionResult res{std::move(prefs), constraints_from_scores(wins), asked};
    return res;
}

SelectionResult select_slidewin(PreferenceOracle& oracle, const CandidateList& list,
                                const Ranking& initial, int k) {
    SlideResult slide = sliding_window_pairs(list, initial, k, oracle);
    std::size_t asked = slide.prefs.size();
    SelectionResult res{std::move(slide.prefs),
                        ConstraintSet{}, asked};
    res.constraints = constraints_from_preferences(res.prefs);
    return res;
}

SelectionResult select_topall(PreferenceOracle& oracle, const CandidateList& list,
                              const ScoreVector& base, const Ranking& tie_break, int k) {
    const int n = static_cast<int>(list.size());
    if (base.values.size() != list.size())
        throw std::invalid_argument("base scores do not match list size");
    if (k < 1 || k > n) throw std::invalid_argument("top-k must be in [1, n]");

    Ranking by_base = rank_by_scores(base, tie_break);
    std::vector<bool> in_top(n, false);
    for (int r = 0; r < k; ++r) in_top[by_base.sorted_indices[r]] = true;

    PreferenceSet prefs(list.query_id, n);
    std::size_t asked = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (!in_top[i] && !in_top[j]) continue;
            prefs.add(i, j, oracle.compare(list, i, j));
            ++asked;
        }
    }
    SelectionResult res{std::move(prefs), ConstraintSet{}, asked};
    res.constraints = constraints_from_preferences(res.prefs);
    return res;
}

}  // namespace rankconsol
