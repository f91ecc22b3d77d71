#pragma once

// Shared fixture builders. Tests construct small candidate lists constantly;
// these keep the invariants (alignment, normalization, rank permutation)
// satisfied so the tests read as data.

#include <numeric>
#include <string>
#include <vector>

#include "rankconsol/domain.hpp"
#include "rankconsol/ranking.hpp"

namespace rctest {

using namespace rankconsol;

inline Ranking identity_ranking(const std::string& qid, int n) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    return Ranking::from_sorted(qid, idx);
}

// Labeled list with doc ids d1..dn and initial_rank 1..n in doc order.
inline CandidateList make_list(const std::string& qid, const std::vector<int>& labels,
                               int max_grade = -1) {
    CandidateList cl;
    cl.query_id = qid;
    const int n = static_cast<int>(labels.size());
    for (int d = 0; d < n; ++d) {
        cl.docs.push_back({"d" + std::to_string(d + 1), ""});
        cl.initial_rank.push_back(d + 1);
    }
    cl.labels = labels;
    cl.max_grade = max_grade;
    if (max_grade < 0) {
        cl.max_grade = 1;
        for (int l : labels) cl.max_grade = std::max(cl.max_grade, l);
    }
    cl.normalized_labels = normalize_labels(cl.labels, cl.max_grade);
    return cl;
}

// Unlabeled variant: n docs, no labels.
inline CandidateList make_unlabeled(const std::string& qid, int n) {
    CandidateList cl;
    cl.query_id = qid;
    for (int d = 0; d < n; ++d) {
        cl.docs.push_back({"d" + std::to_string(d + 1), ""});
        cl.initial_rank.push_back(d + 1);
    }
    return cl;
}

}  // namespace rctest
