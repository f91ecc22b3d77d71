#include "rankconsol/oracles.hpp"

#include <algorithm>
#include <stdexcept>

#include "rankconsol/random.hpp"

namespace rankconsol {

namespace {

void check_config(const SyntheticOracleConfig& cfg) {
    if (!(cfg.relevance_noise_sigma >= 0.0))
        throw std::invalid_argument("relevance_noise_sigma must be >= 0");
    if (!(cfg.preference_flip_prob >= 0.0 && cfg.preference_flip_prob <= 0.5))
        throw std::invalid_argument("preference_flip_prob must be in [0, 0.5]");
    if (!(cfg.tie_prob >= 0.0 && cfg.tie_prob <= 1.0))
        throw std::invalid_argument("tie_prob must be in [0, 1]");
}

void check_labeled(const CandidateList& list) {
    if (list.normalized_labels.size() != list.size())
        throw std::invalid_argument("query " + list.query_id +
                                    " has no normalized labels; synthetic oracles need them");
}

}  // namespace

ScoreVector synthetic_relevance(const SyntheticOracleConfig& cfg, const CandidateList& list) {
    check_config(cfg);
    check_labeled(list);
    ScoreVector out{list.query_id, ScoreKind::Relevance, {}};
    out.values.reserve(list.size());
    for (std::size_t d = 0; d < list.size(); ++d) {
        DetRng rng(hash_seed(cfg.seed, std::string_view("rel"), std::string_view(list.query_id),
                             std::string_view(list.docs[d].doc_id)));
        const double noisy =
            list.normalized_labels[d] + cfg.relevance_noise_sigma * rng.gaussian();
        out.values.push_back(std::clamp(noisy, 0.0, 1.0));
    }
    return out;
}

Verdict synthetic_preference(const SyntheticOracleConfig& cfg, const CandidateList& list,
                             int i, int j) {
    check_config(cfg);
    check_labeled(list);
    const int n = static_cast<int>(list.size());
    if (i < 0 || i >= n || j < 0 || j >= n || i == j)
        throw std::out_of_range("bad pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                ") for query " + list.query_id);

    // One draw per unordered pair: canonicalize, judge, flip back if needed.
    const int a = std::min(i, j);
    const int b = std::max(i, j);
    DetRng rng(hash_seed(cfg.seed, std::string_view("pref"), std::string_view(list.query_id),
                         std::string_view(list.docs[a].doc_id),
                         std::string_view(list.docs[b].doc_id)));

    const double la = list.normalized_labels[a];
    const double lb = list.normalized_labels[b];
    Verdict canonical;
    if (la == lb) {
        if (rng.uniform() < cfg.tie_prob) {
            canonical = Verdict::Inconsistent;
        } else {
            canonical = rng.uniform() < 0.5 ? Verdict::IWins : Verdict::JWins;
        }
    } else {
        const Verdict correct = la > lb ? Verdict::IWins : Verdict::JWins;
        const double u = rng.uniform();
        if (u < cfg.preference_flip_prob) {
            canonical = flipped(correct);
        } else if (u < cfg.preference_flip_prob + cfg.tie_prob / 2.0) {
            canonical = Verdict::Inconsistent;
        } else {
            canonical = correct;
        }
    }
    return i == a ? canonical : flipped(canonical);
}

CachedPreferenceOracle::CachedPreferenceOracle(const Experiment& exp) {
    for (std::size_t q = 0; q < exp.preferences.size(); ++q)
        by_query_.emplace(exp.lists[q].query_id, exp.preferences[q]);
}

Verdict CachedPreferenceOracle::compare(const CandidateList& list, int i, int j) {
    const auto it = by_query_.find(list.query_id);
    if (it == by_query_.end())
        throw OracleError(list.query_id, i, j,
                          "no cached verdicts for query " + list.query_id);
    const auto verdict = it->second.find(i, j);
    if (!verdict)
        throw OracleError(list.query_id, i, j,
                          "pair (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") not in cache for query " + list.query_id);
    return *verdict;
}

}  // namespace rankconsol
