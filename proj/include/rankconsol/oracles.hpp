#pragma once

// Verdict and relevance sources: a seeded synthetic simulator that stands in
// for an LLM rater at desk scale, and a replay oracle over a previously
// saved experiment file.

#include <cstdint>
#include <string>
#include <unordered_map>

#include "rankconsol/data_io.hpp"
#include "rankconsol/domain.hpp"
#include "rankconsol/ranking.hpp"

namespace rankconsol {

// Noise model for the simulator. Every draw is keyed by
// (seed, purpose, query_id, doc ids), so outputs depend only on the config
// and the identity of what is being judged, never on call order.
struct SyntheticOracleConfig {
    std::uint64_t seed = 0;
    double relevance_noise_sigma = 0.0;  // gaussian on normalized labels, >= 0
    double preference_flip_prob = 0.0;   // wrong-direction verdicts, in [0, 0.5]
    double tie_prob = 0.0;               // Inconsistent rate, in [0, 1]
};

// clip(normalized_label + N(0, sigma), 0, 1) per document.
ScoreVector synthetic_relevance(const SyntheticOracleConfig& cfg, const CandidateList& list);

// Pairwise verdict with the noise model:
//   equal labels:   Inconsistent with prob tie, else a uniform direction
//   unequal labels: correct with prob 1 - flip - tie/2, flipped with prob
//                   flip, Inconsistent with prob tie/2
// The draw is made once per unordered pair (canonical index order), so
// querying (i, j) and (j, i) always agrees.
Verdict synthetic_preference(const SyntheticOracleConfig& cfg, const CandidateList& list,
                             int i, int j);

class SyntheticPreferenceOracle final : public PreferenceOracle {
public:
    explicit SyntheticPreferenceOracle(SyntheticOracleConfig cfg) : cfg_(cfg) {}

    Verdict compare(const CandidateList& list, int i, int j) override {
        return synthetic_preference(cfg_, list, i, j);
    }

private:
    SyntheticOracleConfig cfg_;
};

// Replays the pairwise verdicts stored in an experiment. Asking for a pair
// the file does not contain raises OracleError with the pair identity; no
// fresh judgments are ever invented.
class CachedPreferenceOracle final : public PreferenceOracle {
public:
    explicit CachedPreferenceOracle(const Experiment& exp);

    Verdict compare(const CandidateList& list, int i, int j) override;

private:
    std::unordered_map<std::string, PreferenceSet> by_query_;
};

}  // namespace rankconsol
