#pragma once

// End-to-end orchestration: synthetic dataset generation, per-query
// consolidation runs over a worker pool, evaluation with the global [0, 1]
// rescale, the relevance/win-count ensemble sweep, and a small SVG scatter
// for the quality/calibration tradeoff.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankconsol/consolidation.hpp"
#include "rankconsol/domain.hpp"
#include "rankconsol/metrics.hpp"
#include "rankconsol/ranking.hpp"
#include "rankconsol/selection.hpp"

namespace rankconsol {

struct SyntheticDatasetConfig {
    int n_queries = 50;
    int list_size = 100;
    int max_grade = 3;              // labels drawn uniformly from {0..max_grade}
    bool distinct_labels = false;   // instead a shuffled 0..n-1, one doc per grade
    double retrieval_noise_sigma = 0.3;  // on normalized labels, for initial_rank
    std::uint64_t seed = 0;
};

// Deterministic in (config, seed): labels, retrieval scores, and the derived
// initial ranking are all keyed per query id.
std::vector<CandidateList> make_synthetic_dataset(const SyntheticDatasetConfig& cfg);

// Which ranking seeds SlideWin passes and TopAll's top-k pick. Auto follows
// the ablation recommendation: retrieval order for SlideWin, relevance order
// for TopAll.
enum class InitRanking { Auto, Retrieval, Relevance };
// Which scores the solver perturbs.
enum class BaseScores { Relevance, Retrieval };

const char* to_string(InitRanking v);
InitRanking init_ranking_from_string(const std::string& s);
const char* to_string(BaseScores v);
BaseScores base_scores_from_string(const std::string& s);

struct PipelineConfig {
    SelectionMethod method = SelectionMethod::Allpair;
    int k = 10;                     // window passes / top size; clamped to n per query
    InitRanking init = InitRanking::Auto;
    BaseScores base = BaseScores::Relevance;
    SolverConfig solver;
    int workers = 0;                // 0 = hardware concurrency
};

struct QueryOutcome {
    ScoreVector base;                 // what the solver adjusted
    std::optional<ScoreVector> wins;  // full win counts; present for Allpair
    SelectionResult selection;
    ConsolidationResult result;
    double solve_seconds = 0.0;
};

// Aligned with the input lists. A query that fails (cyclic verdicts, oracle
// error, missing inputs) leaves an empty slot and one failures entry; the
// rest of the batch is unaffected.
struct PipelineResult {
    std::vector<std::optional<QueryOutcome>> outcomes;
    std::vector<std::string> failures;  // "query_id: message", in list order

    bool ok() const { return failures.empty(); }
};

// relevance must be index-aligned with lists. The oracle is shared across
// workers and must be thread-safe (all oracles here are).
PipelineResult run_consolidation(const std::vector<CandidateList>& lists,
                                 const std::vector<ScoreVector>& relevance,
                                 PreferenceOracle& oracle, const PipelineConfig& cfg);

struct EvalOptions {
    std::string method_name;
    std::vector<int> cutoffs{10};
    int ece_bins = 10;       // clamped to n for short lists
    bool rescale = true;     // global affine onto [0, 1] before MSE/ECE
    bool pooled_ece = false;
};

// Scores are matched to lists by index; null entries are skipped and listed
// as failures in the report. NDCG ties break by initial rank.
EvalReport evaluate_scores(const std::vector<CandidateList>& lists,
                           const std::vector<const ScoreVector*>& scores,
                           const EvalOptions& opts);
EvalReport evaluate_scores(const std::vector<CandidateList>& lists,
                           const std::vector<ScoreVector>& scores, const EvalOptions& opts);
// Evaluates the consolidated scores of a pipeline run.
EvalReport evaluate_pipeline(const std::vector<CandidateList>& lists,
                             const PipelineResult& run, const EvalOptions& opts);

struct SweepResult {
    std::vector<double> ws;
    std::vector<TradeoffPoint> points;   // aggregate NDCG@cutoff vs ECE per w
    std::vector<std::size_t> front;      // Pareto-optimal indices into points
};

// Evaluates the ensemble at every w in ws (all queries need both vectors).
SweepResult sweep_ensemble(const std::vector<CandidateList>& lists,
                           const std::vector<ScoreVector>& relevance,
                           const std::vector<ScoreVector>& wins,
                           const std::vector<double>& ws, const EvalOptions& opts);

// Scatter of (ece, ndcg) points with the Pareto front drawn as a polyline
// and named overlay markers for individual methods. Pure static SVG.
std::string svg_tradeoff_plot(const std::vector<TradeoffPoint>& sweep,
                              const std::vector<std::size_t>& front,
                              const std::vector<std::pair<std::string, TradeoffPoint>>& overlays,
                              const std::string& title);

}  // namespace rankconsol
