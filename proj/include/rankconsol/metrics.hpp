#pragma once

// Evaluation quantities and their aggregation. Convention throughout: mse
// and ece compare predictions against normalized labels in [0,1]; ndcg uses
// raw integer grades in its 2^y - 1 gain.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rankconsol/domain.hpp"
#include "rankconsol/ranking.hpp"

namespace rankconsol {

double mse(const std::vector<double>& labels, const std::vector<double>& preds);

// Sort docs by prediction descending, split into `bins` contiguous groups of
// near-equal size (the first n mod bins groups take one extra doc), then
// average the absolute gap between label mass and prediction mass per group.
// With bins == n this equals mean absolute error. Requires n >= bins.
double ece(const std::vector<double>& labels, const std::vector<double>& preds, int bins = 10);

// Gain 2^y - 1, discount log2(1 + rank), cut off at rank k, normalized by
// the label-sorted ideal. All-zero labels give 1.0 by convention.
double ndcg_at_k(const std::vector<int>& labels, const Ranking& ranking, int k);

struct RescaledScores {
    std::vector<ScoreVector> scores;
    bool constant_input = false;  // everything collapsed to the midpoint
};

// One affine map for the whole collection, sending the global min to y_min
// and the global max to y_max. Argsort of every vector is preserved.
RescaledScores rescale_global(const std::vector<ScoreVector>& preds, double y_min,
                              double y_max);

// relevance + w * wins/(n-1), the win counts normalized so w is comparable
// across list sizes. A single-doc list contributes no win term.
ScoreVector ensemble(const ScoreVector& relevance, const ScoreVector& wins, double w);

struct TradeoffPoint {
    double ndcg = 0.0;
    double ece = 0.0;
};

// Indices of points no other point dominates (dominating = ndcg >= and
// ece <= with at least one strict). Input order is kept.
std::vector<std::size_t> pareto_front(const std::vector<TradeoffPoint>& points);

struct SignificanceResult {
    double t_stat = 0.0;
    double p_value = 1.0;
    bool significant = false;
    bool degenerate = false;  // zero-variance differences; p forced to 0 or 1
};

// Two-sided paired t-test on per-query metric differences.
SignificanceResult paired_significance(const std::vector<double>& a,
                                       const std::vector<double>& b, double alpha = 0.01);

// Regularized incomplete beta I_x(a, b); exposed for the t-distribution tail.
double ibeta(double a, double b, double x);
double student_t_two_sided_p(double t, double df);

struct QueryMetrics {
    std::map<int, double> ndcg;  // cutoff -> value
    double mse = 0.0;
    double ece = 0.0;
};

struct EvalReport {
    std::string method_name;
    std::vector<int> cutoffs{10};
    int ece_bins = 10;
    std::map<std::string, QueryMetrics> per_query;
    QueryMetrics aggregate;                 // unweighted means over queries
    std::optional<double> pooled_ece;       // docs pooled across queries
    std::vector<std::string> failures;      // queries that produced no metrics

    void finalize();  // recompute aggregate from per_query
    std::string to_csv() const;
    std::string to_json() const;
};

}  // namespace rankconsol
