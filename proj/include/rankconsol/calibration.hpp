#pragma once

// Supervised monotone post-processing: a piecewise linear map with strictly
// increasing knots, Platt's sigmoid, and a by-query cross-validation harness
// that fits on held-in queries and transforms the held-out ones.

#include <cstdint>
#include <string>
#include <vector>

#include "rankconsol/domain.hpp"

namespace rankconsol {

struct PwlMap {
    std::vector<double> knot_s;  // strictly increasing abscissas
    std::vector<double> knot_y;  // strictly increasing ordinates
};

// Clamped linear interpolation: knot_y.front() below the first knot,
// knot_y.back() above the last, linear in between.
double pwl_apply(const PwlMap& map, double s);

// Knot abscissas at empirical score quantiles (falling back to evenly
// spaced distinct values when quantiles collide); ordinates from a
// count-weighted monotone least-squares fit of the per-knot target means,
// then separated by 1e-9 so both coordinates are strictly increasing.
// Requires knots >= 2 and at least that many distinct scores.
PwlMap pwl_fit(const std::vector<double>& scores, const std::vector<double>& targets,
               int knots);

struct PlattMap {
    double alpha = 1.0;  // kept strictly positive
    double beta = 0.0;
};

double platt_apply(const PlattMap& map, double s);

// Binary cross-entropy fit of 1/(1+exp(-(alpha*s+beta))) by damped Newton
// with backtracking; alpha is projected to stay positive. Stops when the
// gradient norm drops below 1e-8 or after 1000 iterations. Requires both
// classes present.
PlattMap platt_fit(const std::vector<double>& scores, const std::vector<int>& targets);

enum class CalibMethod {
    Pwl,
    Platt,
};

const char* to_string(CalibMethod m);
CalibMethod calib_method_from_string(const std::string& s);

struct CrossvalResult {
    std::vector<ScoreVector> calibrated;  // aligned with the input lists
    std::vector<std::string> warnings;
};

// Queries are split into `folds` groups by seeded hash of query_id; each
// group is transformed by a map fit on all remaining groups' (score,
// normalized label) pairs. Platt targets binarize at normalized label 0.5.
// Folds that cannot be fit (single class, too few distinct scores) pass
// their queries through unchanged with a warning.
CrossvalResult crossval_calibrate(const std::vector<CandidateList>& lists,
                                  const std::vector<ScoreVector>& scores,
                                  CalibMethod method, int folds, std::uint64_t seed,
                                  int knots = 10);

}  // namespace rankconsol
