#include "rankconsol/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "rankconsol/consolidation.hpp"
#include "rankconsol/random.hpp"

namespace rankconsol {

namespace {

const double kStrictEps = 1e-9;

std::vector<double> quantile_knots(std::vector<double> sorted, int knots) {
    const std::size_t n = sorted.size();
    std::vector<double> s(knots);
    for (int m = 0; m < knots; ++m) {
        const double pos = static_cast<double>(m) * static_cast<double>(n - 1) /
                           static_cast<double>(knots - 1);
        s[m] = sorted[static_cast<std::size_t>(std::llround(pos))];
    }
    const bool strict = std::adjacent_find(s.begin(), s.end(),
                                           [](double a, double b) { return a >= b; }) == s.end();
    if (strict) return s;

    // Quantiles collided on repeated values; spread knots over the distinct
    // values instead (the caller guarantees there are at least `knots`).
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const std::size_t u = sorted.size();
    for (int m = 0; m < knots; ++m) {
        const double pos = static_cast<double>(m) * static_cast<double>(u - 1) /
                           static_cast<double>(knots - 1);
        s[m] = sorted[static_cast<std::size_t>(std::llround(pos))];
    }
    return s;
}

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double bce_loss(const std::vector<double>& scores, const std::vector<int>& targets,
                double alpha, double beta) {
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double z = alpha * scores[i] + beta;
        loss += softplus(z) - targets[i] * z;
    }
    return loss;
}

}  // namespace

double pwl_apply(const PwlMap& map, double s) {
    if (map.knot_s.size() < 2 || map.knot_s.size() != map.knot_y.size())
        throw std::invalid_argument("malformed piecewise linear map");
    if (s <= map.knot_s.front()) return map.knot_y.front();
    if (s >= map.knot_s.back()) return map.knot_y.back();
    const auto it = std::upper_bound(map.knot_s.begin(), map.knot_s.end(), s);
    const std::size_t hi = static_cast<std::size_t>(it - map.knot_s.begin());
    const std::size_t lo = hi - 1;
    const double t = (s - map.knot_s[lo]) / (map.knot_s[hi] - map.knot_s[lo]);
    return map.knot_y[lo] + t * (map.knot_y[hi] - map.knot_y[lo]);
}

PwlMap pwl_fit(const std::vector<double>& scores, const std::vector<double>& targets,
               int knots) {
    if (knots < 2) throw std::invalid_argument("need at least two knots");
    if (scores.size() != targets.size())
        throw std::invalid_argument("scores and targets length mismatch");
    if (scores.empty()) throw std::invalid_argument("empty fit input");
    for (double v : scores)
        if (!std::isfinite(v)) throw std::invalid_argument("scores must be finite");
    for (double v : targets)
        if (!std::isfinite(v)) throw std::invalid_argument("targets must be finite");

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] != sorted[i - 1]) ++distinct;
    if (distinct < static_cast<std::size_t>(knots))
        throw std::invalid_argument("need at least " + std::to_string(knots) +
                                    " distinct scores, found " + std::to_string(distinct));

    PwlMap map;
    map.knot_s = quantile_knots(std::move(sorted), knots);

    // Nearest-knot assignment via cell midpoints; a score exactly on a
    // midpoint goes to the lower knot.
    std::vector<double> mids(knots - 1);
    for (int m = 0; m + 1 < knots; ++m) mids[m] = 0.5 * (map.knot_s[m] + map.knot_s[m + 1]);
    std::vector<double> bin_w(knots, 0.0), bin_sum(knots, 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto it = std::lower_bound(mids.begin(), mids.end(), scores[i]);
        const int cell = static_cast<int>(it - mids.begin());
        bin_w[cell] += 1.0;
        bin_sum[cell] += targets[i];
    }

    std::vector<double> occ_means, occ_w;
    std::vector<int> occ_idx;
    for (int m = 0; m < knots; ++m) {
        if (bin_w[m] > 0.0) {
            occ_means.push_back(bin_sum[m] / bin_w[m]);
            occ_w.push_back(bin_w[m]);
            occ_idx.push_back(m);
        }
    }
    const std::vector<double> fitted = isotonic_fit(occ_means, occ_w, /*increasing=*/true);

    // Re-expand over all knots, interpolating the empty ones between their
    // fitted neighbors (flat extension at the ends).
    map.knot_y.assign(knots, 0.0);
    for (std::size_t t = 0; t < occ_idx.size(); ++t) map.knot_y[occ_idx[t]] = fitted[t];
    for (int m = 0; m < knots; ++m) {
        if (bin_w[m] > 0.0) continue;
        const auto next = std::upper_bound(occ_idx.begin(), occ_idx.end(), m);
        if (next == occ_idx.begin()) {
            map.knot_y[m] = fitted.front();
        } else if (next == occ_idx.end()) {
            map.knot_y[m] = fitted.back();
        } else {
            const int hi = *next;
            const int lo = *(next - 1);
            const double t = (map.knot_s[m] - map.knot_s[lo]) / (map.knot_s[hi] - map.knot_s[lo]);
            map.knot_y[m] = map.knot_y[lo] + t * (map.knot_y[hi] - map.knot_y[lo]);
        }
    }

    for (int m = 1; m < knots; ++m)
        map.knot_y[m] = std::max(map.knot_y[m], map.knot_y[m - 1] + kStrictEps);

    // Interpolating between pooled bin means can lose to the best constant
    // when targets barely depend on scores. The fit must never be worse
    // than predicting the target mean, so fall back to a near-constant
    // ladder in that case.
    double mean_t = 0.0;
    for (double v : targets) mean_t += v;
    mean_t /= static_cast<double>(targets.size());
    double map_sse = 0.0, const_sse = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double dm = pwl_apply(map, scores[i]) - targets[i];
        const double dc = mean_t - targets[i];
        map_sse += dm * dm;
        const_sse += dc * dc;
    }
    if (map_sse > const_sse) {
        const double mid = 0.5 * (knots - 1);
        for (int m = 0; m < knots; ++m)
            map.knot_y[m] = mean_t + (static_cast<double>(m) - mid) * kStrictEps;
    }
    return map;
}

double platt_apply(const PlattMap& map, double s) {
    return stable_sigmoid(map.alpha * s + map.beta);
}

PlattMap platt_fit(const std::vector<double>& scores, const std::vector<int>& targets) {
    if (scores.size() != targets.size())
        throw std::invalid_argument("scores and targets length mismatch");
    if (scores.empty()) throw std::invalid_argument("empty fit input");
    bool has_pos = false, has_neg = false;
    for (int t : targets) {
        if (t == 1) has_pos = true;
        else if (t == 0) has_neg = true;
        else throw std::invalid_argument("targets must be 0 or 1");
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("both classes required for sigmoid fitting");

    const double alpha_floor = 1e-12;
    double alpha = 1.0, beta = 0.0;
    double loss = bce_loss(scores, targets, alpha, beta);

    for (int iter = 0; iter < 1000; ++iter) {
        double g_a = 0.0, g_b = 0.0, h_aa = 0.0, h_ab = 0.0, h_bb = 0.0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double s = scores[i];
            const double f = stable_sigmoid(alpha * s + beta);
            const double r = f - targets[i];
            const double c = f * (1.0 - f);
            g_a += r * s;
            g_b += r;
            h_aa += c * s * s;
            h_ab += c * s;
            h_bb += c;
        }
        if (std::max(std::abs(g_a), std::abs(g_b)) < 1e-8) break;

        const double ridge = 1e-12 * (1.0 + h_aa + h_bb);
        h_aa += ridge;
        h_bb += ridge;
        const double det = h_aa * h_bb - h_ab * h_ab;
        double da, db;
        if (det > 0.0 && std::isfinite(det)) {
            da = -(h_bb * g_a - h_ab * g_b) / det;
            db = -(h_aa * g_b - h_ab * g_a) / det;
        } else {
            da = -g_a;
            db = -g_b;
        }

        double step = 1.0;
        bool improved = false;
        for (int half = 0; half < 60; ++half, step *= 0.5) {
            const double na = std::max(alpha + step * da, alpha_floor);
            const double nb = beta + step * db;
            const double nl = bce_loss(scores, targets, na, nb);
            if (nl < loss) {
                alpha = na;
                beta = nb;
                loss = nl;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return PlattMap{alpha, beta};
}

const char* to_string(CalibMethod m) {
    return m == CalibMethod::Pwl ? "pwl" : "platt";
}

CalibMethod calib_method_from_string(const std::string& s) {
    if (s == "pwl") return CalibMethod::Pwl;
    if (s == "platt") return CalibMethod::Platt;
    throw std::invalid_argument("unknown calibration method: " + s);
}

CrossvalResult crossval_calibrate(const std::vector<CandidateList>& lists,
                                  const std::vector<ScoreVector>& scores,
                                  CalibMethod method, int folds, std::uint64_t seed,
                                  int knots) {
    if (folds < 2) throw std::invalid_argument("need at least two folds");
    if (lists.size() != scores.size())
        throw std::invalid_argument("lists and scores length mismatch");
    for (std::size_t q = 0; q < lists.size(); ++q) {
        if (lists[q].normalized_labels.size() != lists[q].size())
            throw std::invalid_argument("query " + lists[q].query_id +
                                        " is missing normalized labels");
        if (scores[q].query_id != lists[q].query_id ||
            scores[q].values.size() != lists[q].size())
            throw std::invalid_argument("scores misaligned for query " + lists[q].query_id);
    }

    // Seeded, evenly sized fold assignment: order queries by hash then deal
    // them out round-robin.
    std::vector<std::string> qids;
    qids.reserve(lists.size());
    for (const auto& cl : lists) qids.push_back(cl.query_id);
    std::sort(qids.begin(), qids.end(), [&](const std::string& a, const std::string& b) {
        const auto ha = hash_seed(seed, std::string_view("fold"), std::string_view(a));
        const auto hb = hash_seed(seed, std::string_view("fold"), std::string_view(b));
        if (ha != hb) return ha < hb;
        return a < b;
    });
    std::unordered_map<std::string, int> fold_of;
    for (std::size_t i = 0; i < qids.size(); ++i)
        fold_of[qids[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

    CrossvalResult out;
    out.calibrated.resize(lists.size());

    for (int f = 0; f < folds; ++f) {
        std::vector<double> train_s, train_t;
        for (std::size_t q = 0; q < lists.size(); ++q) {
            if (fold_of[lists[q].query_id] == f) continue;
            for (std::size_t d = 0; d < lists[q].size(); ++d) {
                train_s.push_back(scores[q].values[d]);
                train_t.push_back(lists[q].normalized_labels[d]);
            }
        }

        auto pass_through = [&](const std::string& why) {
            out.warnings.push_back("fold " + std::to_string(f) + ": " + why +
                                   "; scores passed through unchanged");
            for (std::size_t q = 0; q < lists.size(); ++q) {
                if (fold_of[lists[q].query_id] != f) continue;
                out.calibrated[q] = scores[q];
                out.calibrated[q].kind = ScoreKind::Calibrated;
            }
        };

        if (method == CalibMethod::Pwl) {
            std::vector<double> uniq = train_s;
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            const int m_eff = std::min<int>(knots, static_cast<int>(uniq.size()));
            if (m_eff < 2) {
                pass_through("fewer than two distinct training scores");
                continue;
            }
            if (m_eff < knots)
                out.warnings.push_back("fold " + std::to_string(f) + ": knots reduced to " +
                                       std::to_string(m_eff));
            const PwlMap map = pwl_fit(train_s, train_t, m_eff);
            for (std::size_t q = 0; q < lists.size(); ++q) {
                if (fold_of[lists[q].query_id] != f) continue;
                ScoreVector sv;
                sv.query_id = lists[q].query_id;
                sv.kind = ScoreKind::Calibrated;
                sv.values.reserve(lists[q].size());
                for (double v : scores[q].values) sv.values.push_back(pwl_apply(map, v));
                out.calibrated[q] = std::move(sv);
            }
        } else {
            std::vector<int> bin;
            bin.reserve(train_t.size());
            bool has_pos = false, has_neg = false;
            for (double t : train_t) {
                const int b = t >= 0.5 ? 1 : 0;
                bin.push_back(b);
                (b ? has_pos : has_neg) = true;
            }
            if (!has_pos || !has_neg) {
                pass_through("single-class fold");
                continue;
            }
            const PlattMap map = platt_fit(train_s, bin);
            for (std::size_t q = 0; q < lists.size(); ++q) {
                if (fold_of[lists[q].query_id] != f) continue;
                ScoreVector sv;
                sv.query_id = lists[q].query_id;
                sv.kind = ScoreKind::Calibrated;
                sv.values.reserve(lists[q].size());
                for (double v : scores[q].values) sv.values.push_back(platt_apply(map, v));
                out.calibrated[q] = std::move(sv);
            }
        }
    }
    return out;
}

}  // namespace rankconsol
