#include "rankconsol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rankconsol {

namespace {

void check_aligned(const std::vector<double>& labels, const std::vector<double>& preds) {
    if (labels.size() != preds.size())
        throw std::invalid_argument("labels and predictions length mismatch");
    if (labels.empty()) throw std::invalid_argument("empty metric input");
}

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    const int max_iter = 400;
    const double eps = 3e-16;
    const double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

double mse(const std::vector<double>& labels, const std::vector<double>& preds) {
    check_aligned(labels, preds);
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double d = labels[i] - preds[i];
        acc += d * d;
    }
    return acc / static_cast<double>(labels.size());
}

double ece(const std::vector<double>& labels, const std::vector<double>& preds, int bins) {
    check_aligned(labels, preds);
    const int n = static_cast<int>(labels.size());
    if (bins < 1) throw std::invalid_argument("bins must be positive");
    if (n < bins)
        throw std::invalid_argument("need at least as many docs as bins (" +
                                    std::to_string(n) + " < " + std::to_string(bins) + ")");

    std::vector<int> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (preds[a] != preds[b]) return preds[a] > preds[b];
        return a < b;
    });

    const int base = n / bins;
    const int extra = n % bins;
    double acc = 0.0;
    int pos = 0;
    for (int m = 0; m < bins; ++m) {
        const int size = base + (m < extra ? 1 : 0);
        double sum_y = 0.0, sum_p = 0.0;
        for (int t = 0; t < size; ++t, ++pos) {
            sum_y += labels[idx[pos]];
            sum_p += preds[idx[pos]];
        }
        acc += std::abs(sum_y - sum_p);
    }
    return acc / static_cast<double>(n);
}

double ndcg_at_k(const std::vector<int>& labels, const Ranking& ranking, int k) {
    if (labels.size() != ranking.size())
        throw std::invalid_argument("labels and ranking length mismatch");
    if (k < 1) throw std::invalid_argument("cutoff k must be positive");

    const int depth = std::min<int>(k, static_cast<int>(labels.size()));
    auto gain = [](int grade) { return std::ldexp(1.0, grade) - 1.0; };

    double dcg = 0.0;
    for (int r = 1; r <= depth; ++r)
        dcg += gain(labels[ranking.sorted_indices[r - 1]]) / std::log2(r + 1.0);

    std::vector<int> ideal = labels;
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    double idcg = 0.0;
    for (int r = 1; r <= depth; ++r) idcg += gain(ideal[r - 1]) / std::log2(r + 1.0);

    if (idcg == 0.0) return 1.0;
    return dcg / idcg;
}

RescaledScores rescale_global(const std::vector<ScoreVector>& preds, double y_min,
                              double y_max) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    for (const ScoreVector& sv : preds) {
        for (double v : sv.values) {
            if (!std::isfinite(v)) throw std::invalid_argument("predictions must be finite");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no predictions to rescale");

    RescaledScores out;
    out.scores = preds;
    if (hi > lo) {
        const double slope = (y_max - y_min) / (hi - lo);
        for (ScoreVector& sv : out.scores)
            for (double& v : sv.values) v = y_min + (v - lo) * slope;
    } else {
        out.constant_input = true;
        const double mid = 0.5 * (y_min + y_max);
        for (ScoreVector& sv : out.scores)
            for (double& v : sv.values) v = mid;
    }
    return out;
}

ScoreVector ensemble(const ScoreVector& relevance, const ScoreVector& wins, double w) {
    if (relevance.values.size() != wins.values.size())
        throw std::invalid_argument("relevance and win counts length mismatch");
    const std::size_t n = relevance.values.size();
    ScoreVector out;
    out.query_id = relevance.query_id;
    out.kind = ScoreKind::Ensemble;
    out.values.resize(n);
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s_norm = n > 1 ? wins.values[i] / denom : 0.0;
        out.values[i] = relevance.values[i] + w * s_norm;
    }
    return out;
}

std::vector<std::size_t> pareto_front(const std::vector<TradeoffPoint>& points) {
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
            if (j == i) continue;
            const bool weakly = points[j].ndcg >= points[i].ndcg && points[j].ece <= points[i].ece;
            const bool strictly =
                points[j].ndcg > points[i].ndcg || points[j].ece < points[i].ece;
            dominated = weakly && strictly;
        }
        if (!dominated) front.push_back(i);
    }
    return front;
}

double ibeta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("ibeta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("degrees of freedom must be positive");
    if (!std::isfinite(t)) return 0.0;
    return ibeta(0.5 * df, 0.5, df / (df + t * t));
}

SignificanceResult paired_significance(const std::vector<double>& a,
                                       const std::vector<double>& b, double alpha) {
    if (a.size() != b.size()) throw std::invalid_argument("paired samples length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("need at least two pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (a[i] - b[i]) - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);

    SignificanceResult res;
    if (var == 0.0) {
        res.degenerate = true;
        if (mean == 0.0) {
            res.t_stat = 0.0;
            res.p_value = 1.0;
        } else {
            res.t_stat = mean > 0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
        }
    } else {
        res.t_stat = mean / std::sqrt(var / static_cast<double>(n));
        res.p_value = student_t_two_sided_p(res.t_stat, static_cast<double>(n - 1));
    }
    res.significant = res.p_value < alpha;
    return res;
}

void EvalReport::finalize() {
    aggregate = QueryMetrics{};
    for (int k : cutoffs) aggregate.ndcg[k] = 0.0;
    if (per_query.empty()) return;
    for (const auto& [qid, qm] : per_query) {
        (void)qid;
        for (const auto& [k, v] : qm.ndcg) aggregate.ndcg[k] += v;
        aggregate.mse += qm.mse;
        aggregate.ece += qm.ece;
    }
    const double n = static_cast<double>(per_query.size());
    for (auto& [k, v] : aggregate.ndcg) v /= n;
    aggregate.mse /= n;
    aggregate.ece /= n;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "method,query_id";
    for (int k : cutoffs) os << ",ndcg@" << k;
    os << ",mse,ece\n";
    auto row = [&](const std::string& qid, const QueryMetrics& qm) {
        os << method_name << ',' << qid;
        for (int k : cutoffs) {
            auto it = qm.ndcg.find(k);
            os << ',' << (it != qm.ndcg.end() ? fmt(it->second) : "");
        }
        os << ',' << fmt(qm.mse) << ',' << fmt(qm.ece) << '\n';
    };
    for (const auto& [qid, qm] : per_query) row(qid, qm);
    row("ALL", aggregate);
    if (pooled_ece) os << "# pooled_ece=" << fmt(*pooled_ece) << '\n';
    for (const std::string& f : failures) os << "# failed: " << f << '\n';
    return os.str();
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["method"] = method_name;
    j["cutoffs"] = cutoffs;
    j["ece_bins"] = ece_bins;
    auto qm_json = [&](const QueryMetrics& qm) {
        nlohmann::json q;
        for (const auto& [k, v] : qm.ndcg) q["ndcg@" + std::to_string(k)] = v;
        q["mse"] = qm.mse;
        q["ece"] = qm.ece;
        return q;
    };
    j["per_query"] = nlohmann::json::object();
    for (const auto& [qid, qm] : per_query) j["per_query"][qid] = qm_json(qm);
    j["aggregate"] = qm_json(aggregate);
    if (pooled_ece) j["pooled_ece"] = *pooled_ece;
    j["failures"] = failures;
    return j.dump(2);
}

}  // namespace rankconsol
