#include "rankconsol/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rankconsol/random.hpp"

namespace rankconsol {

namespace {

std::string padded_id(const char* prefix, int value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04d", prefix, value);
    return buf;
}

}  // namespace

std::vector<CandidateList> make_synthetic_dataset(const SyntheticDatasetConfig& cfg) {
    if (cfg.n_queries < 1) throw std::invalid_argument("n_queries must be at least 1");
    if (cfg.list_size < 1) throw std::invalid_argument("list_size must be at least 1");
    if (cfg.max_grade < 1)
        throw std::invalid_argument("label alphabet {0..max_grade} needs max_grade >= 1");
    if (!(cfg.retrieval_noise_sigma >= 0.0))
        throw std::invalid_argument("retrieval_noise_sigma must be >= 0");

    const int n = cfg.list_size;
    std::vector<CandidateList> lists;
    lists.reserve(static_cast<std::size_t>(cfg.n_queries));
    for (int qi = 0; qi < cfg.n_queries; ++qi) {
        CandidateList cl;
        cl.query_id = padded_id("q", qi + 1);
        cl.docs.reserve(static_cast<std::size_t>(n));
        for (int di = 0; di < n; ++di)
            cl.docs.push_back({cl.query_id + padded_id("_d", di + 1), ""});

        DetRng label_rng(hash_seed(cfg.seed, std::string_view("labels"),
                                   std::string_view(cl.query_id)));
        cl.labels.resize(static_cast<std::size_t>(n));
        if (cfg.distinct_labels) {
            std::iota(cl.labels.begin(), cl.labels.end(), 0);
            for (int i = n - 1; i > 0; --i) {
                const auto j = label_rng.uniform_int(static_cast<std::uint64_t>(i) + 1);
                std::swap(cl.labels[static_cast<std::size_t>(i)], cl.labels[j]);
            }
            cl.max_grade = std::max(n - 1, 1);
        } else {
            for (auto& l : cl.labels)
                l = static_cast<int>(
                    label_rng.uniform_int(static_cast<std::uint64_t>(cfg.max_grade) + 1));
            cl.max_grade = cfg.max_grade;
        }
        cl.normalized_labels = normalize_labels(cl.labels, cl.max_grade);

        DetRng retr_rng(hash_seed(cfg.seed, std::string_view("retr"),
                                  std::string_view(cl.query_id)));
        cl.retrieval_scores.reserve(static_cast<std::size_t>(n));
        for (int di = 0; di < n; ++di)
            cl.retrieval_scores.push_back(
                cl.normalized_labels[static_cast<std::size_t>(di)] +
                cfg.retrieval_noise_sigma * retr_rng.gaussian());

        std::vector<int> identity(static_cast<std::size_t>(n));
        std::iota(identity.begin(), identity.end(), 0);
        const Ranking by_retrieval = rank_by_scores(
            {cl.query_id, ScoreKind::Relevance, cl.retrieval_scores},
            Ranking::from_sorted(cl.query_id, identity));
        cl.initial_rank = by_retrieval.rank_of;
        lists.push_back(std::move(cl));
    }
    return lists;
}

const char* to_string(InitRanking v) {
    switch (v) {
        case InitRanking::Auto: return "auto";
        case InitRanking::Retrieval: return "retrieval";
        case InitRanking::Relevance: return "relevance";
    }
    return "?";
}

InitRanking init_ranking_from_string(const std::string& s) {
    if (s == "auto") return InitRanking::Auto;
    if (s == "retrieval") return InitRanking::Retrieval;
    if (s == "relevance") return InitRanking::Relevance;
    throw std::invalid_argument("unknown init ranking: " + s);
}

const char* to_string(BaseScores v) {
    switch (v) {
        case BaseScores::Relevance: return "relevance";
        case BaseScores::Retrieval: return "retrieval";
    }
    return "?";
}

BaseScores base_scores_from_string(const std::string& s) {
    if (s == "relevance") return BaseScores::Relevance;
    if (s == "retrieval") return BaseScores::Retrieval;
    throw std::invalid_argument("unknown base scores: " + s);
}

namespace {

// Retrieval order as scores, for selectors that want a ScoreVector.
ScoreVector retrieval_as_scores(const CandidateList& list) {
    if (!list.retrieval_scores.empty())
        return {list.query_id, ScoreKind::Relevance, list.retrieval_scores};
    std::vector<double> inv;
    inv.reserve(list.size());
    for (int r : list.initial_rank) inv.push_back(static_cast<double>(-r));
    return {list.query_id, ScoreKind::Relevance, std::move(inv)};
}

// Allpair constraint sets order the win-count groups totally, so the
// projection reduces to isotonic regression along the group order when all
// counts are distinct, and to the bipartite constraints between adjacent
// groups otherwise (transitivity supplies the skipped pairs either way).
ConsolidationResult solve_allpair(const ScoreVector& base, const ScoreVector& wins,
                                  const SolverConfig& scfg) {
    const std::size_t n = base.values.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double wa = wins.values[static_cast<std::size_t>(a)];
        const double wb = wins.values[static_cast<std::size_t>(b)];
        if (wa != wb) return wa > wb;
        return a < b;
    });

    bool all_distinct = true;
    for (std::size_t r = 1; r < n && all_distinct; ++r)
        all_distinct = wins.values[static_cast<std::size_t>(order[r - 1])] !=
                       wins.values[static_cast<std::size_t>(order[r])];
    if (all_distinct)
        return solve_projection_total_order(base, Ranking::from_sorted(base.query_id, order));

    ConstraintSet cs;
    cs.query_id = base.query_id;
    cs.n_docs = static_cast<int>(n);
    std::size_t group_start = 0;
    for (std::size_t r = 1; r <= n; ++r) {
        const bool boundary =
            r == n || wins.values[static_cast<std::size_t>(order[r])] !=
                          wins.values[static_cast<std::size_t>(order[group_start])];
        if (!boundary) continue;
        if (r < n) {
            std::size_t next_end = r + 1;
            while (next_end < n && wins.values[static_cast<std::size_t>(order[next_end])] ==
                                       wins.values[static_cast<std::size_t>(order[r])])
                ++next_end;
            for (std::size_t a = group_start; a < r; ++a)
                for (std::size_t b = r; b < next_end; ++b)
                    cs.constraints.push_back({order[a], order[b]});
        }
        group_start = r;
    }
    return solve_projection(base, cs, scfg);
}

}  // namespace

PipelineResult run_consolidation(const std::vector<CandidateList>& lists,
                                 const std::vector<ScoreVector>& relevance,
                                 PreferenceOracle& oracle, const PipelineConfig& cfg) {
    if (relevance.size() != lists.size())
        throw std::invalid_argument("relevance scores misaligned with lists");
    for (std::size_t q = 0; q < lists.size(); ++q)
        if (relevance[q].query_id != lists[q].query_id ||
            relevance[q].values.size() != lists[q].size())
            throw std::invalid_argument("relevance scores misaligned for query " +
                                        lists[q].query_id);
    if (cfg.method != SelectionMethod::Allpair && cfg.k < 1)
        throw std::invalid_argument("k must be at least 1");

    PipelineResult out;
    out.outcomes.resize(lists.size());
    std::vector<std::string> failure_slots(lists.size());

    const auto run_one = [&](std::size_t q) {
        const CandidateList& list = lists[q];
        const int n = static_cast<int>(list.size());
        if (list.initial_rank.size() != list.size())
            throw std::runtime_error("missing initial ranking");
        const Ranking retr_rank = Ranking::from_rank_of(list.query_id, list.initial_rank);

        QueryOutcome outc;
        if (cfg.base == BaseScores::Relevance) {
            outc.base = relevance[q];
        } else {
            if (list.retrieval_scores.size() != list.size())
                throw std::runtime_error("no retrieval scores to use as base");
            outc.base = {list.query_id, ScoreKind::Relevance, list.retrieval_scores};
        }

        const int keff = std::min(cfg.k, n);
        switch (cfg.method) {
            case SelectionMethod::Allpair: {
                outc.selection = select_allpair(oracle, list);
                outc.wins = win_count_scores(outc.selection.prefs);
                break;
            }
            case SelectionMethod::SlideWin: {
                const InitRanking eff =
                    cfg.init == InitRanking::Auto ? InitRanking::Retrieval : cfg.init;
                const Ranking initial = eff == InitRanking::Retrieval
                                            ? retr_rank
                                            : rank_by_scores(relevance[q], retr_rank);
                outc.selection = select_slidewin(oracle, list, initial, keff);
                break;
            }
            case SelectionMethod::TopAll: {
                const InitRanking eff =
                    cfg.init == InitRanking::Auto ? InitRanking::Relevance : cfg.init;
                const ScoreVector top_base =
                    eff == InitRanking::Relevance ? relevance[q] : retrieval_as_scores(list);
                outc.selection = select_topall(oracle, list, top_base, retr_rank, keff);
                break;
            }
        }

        const auto t0 = std::chrono::steady_clock::now();
        outc.result = cfg.method == SelectionMethod::Allpair
                          ? solve_allpair(outc.base, *outc.wins, cfg.solver)
                          : solve_projection(outc.base, outc.selection.constraints, cfg.solver);
        outc.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.outcomes[q] = std::move(outc);
    };

    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_workers = std::min(
        lists.size(),
        cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers) : hw);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t q = next.fetch_add(1);
            if (q >= lists.size()) return;
            try {
                run_one(q);
            } catch (const std::exception& e) {
                failure_slots[q] = lists[q].query_id + ": " + e.what();
            }
        }
    };
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const std::string& f : failure_slots)
        if (!f.empty()) out.failures.push_back(f);
    return out;
}

EvalReport evaluate_scores(const std::vector<CandidateList>& lists,
                           const std::vector<const ScoreVector*>& scores,
                           const EvalOptions& opts) {
    if (scores.size() != lists.size())
        throw std::invalid_argument("scores misaligned with lists");
    if (opts.cutoffs.empty()) throw std::invalid_argument("no ndcg cutoffs");
    if (opts.ece_bins < 1) throw std::invalid_argument("ece_bins must be at least 1");

    EvalReport rep;
    rep.method_name = opts.method_name;
    rep.cutoffs = opts.cutoffs;
    rep.ece_bins = opts.ece_bins;

    std::vector<ScoreVector> present;
    std::vector<std::size_t> slot;
    for (std::size_t q = 0; q < lists.size(); ++q) {
        if (!scores[q]) {
            rep.failures.push_back(lists[q].query_id + ": no scores");
            continue;
        }
        if (!lists[q].has_labels() ||
            lists[q].normalized_labels.size() != lists[q].size())
            throw std::invalid_argument("query " + lists[q].query_id +
                                        " has no labels to evaluate against");
        if (scores[q]->query_id != lists[q].query_id ||
            scores[q]->values.size() != lists[q].size())
            throw std::invalid_argument("scores misaligned for query " + lists[q].query_id);
        if (lists[q].initial_rank.size() != lists[q].size())
            throw std::invalid_argument("query " + lists[q].query_id +
                                        " has no initial ranking for tie-breaks");
        present.push_back(*scores[q]);
        slot.push_back(q);
    }

    if (opts.rescale && !present.empty())
        present = rescale_global(present, 0.0, 1.0).scores;

    for (std::size_t i = 0; i < present.size(); ++i) {
        const CandidateList& list = lists[slot[i]];
        const Ranking tie = Ranking::from_rank_of(list.query_id, list.initial_rank);
        const Ranking ranked = rank_by_scores(present[i], tie);
        QueryMetrics qm;
        for (int c : opts.cutoffs) qm.ndcg[c] = ndcg_at_k(list.labels, ranked, c);
        qm.mse = mse(list.normalized_labels, present[i].values);
        qm.ece = ece(list.normalized_labels, present[i].values,
                     std::min<int>(opts.ece_bins, static_cast<int>(list.size())));
        rep.per_query[list.query_id] = qm;
    }
    rep.finalize();

    if (opts.pooled_ece && !present.empty()) {
        std::vector<double> all_labels, all_preds;
        for (std::size_t i = 0; i < present.size(); ++i) {
            const CandidateList& list = lists[slot[i]];
            all_labels.insert(all_labels.end(), list.normalized_labels.begin(),
                              list.normalized_labels.end());
            all_preds.insert(all_preds.end(), present[i].values.begin(),
                             present[i].values.end());
        }
        rep.pooled_ece = ece(all_labels, all_preds,
                             std::min<int>(opts.ece_bins, static_cast<int>(all_preds.size())));
    }
    return rep;
}

EvalReport evaluate_scores(const std::vector<CandidateList>& lists,
                           const std::vector<ScoreVector>& scores, const EvalOptions& opts) {
    std::vector<const ScoreVector*> ptrs;
    ptrs.reserve(scores.size());
    for (const ScoreVector& s : scores) ptrs.push_back(&s);
    return evaluate_scores(lists, ptrs, opts);
}

EvalReport evaluate_pipeline(const std::vector<CandidateList>& lists,
                             const PipelineResult& run, const EvalOptions& opts) {
    if (run.outcomes.size() != lists.size())
        throw std::invalid_argument("pipeline result misaligned with lists");
    std::vector<const ScoreVector*> ptrs(lists.size(), nullptr);
    for (std::size_t q = 0; q < lists.size(); ++q)
        if (run.outcomes[q]) ptrs[q] = &run.outcomes[q]->result.adjusted;
    EvalReport rep = evaluate_scores(lists, ptrs, opts);
    rep.failures = run.failures;  // same queries, with the original reasons
    return rep;
}

SweepResult sweep_ensemble(const std::vector<CandidateList>& lists,
                           const std::vector<ScoreVector>& relevance,
                           const std::vector<ScoreVector>& wins,
                           const std::vector<double>& ws, const EvalOptions& opts) {
    if (ws.empty()) throw std::invalid_argument("empty weight grid");
    if (relevance.size() != lists.size() || wins.size() != lists.size())
        throw std::invalid_argument("score vectors misaligned with lists");

    SweepResult out;
    out.ws = ws;
    out.points.reserve(ws.size());
    const int cutoff = opts.cutoffs.front();
    for (double w : ws) {
        std::vector<ScoreVector> mixed;
        mixed.reserve(lists.size());
        for (std::size_t q = 0; q < lists.size(); ++q)
            mixed.push_back(ensemble(relevance[q], wins[q], w));
        const EvalReport rep = evaluate_scores(lists, mixed, opts);
        out.points.push_back({rep.aggregate.ndcg.at(cutoff), rep.aggregate.ece});
    }
    out.front = pareto_front(out.points);
    return out;
}

namespace {

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string svg_tradeoff_plot(const std::vector<TradeoffPoint>& sweep,
                              const std::vector<std::size_t>& front,
                              const std::vector<std::pair<std::string, TradeoffPoint>>& overlays,
                              const std::string& title) {
    const double W = 720, H = 520, L = 70, R = 30, T = 40, B = 60;

    std::vector<TradeoffPoint> all = sweep;
    for (const auto& [name, p] : overlays) all.push_back(p);

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!all.empty()) {
        xmin = xmax = all[0].ece;
        ymin = ymax = all[0].ndcg;
        for (const auto& p : all) {
            xmin = std::min(xmin, p.ece);
            xmax = std::max(xmax, p.ece);
            ymin = std::min(ymin, p.ndcg);
            ymax = std::max(ymax, p.ndcg);
        }
    }
    const double xpad = xmax > xmin ? 0.05 * (xmax - xmin) : 0.05;
    const double ypad = ymax > ymin ? 0.05 * (ymax - ymin) : 0.05;
    xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;

    const auto mx = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
    const auto my = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"16\">" << xml_escape(title) << "</text>\n";

    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + t * (xmax - xmin) / 4.0;
        const double yv = ymin + t * (ymax - ymin) / 4.0;
        svg << "<line x1=\"" << mx(xv) << "\" y1=\"" << T << "\" x2=\"" << mx(xv) << "\" y2=\""
            << H - B << "\" stroke=\"#dddddd\"/>\n";
        svg << "<line x1=\"" << L << "\" y1=\"" << my(yv) << "\" x2=\"" << W - R << "\" y2=\""
            << my(yv) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << mx(xv) << "\" y=\"" << H - B + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt_num(xv) << "</text>\n";
        svg << "<text x=\"" << L - 8 << "\" y=\"" << my(yv) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt_num(yv) << "</text>\n";
    }
    svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
        << H - T - B << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">ECE (lower is "
           "better)</text>\n";
    svg << "<text x=\"20\" y=\"" << (T + H - B) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\""
        << " transform=\"rotate(-90 20 " << (T + H - B) / 2 << ")\">NDCG (higher is "
           "better)</text>\n";

    if (!front.empty()) {
        std::vector<TradeoffPoint> fp;
        fp.reserve(front.size());
        for (std::size_t i : front)
            if (i < sweep.size()) fp.push_back(sweep[i]);
        std::sort(fp.begin(), fp.end(),
                  [](const TradeoffPoint& a, const TradeoffPoint& b) { return a.ece < b.ece; });
        svg << "<polyline fill=\"none\" stroke=\"#e07b00\" stroke-width=\"2\" points=\"";
        for (const auto& p : fp) svg << mx(p.ece) << "," << my(p.ndcg) << " ";
        svg << "\"/>\n";
    }

    for (const auto& p : sweep)
        svg << "<circle cx=\"" << mx(p.ece) << "\" cy=\"" << my(p.ndcg)
            << "\" r=\"4\" fill=\"#4682b4\" fill-opacity=\"0.85\"/>\n";

    for (const auto& [name, p] : overlays) {
        const double x = mx(p.ece), y = my(p.ndcg);
        svg << "<path d=\"M " << x << " " << y - 6 << " L " << x + 6 << " " << y << " L " << x
            << " " << y + 6 << " L " << x - 6 << " " << y
            << " Z\" fill=\"#c0392b\"/>\n";
        svg << "<text x=\"" << x + 9 << "\" y=\"" << y + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(name)
            << "</text>\n";
    }

    svg << "</svg>\n";
    return svg.str();
}

}  // namespace rankconsol
