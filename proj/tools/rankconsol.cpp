// Command-line front end: dataset synthesis and ingestion, preference
// consolidation, evaluation, calibration, ensemble sweeps, and the
// initialization/budget ablation grids. Every command is deterministic
// given its inputs and --seed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <rankconsol/calibration.hpp>
#include <rankconsol/consolidation.hpp>
#include <rankconsol/data_io.hpp>
#include <rankconsol/llm_client.hpp>
#include <rankconsol/metrics.hpp>
#include <rankconsol/oracles.hpp>
#include <rankconsol/pipeline.hpp>
#include <rankconsol/ranking.hpp>
#include <rankconsol/selection.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rankconsol;

namespace {

struct GlobalOpts {
    std::uint64_t seed = 1;
    int workers = 0;
    std::string out_dir = ".";
    std::string format = "csv";
};

struct DatasetOpts {
    std::string input;   // experiment file
    std::string run;     // TREC run file
    std::string qrels;   // TREC qrels file
    int top_n = 100;
    int gen_queries = 0;  // > 0 switches on inline synthesis
    int gen_docs = 100;
    int gen_max_grade = 3;
    bool gen_distinct = false;
    double gen_retrieval_sigma = 0.3;
};

struct OracleOpts {
    std::string kind = "synthetic";  // synthetic | cache | llm
    double sigma = 0.15;
    double flip = 0.15;
    double tie = 0.10;
    std::string endpoint;
    std::string cache_dir;
    std::string prompts_dir;
    int timeout_ms = 30000;
};

struct MethodOpts {
    std::string method = "allpair";
    int k = 10;
    std::string init = "auto";
    std::string base = "relevance";
    double feasibility_tol = 1e-9;
    std::size_t max_cycles = 0;
};

struct EvalFlags {
    std::vector<int> cutoffs{10};
    int ece_bins = 10;
    bool pooled = false;
    std::string rescale = "auto";  // auto | on | off
};

void add_dataset_flags(CLI::App* cmd, DatasetOpts& d) {
    cmd->add_option("--input", d.input, "experiment file (.json or .json.gz)");
    cmd->add_option("--run", d.run, "TREC run file");
    cmd->add_option("--qrels", d.qrels, "TREC qrels file");
    cmd->add_option("--top-n", d.top_n, "docs kept per query from --run")
        ->capture_default_str();
    cmd->add_option("--gen-queries", d.gen_queries, "synthesize this many queries");
    cmd->add_option("--gen-docs", d.gen_docs, "list size for synthesis")
        ->capture_default_str();
    cmd->add_option("--gen-max-grade", d.gen_max_grade, "label ceiling for synthesis")
        ->capture_default_str();
    cmd->add_flag("--gen-distinct", d.gen_distinct, "one doc per grade 0..n-1");
    cmd->add_option("--gen-retrieval-sigma", d.gen_retrieval_sigma,
                    "noise on the synthetic retrieval order")
        ->capture_default_str();
}

void add_oracle_flags(CLI::App* cmd, OracleOpts& o) {
    cmd->add_option("--oracle", o.kind, "synthetic, cache, or llm")
        ->capture_default_str();
    cmd->add_option("--sigma", o.sigma, "relevance noise (synthetic)")
        ->capture_default_str();
    cmd->add_option("--flip", o.flip, "wrong-verdict probability (synthetic)")
        ->capture_default_str();
    cmd->add_option("--tie", o.tie, "inconsistent-verdict probability (synthetic)")
        ->capture_default_str();
    cmd->add_option("--endpoint", o.endpoint, "scoring endpoint (llm)");
    cmd->add_option("--llm-cache-dir", o.cache_dir, "response cache directory (llm)");
    cmd->add_option("--prompts-dir", o.prompts_dir, "prompt template directory (llm)");
    cmd->add_option("--timeout-ms", o.timeout_ms, "request timeout (llm)")
        ->capture_default_str();
}

void add_method_flags(CLI::App* cmd, MethodOpts& m) {
    cmd->add_option("--method", m.method, "allpair, slidewin, or topall")
        ->capture_default_str();
    cmd->add_option("--k", m.k, "window passes / top size")->capture_default_str();
    cmd->add_option("--init-ranking", m.init, "auto, retrieval, or relevance")
        ->capture_default_str();
    cmd->add_option("--base", m.base, "scores being corrected: relevance or retrieval")
        ->capture_default_str();
    cmd->add_option("--feasibility-tol", m.feasibility_tol, "solver tolerance")
        ->capture_default_str();
    cmd->add_option("--max-iters", m.max_cycles,
                    "solver cycle cap, 0 = proportional to problem size")
        ->capture_default_str();
}

void add_eval_flags(CLI::App* cmd, EvalFlags& e) {
    cmd->add_option("--cutoffs", e.cutoffs, "NDCG cutoffs")->capture_default_str();
    cmd->add_option("--ece-bins", e.ece_bins, "calibration bins")->capture_default_str();
    cmd->add_flag("--pooled", e.pooled, "also report ECE pooled across queries");
    cmd->add_option("--rescale", e.rescale,
                    "global [0,1] rescale before MSE/ECE: auto, on, or off")
        ->capture_default_str();
}

EvalOptions eval_options(const EvalFlags& e, const std::string& method_name,
                         ScoreKind kind) {
    EvalOptions o;
    o.method_name = method_name;
    o.cutoffs = e.cutoffs;
    o.ece_bins = e.ece_bins;
    o.pooled_ece = e.pooled;
    if (e.rescale == "on")
        o.rescale = true;
    else if (e.rescale == "off")
        o.rescale = false;
    else if (e.rescale == "auto")
        o.rescale = kind != ScoreKind::Calibrated;  // calibrated maps are final
    else
        throw std::invalid_argument("unknown --rescale value: " + e.rescale);
    return o;
}

// The experiment, when one was loaded, rides along for oracle replay.
struct Dataset {
    std::vector<CandidateList> lists;
    std::optional<Experiment> experiment;
};

Dataset load_dataset(const DatasetOpts& d, std::uint64_t seed) {
    const int sources = (d.input.empty() ? 0 : 1) + (d.run.empty() ? 0 : 1) +
                        (d.gen_queries > 0 ? 1 : 0);
    if (sources == 0)
        throw std::invalid_argument(
            "no dataset: give --input, --run [--qrels], or --gen-queries");
    if (sources > 1)
        throw std::invalid_argument("choose one of --input, --run, --gen-queries");

    Dataset out;
    if (!d.input.empty()) {
        out.experiment = load_experiment(d.input);
        out.lists = out.experiment->lists;
        if (out.lists.empty()) throw std::runtime_error(d.input + ": experiment is empty");
    } else if (!d.run.empty()) {
        out.lists = load_run(d.run, d.top_n);
        if (!d.qrels.empty()) {
            const QrelsResult qr = load_qrels(d.qrels);
            for (const std::string& w : qr.warnings) std::cerr << "warning: " << w << '\n';
            for (const std::string& w : apply_qrels(out.lists, qr.grades))
                std::cerr << "warning: " << w << '\n';
        }
    } else {
        SyntheticDatasetConfig cfg;
        cfg.n_queries = d.gen_queries;
        cfg.list_size = d.gen_docs;
        cfg.max_grade = d.gen_max_grade;
        cfg.distinct_labels = d.gen_distinct;
        cfg.retrieval_noise_sigma = d.gen_retrieval_sigma;
        cfg.seed = seed;
        out.lists = make_synthetic_dataset(cfg);
    }

    const ValidationReport report = validate_dataset(out.lists);
    if (!report.ok()) {
        std::ostringstream os;
        os << "dataset validation failed:";
        for (const Violation& v : report.violations)
            os << "\n  " << v.query_id << ": " << v.message;
        throw std::runtime_error(os.str());
    }
    return out;
}

// Relevance scores plus a preference oracle from one configuration. The
// client, when there is one, owns the connection state the oracle borrows.
struct OracleBundle {
    std::vector<ScoreVector> relevance;
    std::unique_ptr<LlmClient> client;
    std::unique_ptr<PreferenceOracle> oracle;
};

OracleBundle make_oracle(const OracleOpts& o, const Dataset& data, std::uint64_t seed) {
    OracleBundle b;
    if (o.kind == "synthetic") {
        SyntheticOracleConfig cfg;
        cfg.seed = seed;
        cfg.relevance_noise_sigma = o.sigma;
        cfg.preference_flip_prob = o.flip;
        cfg.tie_prob = o.tie;
        for (const CandidateList& l : data.lists)
            b.relevance.push_back(synthetic_relevance(cfg, l));
        b.oracle = std::make_unique<SyntheticPreferenceOracle>(cfg);
    } else if (o.kind == "cache") {
        if (!data.experiment)
            throw std::invalid_argument("--oracle cache needs --input with stored verdicts");
        b.relevance = data.experiment->scores_of(ScoreKind::Relevance);
        b.oracle = std::make_unique<CachedPreferenceOracle>(*data.experiment);
    } else if (o.kind == "llm") {
        LlmClientConfig cfg = LlmClientConfig::from_env();
        if (!o.endpoint.empty()) cfg.endpoint = o.endpoint;
        if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
        cfg.timeout_ms = o.timeout_ms;
        PromptTemplates prompts = o.prompts_dir.empty()
                                      ? PromptTemplates::builtin()
                                      : PromptTemplates::load_dir(o.prompts_dir);
        b.client = std::make_unique<LlmClient>(cfg, std::move(prompts));
        for (const CandidateList& l : data.lists)
            b.relevance.push_back(llm_relevance_scores(*b.client, l));
        b.oracle = std::make_unique<LlmPreferenceOracle>(*b.client);
    } else {
        throw std::invalid_argument("unknown oracle: " + o.kind);
    }
    return b;
}

PipelineConfig pipeline_config(const MethodOpts& m, int workers) {
    PipelineConfig cfg;
    cfg.method = selection_method_from_string(m.method);
    cfg.k = m.k;
    cfg.init = init_ranking_from_string(m.init);
    cfg.base = base_scores_from_string(m.base);
    cfg.solver.feasibility_tol = m.feasibility_tol;
    cfg.solver.max_cycles = m.max_cycles;
    cfg.workers = workers;
    return cfg;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

void write_text(const std::string& path, const std::string& content) {
    write_file_maybe_gz(path, content);
    std::cout << "wrote " << path << '\n';
}

fs::path ensure_out_dir(const GlobalOpts& g) {
    fs::path dir(g.out_dir);
    fs::create_directories(dir);
    return dir;
}

void print_aggregate(const EvalReport& rep) {
    std::cout << rep.method_name << ": ";
    for (const auto& [k, v] : rep.aggregate.ndcg) std::cout << "ndcg@" << k << "=" << fmt(v) << " ";
    std::cout << "mse=" << fmt(rep.aggregate.mse) << " ece=" << fmt(rep.aggregate.ece);
    if (rep.pooled_ece) std::cout << " pooled_ece=" << fmt(*rep.pooled_ece);
    std::cout << " (" << rep.per_query.size() << " queries";
    if (!rep.failures.empty()) std::cout << ", " << rep.failures.size() << " failed";
    std::cout << ")\n";
}

// Report rows extended with the per-query pipeline counters.
std::string consolidation_csv(const EvalReport& rep, const std::vector<CandidateList>& lists,
                              const PipelineResult& run) {
    std::map<std::string, const QueryOutcome*> by_query;
    for (std::size_t q = 0; q < lists.size(); ++q)
        if (run.outcomes[q]) by_query[lists[q].query_id] = &*run.outcomes[q];

    std::ostringstream os;
    os << "method,query_id";
    for (int k : rep.cutoffs) os << ",ndcg@" << k;
    os << ",mse,ece,oracle_calls,solve_ms,cycles\n";

    double total_calls = 0.0, total_ms = 0.0, total_cycles = 0.0;
    for (const auto& [qid, qm] : rep.per_query) {
        const QueryOutcome* o = by_query.at(qid);
        const double ms = o->solve_seconds * 1000.0;
        os << rep.method_name << ',' << qid;
        for (int k : rep.cutoffs) os << ',' << fmt(qm.ndcg.at(k));
        os << ',' << fmt(qm.mse) << ',' << fmt(qm.ece) << ',' << o->selection.pairs_queried
           << ',' << fmt(ms) << ',' << o->result.stats.cycles << '\n';
        total_calls += static_cast<double>(o->selection.pairs_queried);
        total_ms += ms;
        total_cycles += static_cast<double>(o->result.stats.cycles);
    }
    const double nq = rep.per_query.empty() ? 1.0 : static_cast<double>(rep.per_query.size());
    os << rep.method_name << ",ALL";
    for (int k : rep.cutoffs) os << ',' << fmt(rep.aggregate.ndcg.at(k));
    os << ',' << fmt(rep.aggregate.mse) << ',' << fmt(rep.aggregate.ece) << ','
       << fmt(total_calls) << ',' << fmt(total_ms / nq) << ',' << fmt(total_cycles / nq)
       << '\n';
    if (rep.pooled_ece) os << "# pooled_ece=" << fmt(*rep.pooled_ece) << '\n';
    for (const std::string& f : rep.failures) os << "# failed: " << f << '\n';
    return os.str();
}

json oracle_provenance(const OracleOpts& o) {
    json j{{"kind", o.kind}};
    if (o.kind == "synthetic") {
        j["sigma"] = o.sigma;
        j["flip"] = o.flip;
        j["tie"] = o.tie;
    }
    if (o.kind == "llm") j["endpoint"] = o.endpoint;
    return j;
}

int cmd_simulate(const GlobalOpts& g, const DatasetOpts& d, const std::string& out_file) {
    SyntheticDatasetConfig cfg;
    cfg.n_queries = d.gen_queries > 0 ? d.gen_queries : 50;
    cfg.list_size = d.gen_docs;
    cfg.max_grade = d.gen_max_grade;
    cfg.distinct_labels = d.gen_distinct;
    cfg.retrieval_noise_sigma = d.gen_retrieval_sigma;
    cfg.seed = g.seed;

    Experiment exp;
    exp.lists = make_synthetic_dataset(cfg);
    exp.scores.resize(exp.lists.size());
    exp.preferences.resize(exp.lists.size());
    exp.provenance = json{{"command", "simulate"},
                          {"seed", g.seed},
                          {"n_queries", cfg.n_queries},
                          {"list_size", cfg.list_size},
                          {"max_grade", cfg.max_grade},
                          {"distinct_labels", cfg.distinct_labels},
                          {"retrieval_noise_sigma", cfg.retrieval_noise_sigma}};

    const fs::path path = out_file.empty() ? ensure_out_dir(g) / "dataset.json"
                                           : fs::path(out_file);
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    save_experiment(path.string(), exp);
    std::cout << "wrote " << path.string() << '\n';
    std::cout << format_dataset_stats(dataset_stats(exp.lists));
    return 0;
}

int cmd_stats(const GlobalOpts& g, const DatasetOpts& d) {
    const Dataset data = load_dataset(d, g.seed);
    std::cout << format_dataset_stats(dataset_stats(data.lists));
    return 0;
}

int cmd_consolidate(const GlobalOpts& g, const DatasetOpts& d, const OracleOpts& o,
                    const MethodOpts& m, const EvalFlags& e, const std::string& out_file) {
    const Dataset data = load_dataset(d, g.seed);
    OracleBundle oracle = make_oracle(o, data, g.seed);
    const PipelineConfig cfg = pipeline_config(m, g.workers);

    const PipelineResult run =
        run_consolidation(data.lists, oracle.relevance, *oracle.oracle, cfg);

    Experiment exp;
    exp.lists = data.lists;
    exp.scores.resize(data.lists.size());
    exp.preferences.resize(data.lists.size());
    for (std::size_t q = 0; q < data.lists.size(); ++q) {
        exp.scores[q][ScoreKind::Relevance] = oracle.relevance[q].values;
        if (!run.outcomes[q]) {
            exp.preferences[q] = PreferenceSet(data.lists[q].query_id,
                                               static_cast<int>(data.lists[q].size()));
            continue;
        }
        const QueryOutcome& out = *run.outcomes[q];
        exp.scores[q][ScoreKind::Consolidated] = out.result.adjusted.values;
        if (out.wins) exp.scores[q][ScoreKind::PrpScore] = out.wins->values;
        exp.preferences[q] = out.selection.prefs;
    }
    exp.provenance = json{{"command", "consolidate"},
                          {"seed", g.seed},
                          {"method", m.method},
                          {"k", m.k},
                          {"init_ranking", m.init},
                          {"base", m.base},
                          {"oracle", oracle_provenance(o)}};

    const fs::path dir = ensure_out_dir(g);
    const fs::path exp_path = out_file.empty() ? dir / "experiment.json" : fs::path(out_file);
    if (!exp_path.parent_path().empty()) fs::create_directories(exp_path.parent_path());
    save_experiment(exp_path.string(), exp);
    std::cout << "wrote " << exp_path.string() << '\n';

    const bool labeled = !data.lists.empty() && data.lists.front().has_labels();
    if (labeled) {
        const EvalReport rep =
            evaluate_pipeline(data.lists, run,
                              eval_options(e, m.method, ScoreKind::Consolidated));
        const fs::path rep_path = dir / (g.format == "json" ? "report.json" : "report.csv");
        write_text(rep_path.string(),
                   g.format == "json" ? rep.to_json() : consolidation_csv(rep, data.lists, run));
        print_aggregate(rep);
    } else {
        std::cout << "dataset has no labels; skipping evaluation\n";
    }

    for (const std::string& f : run.failures) std::cerr << "failed: " << f << '\n';
    return run.failures.empty() ? 0 : 1;
}

int cmd_evaluate(const GlobalOpts& g, const DatasetOpts& d, const EvalFlags& e,
                 const std::string& kind_name, const std::string& baseline_name) {
    const Dataset data = load_dataset(d, g.seed);
    if (!data.experiment)
        throw std::invalid_argument("evaluate needs --input with stored scores");

    const ScoreKind kind = score_kind_from_string(kind_name);
    const std::vector<ScoreVector> scores = data.experiment->scores_of(kind);
    const EvalReport rep =
        evaluate_scores(data.lists, scores, eval_options(e, kind_name, kind));

    const fs::path dir = ensure_out_dir(g);
    const fs::path path =
        dir / ("report_" + kind_name + (g.format == "json" ? ".json" : ".csv"));
    write_text(path.string(), g.format == "json" ? rep.to_json() : rep.to_csv());
    print_aggregate(rep);

    if (!baseline_name.empty()) {
        const ScoreKind bkind = score_kind_from_string(baseline_name);
        const std::vector<ScoreVector> bscores = data.experiment->scores_of(bkind);
        const EvalReport brep =
            evaluate_scores(data.lists, bscores, eval_options(e, baseline_name, bkind));

        std::vector<double> a, b;
        for (const auto& [qid, qm] : rep.per_query) {
            const auto it = brep.per_query.find(qid);
            if (it == brep.per_query.end()) continue;
            a.push_back(qm.ndcg.at(rep.cutoffs.front()));
            b.push_back(it->second.ndcg.at(rep.cutoffs.front()));
        }
        const SignificanceResult sig = paired_significance(a, b);
        std::cout << "ndcg@" << rep.cutoffs.front() << " vs " << baseline_name
                  << ": t=" << fmt(sig.t_stat) << " p=" << fmt(sig.p_value)
                  << (sig.significant ? " (significant at 0.01)" : " (not significant)")
                  << '\n';
    }
    return 0;
}

int cmd_calibrate(const GlobalOpts& g, const DatasetOpts& d, const EvalFlags& e,
                  const std::string& kind_name, const std::string& method_name, int folds,
                  int knots, const std::string& out_file) {
    const Dataset data = load_dataset(d, g.seed);
    if (!data.experiment)
        throw std::invalid_argument("calibrate needs --input with stored scores");

    const ScoreKind kind = score_kind_from_string(kind_name);
    const CalibMethod method = calib_method_from_string(method_name);
    const std::vector<ScoreVector> raw = data.experiment->scores_of(kind);

    const CrossvalResult cv =
        crossval_calibrate(data.lists, raw, method, folds, g.seed, knots);
    for (const std::string& w : cv.warnings) std::cerr << "warning: " << w << '\n';

    Experiment exp = *data.experiment;
    for (std::size_t q = 0; q < exp.lists.size(); ++q)
        exp.scores[q][ScoreKind::Calibrated] = cv.calibrated[q].values;
    exp.provenance["calibration"] = json{{"source_kind", kind_name},
                                         {"method", method_name},
                                         {"folds", folds},
                                         {"knots", knots},
                                         {"seed", g.seed}};

    const fs::path dir = ensure_out_dir(g);
    const fs::path exp_path = out_file.empty() ? dir / "calibrated.json" : fs::path(out_file);
    if (!exp_path.parent_path().empty()) fs::create_directories(exp_path.parent_path());
    save_experiment(exp_path.string(), exp);
    std::cout << "wrote " << exp_path.string() << '\n';

    const std::string label = kind_name + "+" + method_name;
    const EvalReport rep = evaluate_scores(data.lists, cv.calibrated,
                                           eval_options(e, label, ScoreKind::Calibrated));
    const fs::path rep_path =
        dir / ("report_" + label + (g.format == "json" ? ".json" : ".csv"));
    write_text(rep_path.string(), g.format == "json" ? rep.to_json() : rep.to_csv());
    print_aggregate(rep);
    return 0;
}

int cmd_sweep(const GlobalOpts& g, const DatasetOpts& d, const EvalFlags& e, double w_min,
              double w_max, int points) {
    if (points < 1) throw std::invalid_argument("--points must be at least 1");
    if (!(w_min > 0.0) || !(w_max >= w_min))
        throw std::invalid_argument("need 0 < --w-min <= --w-max");

    const Dataset data = load_dataset(d, g.seed);
    if (!data.experiment)
        throw std::invalid_argument("sweep-ensemble needs --input with stored scores");
    const std::vector<ScoreVector> relevance =
        data.experiment->scores_of(ScoreKind::Relevance);
    const std::vector<ScoreVector> wins = data.experiment->scores_of(ScoreKind::PrpScore);

    std::vector<double> ws;
    ws.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        ws.push_back(w_min * std::pow(w_max / w_min, t));
    }

    const EvalOptions opts = eval_options(e, "ensemble", ScoreKind::Ensemble);
    const SweepResult sweep = sweep_ensemble(data.lists, relevance, wins, ws, opts);

    std::vector<std::pair<std::string, TradeoffPoint>> overlays;
    const auto overlay_of = [&](const char* label, ScoreKind kind) {
        std::vector<const ScoreVector*> ptrs(data.lists.size(), nullptr);
        std::vector<ScoreVector> held;
        held.reserve(data.lists.size());
        for (std::size_t q = 0; q < data.lists.size(); ++q) {
            const auto& per_query = data.experiment->scores[q];
            const auto it = per_query.find(kind);
            if (it == per_query.end()) return;  // kind not stored; skip overlay
            held.push_back({data.lists[q].query_id, kind, it->second});
        }
        for (std::size_t q = 0; q < held.size(); ++q) ptrs[q] = &held[q];
        const EvalReport rep =
            evaluate_scores(data.lists, ptrs, eval_options(e, label, kind));
        overlays.push_back(
            {label, {rep.aggregate.ndcg.at(opts.cutoffs.front()), rep.aggregate.ece}});
    };
    overlay_of("pointwise", ScoreKind::Relevance);
    overlay_of("win counts", ScoreKind::PrpScore);
    overlay_of("consolidated", ScoreKind::Consolidated);

    std::ostringstream csv;
    csv << "w,ndcg@" << opts.cutoffs.front() << ",ece,pareto\n";
    std::vector<bool> on_front(sweep.points.size(), false);
    for (std::size_t i : sweep.front) on_front[i] = true;
    for (std::size_t i = 0; i < sweep.points.size(); ++i)
        csv << fmt(sweep.ws[i]) << ',' << fmt(sweep.points[i].ndcg) << ','
            << fmt(sweep.points[i].ece) << ',' << (on_front[i] ? 1 : 0) << '\n';
    for (const auto& [name, p] : overlays)
        csv << "# " << name << ": ndcg=" << fmt(p.ndcg) << " ece=" << fmt(p.ece) << '\n';

    const fs::path dir = ensure_out_dir(g);
    write_text((dir / "ensemble_sweep.csv").string(), csv.str());
    write_text((dir / "ensemble_tradeoff.svg").string(),
               svg_tradeoff_plot(sweep.points, sweep.front, overlays,
                                 "ranking accuracy vs calibration"));
    std::cout << sweep.front.size() << " of " << sweep.points.size()
              << " sweep points on the Pareto front\n";
    return 0;
}

int cmd_ablate(const GlobalOpts& g, const DatasetOpts& d, const OracleOpts& o,
               const MethodOpts& m, const EvalFlags& e, std::vector<int> k_list) {
    const Dataset data = load_dataset(d, g.seed);
    OracleBundle oracle = make_oracle(o, data, g.seed);
    if (k_list.empty()) k_list = {2, 5, 10, 20};

    std::ostringstream csv;
    const int cutoff = e.cutoffs.front();
    csv << "method,init,base,k,ndcg@" << cutoff << ",mse,ece,failed\n";

    const auto run_row = [&](SelectionMethod method, InitRanking init, BaseScores base,
                             int k) {
        PipelineConfig cfg = pipeline_config(m, g.workers);
        cfg.method = method;
        cfg.init = init;
        cfg.base = base;
        cfg.k = k;
        const PipelineResult run =
            run_consolidation(data.lists, oracle.relevance, *oracle.oracle, cfg);
        for (const std::string& f : run.failures) std::cerr << "failed: " << f << '\n';
        const EvalReport rep = evaluate_pipeline(
            data.lists, run, eval_options(e, to_string(method), ScoreKind::Consolidated));
        csv << to_string(method) << ',' << to_string(init) << ',' << to_string(base) << ','
            << k << ',' << fmt(rep.aggregate.ndcg.at(cutoff)) << ','
            << fmt(rep.aggregate.mse) << ',' << fmt(rep.aggregate.ece) << ','
            << run.failures.size() << '\n';
    };

    // Initialization/base grid for the budgeted methods at the default k.
    for (SelectionMethod method : {SelectionMethod::SlideWin, SelectionMethod::TopAll})
        for (InitRanking init : {InitRanking::Retrieval, InitRanking::Relevance})
            for (BaseScores base : {BaseScores::Relevance, BaseScores::Retrieval})
                run_row(method, init, base, m.k);

    // Budget sweep at the default initialization; allpair as the reference.
    run_row(SelectionMethod::Allpair, InitRanking::Auto, BaseScores::Relevance, m.k);
    for (int k : k_list) {
        run_row(SelectionMethod::SlideWin, InitRanking::Auto, BaseScores::Relevance, k);
        run_row(SelectionMethod::TopAll, InitRanking::Auto, BaseScores::Relevance, k);
    }

    const fs::path dir = ensure_out_dir(g);
    write_text((dir / "ablation.csv").string(), csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"consolidates pointwise relevance scores with pairwise preferences"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "root seed for all randomness")->capture_default_str();
    app.add_option("--workers", g.workers, "worker threads, 0 = hardware")
        ->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--format", g.format, "report format: csv or json")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));

    auto* sim = app.add_subcommand("simulate", "write a synthetic labeled dataset");
    DatasetOpts sim_d;
    std::string sim_out;
    sim->add_option("--gen-queries", sim_d.gen_queries, "number of queries")
        ->capture_default_str();
    sim->add_option("--gen-docs", sim_d.gen_docs, "list size")->capture_default_str();
    sim->add_option("--gen-max-grade", sim_d.gen_max_grade, "label ceiling")
        ->capture_default_str();
    sim->add_flag("--gen-distinct", sim_d.gen_distinct, "one doc per grade 0..n-1");
    sim->add_option("--gen-retrieval-sigma", sim_d.gen_retrieval_sigma,
                    "noise on the synthetic retrieval order")
        ->capture_default_str();
    sim->add_option("--out", sim_out, "output file (default <out-dir>/dataset.json)");

    auto* con = app.add_subcommand("consolidate", "run the full consolidation pipeline");
    DatasetOpts con_d;
    OracleOpts con_o;
    MethodOpts con_m;
    EvalFlags con_e;
    std::string con_out;
    add_dataset_flags(con, con_d);
    add_oracle_flags(con, con_o);
    add_method_flags(con, con_m);
    add_eval_flags(con, con_e);
    con->add_option("--out", con_out, "experiment file (default <out-dir>/experiment.json)");

    auto* ev = app.add_subcommand("evaluate", "recompute metrics for stored scores");
    DatasetOpts ev_d;
    EvalFlags ev_e;
    std::string ev_kind = "consolidated", ev_baseline;
    add_dataset_flags(ev, ev_d);
    add_eval_flags(ev, ev_e);
    ev->add_option("--kind", ev_kind, "score kind to evaluate")->capture_default_str();
    ev->add_option("--baseline-kind", ev_baseline,
                   "second kind for a paired significance test");

    auto* cal = app.add_subcommand("calibrate", "cross-fit a monotone calibration map");
    DatasetOpts cal_d;
    EvalFlags cal_e;
    std::string cal_kind = "prp_score", cal_method = "pwl", cal_out;
    int cal_folds = 4, cal_knots = 10;
    add_dataset_flags(cal, cal_d);
    add_eval_flags(cal, cal_e);
    cal->add_option("--kind", cal_kind, "score kind to calibrate")->capture_default_str();
    cal->add_option("--calib-method", cal_method, "pwl or platt")->capture_default_str();
    cal->add_option("--folds", cal_folds, "cross-validation folds")->capture_default_str();
    cal->add_option("--knots", cal_knots, "piecewise-linear knots")->capture_default_str();
    cal->add_option("--out", cal_out, "experiment file (default <out-dir>/calibrated.json)");

    auto* sw = app.add_subcommand("sweep-ensemble",
                                  "trade accuracy against calibration by mixing weight");
    DatasetOpts sw_d;
    EvalFlags sw_e;
    double sw_min = 0.01, sw_max = 100.0;
    int sw_points = 20;
    add_dataset_flags(sw, sw_d);
    add_eval_flags(sw, sw_e);
    sw->add_option("--w-min", sw_min, "smallest mixing weight")->capture_default_str();
    sw->add_option("--w-max", sw_max, "largest mixing weight")->capture_default_str();
    sw->add_option("--points", sw_points, "geometric grid size")->capture_default_str();

    auto* ab = app.add_subcommand("ablate", "initialization and budget grids");
    DatasetOpts ab_d;
    OracleOpts ab_o;
    MethodOpts ab_m;
    EvalFlags ab_e;
    std::vector<int> ab_ks;
    add_dataset_flags(ab, ab_d);
    add_oracle_flags(ab, ab_o);
    add_method_flags(ab, ab_m);
    add_eval_flags(ab, ab_e);
    ab->add_option("--k-list", ab_ks, "budget values to sweep (default 2 5 10 20)");

    auto* st = app.add_subcommand("stats", "describe a dataset");
    DatasetOpts st_d;
    add_dataset_flags(st, st_d);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(g, sim_d, sim_out);
        if (con->parsed()) return cmd_consolidate(g, con_d, con_o, con_m, con_e, con_out);
        if (ev->parsed()) return cmd_evaluate(g, ev_d, ev_e, ev_kind, ev_baseline);
        if (cal->parsed())
            return cmd_calibrate(g, cal_d, cal_e, cal_kind, cal_method, cal_folds, cal_knots,
                                 cal_out);
        if (sw->parsed()) return cmd_sweep(g, sw_d, sw_e, sw_min, sw_max, sw_points);
        if (ab->parsed()) return cmd_ablate(g, ab_d, ab_o, ab_m, ab_e, ab_ks);
        if (st->parsed()) return cmd_stats(g, st_d);
    } catch (const std::exception& e) {
        std::cerr << "rankconsol: error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
