#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include <json.hpp>

#include "rankconsol/metrics.hpp"
#include "rankconsol/random.hpp"

using namespace rankconsol;

TEST_CASE("mse matches the hand-computed fixture") {
    CHECK(mse({1.0, 0.0}, {0.8, 0.4}) == doctest::Approx(0.10).epsilon(1e-9));
    CHECK(mse({0.5, 0.5}, {0.5, 0.5}) == 0.0);
    CHECK_THROWS_AS(mse({1.0}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(mse({}, {}), std::invalid_argument);
}

TEST_CASE("ece matches the two-bin fixture") {
    CHECK(ece({1.0, 0.0}, {0.8, 0.4}, 2) == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("ece with one bin per doc is the mean absolute error") {
    DetRng rng(hash_seed(3, "ecemae"));
    std::vector<double> y(37), p(37);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.uniform();
        p[i] = rng.uniform();
    }
    double mae = 0;
    for (std::size_t i = 0; i < y.size(); ++i) mae += std::abs(y[i] - p[i]);
    mae /= static_cast<double>(y.size());
    CHECK(ece(y, p, static_cast<int>(y.size())) == doctest::Approx(mae).epsilon(1e-12));
}

TEST_CASE("ece splits uneven bins deterministically and validates sizes") {
    // n=5, bins=2: first bin takes 3 docs, second takes 2. Preds descending
    // already; equal preds keep index order.
    std::vector<double> y{1, 1, 0, 1, 0};
    std::vector<double> p{0.9, 0.9, 0.9, 0.2, 0.2};
    // bin1 = docs 0,1,2: |2 - 2.7| = 0.7 ; bin2 = docs 3,4: |1 - 0.4| = 0.6
    CHECK(ece(y, p, 2) == doctest::Approx((0.7 + 0.6) / 5.0).epsilon(1e-9));
    CHECK_THROWS_AS(ece(y, p, 6), std::invalid_argument);
    CHECK_THROWS_AS(ece(y, p, 0), std::invalid_argument);
}

TEST_CASE("ndcg matches the worked three-doc fixture") {
    std::vector<int> labels{3, 2, 0};
    auto rk = Ranking::from_sorted("q", {1, 0, 2});  // doc2 first, then doc1, doc3
    const double dcg = 3.0 + 7.0 / std::log2(3.0);
    const double idcg = 7.0 + 3.0 / std::log2(3.0);
    CHECK(ndcg_at_k(labels, rk, 3) == doctest::Approx(dcg / idcg).epsilon(1e-12));
    CHECK(ndcg_at_k(labels, rk, 3) == doctest::Approx(0.8340).epsilon(2e-4));
}

TEST_CASE("ndcg conventions: ideal order, zero labels, cutoff clamping") {
    std::vector<int> labels{0, 1, 2};
    auto best = Ranking::from_sorted("q", {2, 1, 0});
    CHECK(ndcg_at_k(labels, best, 3) == 1.0);
    CHECK(ndcg_at_k({0, 0, 0}, best, 3) == 1.0);
    CHECK(ndcg_at_k(labels, best, 10) == 1.0);  // k beyond n clamps
    auto worst = Ranking::from_sorted("q", {0, 1, 2});
    CHECK(ndcg_at_k(labels, worst, 1) == 0.0);  // top doc has grade 0
    CHECK_THROWS_AS(ndcg_at_k(labels, best, 0), std::invalid_argument);
    CHECK_THROWS_AS(ndcg_at_k({0, 1}, best, 1), std::invalid_argument);
}

TEST_CASE("ndcg stays within the unit interval") {
    DetRng rng(hash_seed(5, "ndcgrange"));
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(20));
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int& l : labels) l = static_cast<int>(rng.uniform_int(4));
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        double v = ndcg_at_k(labels, Ranking::from_sorted("q", idx), 10);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("global rescale maps the collection range onto the target interval") {
    std::vector<ScoreVector> preds;
    ScoreVector a{"q1", ScoreKind::Consolidated, {0.0, 25.0, 99.0}};
    ScoreVector b{"q2", ScoreKind::Consolidated, {50.0, 75.0}};
    preds.push_back(a);
    preds.push_back(b);
    auto out = rescale_global(preds, 0.0, 1.0);
    CHECK_FALSE(out.constant_input);
    CHECK(out.scores[0].values[0] == doctest::Approx(0.0));
    CHECK(out.scores[0].values[1] == doctest::Approx(25.0 / 99.0).epsilon(1e-12));
    CHECK(out.scores[0].values[2] == doctest::Approx(1.0));
    CHECK(out.scores[1].values[0] == doctest::Approx(50.0 / 99.0).epsilon(1e-12));
}

TEST_CASE("constant predictions rescale to the midpoint with a flag") {
    std::vector<ScoreVector> preds{{"q1", ScoreKind::Consolidated, {2.0, 2.0}},
                                   {"q2", ScoreKind::Consolidated, {2.0}}};
    auto out = rescale_global(preds, 0.0, 1.0);
    CHECK(out.constant_input);
    for (const auto& sv : out.scores)
        for (double v : sv.values) CHECK(v == doctest::Approx(0.5));
    CHECK_THROWS_AS(rescale_global({}, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("rescaling preserves the argsort of every vector") {
    DetRng rng(hash_seed(9, "argsort"));
    std::vector<ScoreVector> preds;
    for (int q = 0; q < 50; ++q) {
        ScoreVector sv{"q" + std::to_string(q), ScoreKind::Consolidated, {}};
        const int n = 2 + static_cast<int>(rng.uniform_int(30));
        for (int i = 0; i < n; ++i) sv.values.push_back(rng.gaussian() * 10.0);
        preds.push_back(std::move(sv));
    }
    auto out = rescale_global(preds, 0.0, 1.0);
    for (std::size_t q = 0; q < preds.size(); ++q)
        for (std::size_t i = 0; i < preds[q].values.size(); ++i)
            for (std::size_t j = 0; j < preds[q].values.size(); ++j)
                if (preds[q].values[i] < preds[q].values[j])
                    CHECK(out.scores[q].values[i] < out.scores[q].values[j] + 1e-15);
}

TEST_CASE("ensemble matches the fixture and normalizes by list size") {
    ScoreVector y{"q", ScoreKind::Relevance, {0.2, 0.8}};
    ScoreVector s{"q", ScoreKind::PrpScore, {1.0, 0.0}};
    auto e = ensemble(y, s, 0.5);
    CHECK(e.kind == ScoreKind::Ensemble);
    CHECK(e.values[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(e.values[1] == doctest::Approx(0.8).epsilon(1e-12));

    auto id = ensemble(y, s, 0.0);
    CHECK(id.values == y.values);

    // Three docs: win counts scale by 1/(n-1) = 1/2.
    ScoreVector y3{"q", ScoreKind::Relevance, {0.0, 0.0, 0.0}};
    ScoreVector s3{"q", ScoreKind::PrpScore, {2.0, 1.0, 0.0}};
    auto e3 = ensemble(y3, s3, 1.0);
    CHECK(e3.values == std::vector<double>{1.0, 0.5, 0.0});

    // Single doc: no pairs exist, the win term vanishes.
    ScoreVector y1{"q", ScoreKind::Relevance, {0.4}};
    ScoreVector s1{"q", ScoreKind::PrpScore, {0.0}};
    CHECK(ensemble(y1, s1, 100.0).values == std::vector<double>{0.4});

    CHECK_THROWS_AS(ensemble(y, s3, 0.5), std::invalid_argument);
}

TEST_CASE("pareto front keeps exactly the non-dominated points") {
    std::vector<TradeoffPoint> pts{{0.9, 0.1}, {0.8, 0.2}, {0.85, 0.05}};
    CHECK(pareto_front(pts) == std::vector<std::size_t>{0, 2});

    // Exact duplicates never dominate each other.
    std::vector<TradeoffPoint> dup{{0.5, 0.5}, {0.5, 0.5}};
    CHECK(pareto_front(dup) == std::vector<std::size_t>{0, 1});

    CHECK(pareto_front({}).empty());
    CHECK(pareto_front({{0.3, 0.9}}) == std::vector<std::size_t>{0});
}

TEST_CASE("student t tail probabilities match frozen references") {
    CHECK(student_t_two_sided_p(2.0, 10) == doctest::Approx(0.073388034770740).epsilon(1e-10));
    CHECK(student_t_two_sided_p(1.0, 5) == doctest::Approx(0.363217467649123).epsilon(1e-10));
    CHECK(student_t_two_sided_p(3.5, 29) == doctest::Approx(0.001524446314655).epsilon(1e-9));
    CHECK(student_t_two_sided_p(0.5, 49) == doctest::Approx(0.619313186210131).epsilon(1e-10));
    CHECK(student_t_two_sided_p(2.75, 3) == doctest::Approx(0.070742248286041).epsilon(1e-10));
    CHECK(student_t_two_sided_p(0.0, 7) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(student_t_two_sided_p(-2.0, 10) ==
          doctest::Approx(student_t_two_sided_p(2.0, 10)).epsilon(1e-12));
}

TEST_CASE("ibeta behaves like a CDF in x and respects symmetry") {
    CHECK(ibeta(2.0, 3.0, 0.0) == 0.0);
    CHECK(ibeta(2.0, 3.0, 1.0) == 1.0);
    DetRng rng(hash_seed(15, "ibeta"));
    double prev = 0.0;
    for (int i = 1; i <= 20; ++i) {
        double v = ibeta(2.5, 1.5, i / 20.0);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    for (int trial = 0; trial < 20; ++trial) {
        double a = 0.5 + 4.0 * rng.uniform();
        double b = 0.5 + 4.0 * rng.uniform();
        double x = rng.uniform();
        CHECK(ibeta(a, b, x) == doctest::Approx(1.0 - ibeta(b, a, 1.0 - x)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(ibeta(0.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("paired t-test matches the frozen eight-query fixture") {
    std::vector<double> a{0.71, 0.64, 0.80, 0.55, 0.69, 0.73, 0.61, 0.77};
    std::vector<double> b{0.68, 0.66, 0.75, 0.52, 0.64, 0.70, 0.63, 0.71};
    auto res = paired_significance(a, b, 0.05);
    CHECK(res.t_stat == doctest::Approx(2.420265483265764).epsilon(1e-9));
    CHECK(res.p_value == doctest::Approx(0.046074211569536).epsilon(1e-9));
    CHECK(res.significant);
    CHECK_FALSE(res.degenerate);
    CHECK_FALSE(paired_significance(a, b, 0.01).significant);
}

TEST_CASE("zero-variance differences are flagged degenerate") {
    std::vector<double> a{0.5, 0.6, 0.7};
    auto equal = paired_significance(a, a, 0.01);
    CHECK(equal.degenerate);
    CHECK(equal.p_value == 1.0);
    CHECK_FALSE(equal.significant);

    std::vector<double> lo{1.0, 2.0, 4.0};
    std::vector<double> hi{2.0, 3.0, 5.0};  // differences exactly 1
    auto off = paired_significance(hi, lo, 0.01);
    CHECK(off.degenerate);
    CHECK(off.p_value == 0.0);
    CHECK(off.significant);

    CHECK_THROWS_AS(paired_significance({0.1}, {0.2}, 0.01), std::invalid_argument);
}

TEST_CASE("null data rejects at roughly the nominal rate") {
    int rejections = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        DetRng rng(hash_seed(21, "null", t));
        std::vector<double> a(20), b(20);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.gaussian();
            b[i] = rng.gaussian();
        }
        if (paired_significance(a, b, 0.01).significant) ++rejections;
    }
    CHECK(rejections >= 1);
    CHECK(rejections <= 20);  // nominal 1% of 1000, allow +/- 1%
}

TEST_CASE("report aggregation averages per-query metrics") {
    EvalReport rep;
    rep.method_name = "m";
    rep.cutoffs = {10};
    rep.per_query["q1"] = QueryMetrics{{{10, 1.0}}, 0.1, 0.2};
    rep.per_query["q2"] = QueryMetrics{{{10, 0.5}}, 0.3, 0.4};
    rep.finalize();
    CHECK(rep.aggregate.ndcg[10] == doctest::Approx(0.75));
    CHECK(rep.aggregate.mse == doctest::Approx(0.2));
    CHECK(rep.aggregate.ece == doctest::Approx(0.3).epsilon(1e-12));

    rep.pooled_ece = 0.25;
    rep.failures.push_back("q9: no scores");
    auto csv = rep.to_csv();
    CHECK(csv.find("method,query_id,ndcg@10,mse,ece") != std::string::npos);
    CHECK(csv.find("m,ALL") != std::string::npos);
    CHECK(csv.find("# pooled_ece=0.25") != std::string::npos);
    CHECK(csv.find("# failed: q9: no scores") != std::string::npos);

    auto parsed = nlohmann::json::parse(rep.to_json());
    CHECK(parsed["method"] == "m");
    CHECK(parsed["aggregate"]["ndcg@10"].get<double>() == doctest::Approx(0.75));
    CHECK(parsed["per_query"]["q2"]["mse"].get<double>() == doctest::Approx(0.3));
    CHECK(parsed["failures"].size() == 1);
}
