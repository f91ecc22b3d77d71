#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "rankconsol/data_io.hpp"

using namespace rankconsol;
using rctest::make_list;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("rankconsol_io_" + std::to_string(counter.fetch_add(1)) + "_" +
                std::to_string(static_cast<unsigned>(::getpid())));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("qrels parsing: grades, duplicate handling, clamping") {
    TempDir tmp;
    auto p = tmp.file("qrels.txt");
    write_text(p,
               "q1 0 d1 2\n"
               "q1 0 d2 0\n"
               "\n"
               "q2 0 d1 1\n"
               "q2 0 d1 3\n"
               "q3 0 d9 -1\n");
    auto res = load_qrels(p);
    CHECK(res.grades.at("q1").at("d1") == 2);
    CHECK(res.grades.at("q1").at("d2") == 0);
    CHECK(res.grades.at("q2").at("d1") == 3);  // last duplicate wins
    CHECK(res.grades.at("q3").at("d9") == 0);  // clamped
    CHECK(any_contains(res.warnings, "duplicate"));
    CHECK(any_contains(res.warnings, "clamped"));
}

TEST_CASE("malformed qrels lines report their line number") {
    TempDir tmp;
    auto p = tmp.file("bad.txt");
    write_text(p, "q1 0 d1 2\nq1 0 d2\n");
    try {
        load_qrels(p);
        FAIL("expected parse error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    auto p2 = tmp.file("badgrade.txt");
    write_text(p2, "q1 0 d1 high\n");
    try {
        load_qrels(p2);
        FAIL("expected parse error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
        CHECK(std::string(e.what()).find("high") != std::string::npos);
    }
}

TEST_CASE("run files order docs by score and densify the ranks") {
    TempDir tmp;
    auto p = tmp.file("run.txt");
    write_text(p,
               "q2 Q0 d1 1 3.5 tag\n"
               "q1 Q0 d3 7 1.0 tag\n"
               "q1 Q0 d1 2 9.0 tag\n"
               "q1 Q0 d2 4 5.0 tag\n");
    auto lists = load_run(p);
    REQUIRE(lists.size() == 2);
    CHECK(lists[0].query_id == "q1");
    REQUIRE(lists[0].size() == 3);
    CHECK(lists[0].docs[0].doc_id == "d1");
    CHECK(lists[0].docs[1].doc_id == "d2");
    CHECK(lists[0].docs[2].doc_id == "d3");
    CHECK(lists[0].initial_rank == std::vector<int>{1, 2, 3});  // gaps closed
    CHECK(lists[0].retrieval_scores == std::vector<double>{9.0, 5.0, 1.0});
    CHECK(lists[1].query_id == "q2");
    CHECK(lists[1].size() == 1);
    CHECK_FALSE(lists[0].has_labels());
}

TEST_CASE("run score ties fall back to run rank, then doc id") {
    TempDir tmp;
    auto p = tmp.file("ties.txt");
    write_text(p,
               "q1 Q0 da 2 1.0 t\n"
               "q1 Q0 db 1 1.0 t\n"
               "q1 Q0 dc 3 1.0 t\n");
    auto lists = load_run(p);
    REQUIRE(lists.size() == 1);
    CHECK(lists[0].docs[0].doc_id == "db");
    CHECK(lists[0].docs[1].doc_id == "da");
    CHECK(lists[0].docs[2].doc_id == "dc");
}

TEST_CASE("run lists are cut to the top_n best-scored docs") {
    TempDir tmp;
    auto p = tmp.file("cut.txt");
    std::string content;
    for (int d = 0; d < 6; ++d)
        content += "q1 Q0 doc" + std::to_string(d) + " " + std::to_string(d + 1) + " " +
                   std::to_string(10 - d) + ".0 t\n";
    write_text(p, content);
    auto lists = load_run(p, 4);
    REQUIRE(lists.size() == 1);
    REQUIRE(lists[0].size() == 4);
    CHECK(lists[0].docs[0].doc_id == "doc0");
    CHECK(lists[0].docs[3].doc_id == "doc3");
    CHECK(lists[0].initial_rank == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("duplicate run docs and short lines are hard errors") {
    TempDir tmp;
    auto p = tmp.file("dup.txt");
    write_text(p, "q1 Q0 d1 1 2.0 t\nq1 Q0 d1 2 1.0 t\n");
    try {
        load_run(p);
        FAIL("expected duplicate error");
    } catch (const std::exception& e) {
        std::string msg = e.what();
        CHECK(msg.find("duplicate doc") != std::string::npos);
        CHECK(msg.find("d1") != std::string::npos);
    }

    auto p2 = tmp.file("short.txt");
    write_text(p2, "q1 Q0 d1 1 2.0\n");
    CHECK_THROWS(load_run(p2));
}

TEST_CASE("apply_qrels fills labels with zero default and a global ceiling") {
    TempDir tmp;
    auto runp = tmp.file("run.txt");
    write_text(runp,
               "q1 Q0 d1 1 2.0 t\n"
               "q1 Q0 d2 2 1.0 t\n"
               "q2 Q0 d1 1 2.0 t\n");
    auto lists = load_run(runp);
    Qrels qrels;
    qrels["q1"]["d1"] = 3;
    qrels["qx"]["whatever"] = 2;  // contributes to the ceiling only
    auto warnings = apply_qrels(lists, qrels);
    CHECK(lists[0].labels == std::vector<int>{3, 0});
    CHECK(lists[0].max_grade == 3);
    CHECK(lists[0].normalized_labels[0] == doctest::Approx(1.0));
    CHECK(lists[1].labels == std::vector<int>{0});
    CHECK(lists[1].max_grade == 3);
    CHECK(any_contains(warnings, "q2"));
    CHECK(any_contains(warnings, "no qrels"));
}

TEST_CASE("gzip files round-trip and mislabeled content is sniffed") {
    TempDir tmp;
    const std::string content = "line one\nline two\nsome text\n";
    auto gz = tmp.file("data.txt.gz");
    write_file_maybe_gz(gz, content);
    {
        std::ifstream in(gz, std::ios::binary);
        char magic[2] = {0, 0};
        in.read(magic, 2);
        CHECK(static_cast<unsigned char>(magic[0]) == 0x1f);
        CHECK(static_cast<unsigned char>(magic[1]) == 0x8b);
    }
    CHECK(read_file_maybe_gz(gz) == content);

    // Same bytes under a name without the .gz suffix still load.
    auto disguised = tmp.file("data.txt");
    fs::copy_file(gz, disguised);
    CHECK(read_file_maybe_gz(disguised) == content);

    auto plain = tmp.file("plain.txt");
    write_file_maybe_gz(plain, content);
    CHECK(read_file_maybe_gz(plain) == content);

    CHECK_THROWS(read_file_maybe_gz(tmp.file("missing.txt")));
}

TEST_CASE("gzipped qrels load transparently") {
    TempDir tmp;
    auto p = tmp.file("qrels.txt.gz");
    write_file_maybe_gz(p, "q1 0 d1 2\nq1 0 d2 1\n");
    auto res = load_qrels(p);
    CHECK(res.grades.at("q1").at("d2") == 1);
}

TEST_CASE("dataset stats summarize sizes and label alphabets") {
    std::vector<CandidateList> lists{make_list("q1", {0, 1, 3}, 3),
                                     make_list("q2", {2, 2}, 3)};
    auto s = dataset_stats(lists);
    CHECK(s.n_queries == 2);
    CHECK(s.has_labels);
    CHECK(s.label_alphabet == std::set<int>{0, 1, 2, 3});
    CHECK(s.mean_list_length == doctest::Approx(2.5));
    auto text = format_dataset_stats(s);
    CHECK(text.find("queries") != std::string::npos);

    std::vector<CandidateList> bare{rctest::make_unlabeled("q1", 3)};
    auto s2 = dataset_stats(bare);
    CHECK_FALSE(s2.has_labels);
    CHECK(format_dataset_stats(s2).find("unjudged") != std::string::npos);
}

namespace {

Experiment sample_experiment() {
    Experiment exp;
    exp.provenance["tool"] = "test";
    exp.provenance["seed"] = 7;

    auto cl1 = make_list("q1", {0, 2, 3}, 3);
    cl1.query_text = "first query";
    cl1.docs[0].text = "alpha";
    cl1.retrieval_scores = {3.0, 2.0, 1.0};
    exp.lists.push_back(cl1);
    exp.lists.push_back(make_list("q2", {1, 0}, 3));

    exp.scores.resize(2);
    exp.scores[0][ScoreKind::Relevance] = {0.1, 0.6, 0.9};
    exp.scores[0][ScoreKind::Consolidated] = {0.15, 0.6, 0.9};
    exp.scores[1][ScoreKind::Relevance] = {0.4, 0.2};

    PreferenceSet p1("q1", 3);
    p1.add(0, 1, Verdict::JWins);
    p1.add(1, 2, Verdict::Inconsistent);
    exp.preferences.push_back(p1);
    exp.preferences.emplace_back("q2", 2);
    return exp;
}

void check_same(const Experiment& a, const Experiment& b) {
    CHECK(a.provenance == b.provenance);
    REQUIRE(a.lists.size() == b.lists.size());
    for (std::size_t q = 0; q < a.lists.size(); ++q) {
        CHECK(a.lists[q].query_id == b.lists[q].query_id);
        CHECK(a.lists[q].query_text == b.lists[q].query_text);
        CHECK(a.lists[q].labels == b.lists[q].labels);
        CHECK(a.lists[q].normalized_labels == b.lists[q].normalized_labels);
        CHECK(a.lists[q].initial_rank == b.lists[q].initial_rank);
        CHECK(a.lists[q].retrieval_scores == b.lists[q].retrieval_scores);
        CHECK(a.lists[q].max_grade == b.lists[q].max_grade);
        REQUIRE(a.lists[q].size() == b.lists[q].size());
        for (std::size_t d = 0; d < a.lists[q].size(); ++d) {
            CHECK(a.lists[q].docs[d].doc_id == b.lists[q].docs[d].doc_id);
            CHECK(a.lists[q].docs[d].text == b.lists[q].docs[d].text);
        }
    }
    CHECK(a.scores == b.scores);
    REQUIRE(a.preferences.size() == b.preferences.size());
    for (std::size_t q = 0; q < a.preferences.size(); ++q) {
        REQUIRE(a.preferences[q].size() == b.preferences[q].size());
        for (const Preference& p : a.preferences[q].prefs()) {
            auto v = b.preferences[q].find(p.i, p.j);
            REQUIRE(v.has_value());
            CHECK(*v == p.verdict);
        }
    }
}

}  // namespace

TEST_CASE("experiments round-trip through JSON exactly") {
    auto exp = sample_experiment();
    auto loaded = experiment_from_json(experiment_to_json(exp));
    check_same(exp, loaded);
}

TEST_CASE("experiments round-trip through plain and gzipped files") {
    TempDir tmp;
    auto exp = sample_experiment();
    auto plain = tmp.file("exp.json");
    save_experiment(plain, exp);
    check_same(exp, load_experiment(plain));

    auto gz = tmp.file("exp.json.gz");
    save_experiment(gz, exp);
    check_same(exp, load_experiment(gz));
}

TEST_CASE("scores_of yields aligned vectors and names missing queries") {
    auto exp = sample_experiment();
    auto rel = exp.scores_of(ScoreKind::Relevance);
    REQUIRE(rel.size() == 2);
    CHECK(rel[0].query_id == "q1");
    CHECK(rel[0].kind == ScoreKind::Relevance);
    CHECK(rel[1].values == std::vector<double>{0.4, 0.2});
    try {
        exp.scores_of(ScoreKind::Consolidated);  // q2 lacks it
        FAIL("expected error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("q2") != std::string::npos);
    }
}

TEST_CASE("schema violations carry the JSON path of the offender") {
    auto doc = experiment_to_json(sample_experiment());

    auto bad = doc;
    bad["queries"][0]["docs"][1]["label"] = "high";
    try {
        experiment_from_json(bad);
        FAIL("expected schema error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("queries[0].docs[1].label") != std::string::npos);
    }

    bad = doc;
    bad["format"] = "something-else";
    CHECK_THROWS_WITH_AS(experiment_from_json(bad),
                         doctest::Contains("not a rankconsol experiment"),
                         std::runtime_error);

    bad = doc;
    bad["version"] = 2;
    CHECK_THROWS_WITH_AS(experiment_from_json(bad), doctest::Contains("version"),
                         std::runtime_error);

    bad = doc;
    bad.erase("queries");
    CHECK_THROWS_WITH_AS(experiment_from_json(bad), doctest::Contains("queries"),
                         std::runtime_error);

    bad = doc;
    bad["queries"][0]["docs"][0].erase("label");  // label on some docs only
    CHECK_THROWS_WITH_AS(experiment_from_json(bad),
                         doctest::Contains("all docs or none"), std::runtime_error);

    bad = doc;
    bad["queries"][0].erase("max_grade");
    CHECK_THROWS_WITH_AS(experiment_from_json(bad), doctest::Contains("max_grade"),
                         std::runtime_error);

    bad = doc;
    bad["queries"][0]["preferences"][0]["i"] = 7;
    CHECK_THROWS_WITH_AS(experiment_from_json(bad), doctest::Contains("out of range"),
                         std::runtime_error);
}

TEST_CASE("unknown fields and score kinds are ignored") {
    auto doc = experiment_to_json(sample_experiment());
    doc["extra_top_level"] = 42;
    doc["queries"][0]["unknown_field"] = "x";
    doc["queries"][0]["scores"]["mystery_kind"] = {1, 2, 3};
    auto exp = experiment_from_json(doc);
    CHECK(exp.scores[0].count(ScoreKind::Relevance) == 1);
    CHECK(exp.scores[0].size() == 2);  // relevance + consolidated, mystery dropped
}

TEST_CASE("initial_rank defaults to list order when absent") {
    nlohmann::json doc;
    doc["format"] = "rankconsol-experiment";
    doc["version"] = 1;
    doc["queries"] = nlohmann::json::array();
    nlohmann::json q;
    q["query_id"] = "q1";
    q["docs"] = nlohmann::json::array({{{"doc_id", "a"}}, {{"doc_id", "b"}}});
    doc["queries"].push_back(q);
    auto exp = experiment_from_json(doc);
    REQUIRE(exp.lists.size() == 1);
    CHECK(exp.lists[0].initial_rank == std::vector<int>{1, 2});
    CHECK_FALSE(exp.lists[0].has_labels());
}

TEST_CASE("dataset-level violations in a file are rejected with context") {
    auto doc = experiment_to_json(sample_experiment());
    doc["queries"][0]["docs"][1]["doc_id"] = "d1";  // duplicate within q1
    CHECK_THROWS_WITH_AS(experiment_from_json(doc),
                         doctest::Contains("experiment validation failed"),
                         std::runtime_error);
}

TEST_CASE("misaligned preference vectors cannot be serialized") {
    auto exp = sample_experiment();
    exp.preferences.pop_back();
    CHECK_THROWS_AS(experiment_to_json(exp), std::invalid_argument);
}

TEST_CASE("unreadable or unparseable experiment files fail with the path") {
    TempDir tmp;
    CHECK_THROWS(load_experiment(tmp.file("nope.json")));
    auto p = tmp.file("broken.json");
    write_text(p, "{ not json");
    try {
        load_experiment(p);
        FAIL("expected parse failure");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("broken.json") != std::string::npos);
    }
}
