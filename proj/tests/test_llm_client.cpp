#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rankconsol/llm_client.hpp"

using namespace rankconsol;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct StubServer {
    httplib::Server svr;
    std::thread th;
    int port = 0;
    std::atomic<int> hits{0};
    std::function<json(const json&)> reply;  // request body -> response body
    std::atomic<int> fail_first{0};          // serve this many 500s before succeeding

    StubServer() {
        svr.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            hits.fetch_add(1);
            if (fail_first.fetch_sub(1) > 0) {
                res.status = 500;
                res.set_content("down", "text/plain");
                return;
            }
            json body = json::parse(req.body);
            res.set_content(reply(body).dump(), "application/json");
        });
        fail_first = 0;
        port = svr.bind_to_any_port("127.0.0.1");
        th = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }
    ~StubServer() {
        svr.stop();
        th.join();
    }
    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port) + "/score";
    }
};

LlmClientConfig quick_config(const StubServer& srv) {
    LlmClientConfig cfg;
    cfg.endpoint = srv.endpoint();
    cfg.timeout_ms = 5000;
    cfg.attempts = 1;
    cfg.backoff_ms = 1;
    return cfg;
}

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("rankconsol_llm_" + std::to_string(counter.fetch_add(1)) + "_" +
                std::to_string(static_cast<unsigned>(::getpid())));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("fill_template substitutes every hole occurrence") {
    CHECK(fill_template("{q} and {q} vs {p}", {{"q", "X"}, {"p", "Y"}}) == "X and X vs Y");
    CHECK(fill_template("no holes", {{"q", "X"}}) == "no holes");
    CHECK(fill_template("{a}{b}", {{"a", "1"}, {"b", "2"}}) == "12");
}

TEST_CASE("prompt files reproduce the built-in templates byte for byte") {
    TempDir tmp;
    auto builtin = PromptTemplates::builtin();
    {
        std::ofstream r(tmp.path / "relevance_prompt.txt", std::ios::binary);
        r << builtin.relevance << "\n";
        std::ofstream p(tmp.path / "preference_prompt.txt", std::ios::binary);
        p << builtin.preference << "\n";
    }
    auto loaded = PromptTemplates::load_dir(tmp.path.string());
    CHECK(loaded.relevance == builtin.relevance);
    CHECK(loaded.preference == builtin.preference);
    CHECK(builtin.relevance.find("{passage}") != std::string::npos);
    CHECK(builtin.relevance.find("{query}") != std::string::npos);
    CHECK(builtin.preference.find("{passage_1}") != std::string::npos);
    CHECK(builtin.preference.find("{passage_2}") != std::string::npos);
    CHECK_THROWS(PromptTemplates::load_dir((tmp.path / "missing").string()));
}

TEST_CASE("relevance uses token scores when the endpoint provides them") {
    StubServer srv;
    json seen;
    srv.reply = [&](const json& body) {
        seen = body;
        return json{{"scores", {3.0, 1.0}}};
    };
    LlmClient client(quick_config(srv));
    CHECK(client.relevance("what is rust", "rust is a language") ==
          doctest::Approx(0.75).epsilon(1e-12));
    CHECK(seen["mode"] == "score");
    CHECK(seen["continuations"] == json::array({"Yes", "No"}));
    std::string prompt = seen["prompt"].get<std::string>();
    CHECK(prompt.find("rust is a language") != std::string::npos);
    CHECK(prompt.find("what is rust") != std::string::npos);
    CHECK(prompt.find("{passage}") == std::string::npos);
}

TEST_CASE("zero mass on both continuations falls back to one half") {
    StubServer srv;
    srv.reply = [](const json&) { return json{{"scores", {0.0, 0.0}}}; };
    LlmClient client(quick_config(srv));
    CHECK(client.relevance("q", "p") == 0.5);
}

TEST_CASE("text completions map Yes and No onto the score range") {
    StubServer srv;
    std::string answer = "Yes, it does.";
    srv.reply = [&](const json&) { return json{{"text", answer}}; };
    LlmClient client(quick_config(srv));
    CHECK(client.relevance("q", "p") == 1.0);
    answer = "  NO";
    CHECK(client.relevance("q", "p") == 0.0);
    answer = "perhaps";
    CHECK_THROWS_WITH_AS(client.relevance("q", "p"),
                         doctest::Contains("unparseable relevance answer"),
                         std::runtime_error);
}

TEST_CASE("responses with neither scores nor text are rejected") {
    StubServer srv;
    srv.reply = [](const json&) { return json{{"weird", 1}}; };
    LlmClient client(quick_config(srv));
    CHECK_THROWS_WITH_AS(client.relevance("q", "p"),
                         doctest::Contains("neither scores nor text"), std::runtime_error);
}

TEST_CASE("score mode checks the continuation count") {
    StubServer srv;
    srv.reply = [](const json&) { return json{{"scores", {1.0}}}; };
    LlmClient client(quick_config(srv));
    CHECK_THROWS(client.score("prompt", {"a", "b"}));
    srv.reply = [](const json&) { return json{{"scores", {1.0, 2.0}}}; };
    CHECK(client.score("prompt", {"a", "b"}) == std::vector<double>{1.0, 2.0});
}

TEST_CASE("preference agreement across the swap gives a direction") {
    StubServer srv;
    // Whoever holds the better passage wins, regardless of slot.
    srv.reply = [](const json& body) {
        std::string prompt = body["prompt"].get<std::string>();
        bool a_good = prompt.find("Passage A: good") != std::string::npos;
        return json{{"text", a_good ? "Passage A" : "Passage B"}};
    };
    LlmClient client(quick_config(srv));
    CHECK(client.preference("q", "good stuff", "bad stuff") == Verdict::IWins);
    CHECK(client.preference("q", "bad stuff", "good stuff") == Verdict::JWins);
    CHECK(srv.hits.load() == 4);  // two prompts per judgment
}

TEST_CASE("pure position bias is neutralized into Inconsistent") {
    StubServer srv;
    srv.reply = [](const json&) { return json{{"text", "Passage A"}}; };
    LlmClient client(quick_config(srv));
    CHECK(client.preference("q", "one", "two") == Verdict::Inconsistent);
}

TEST_CASE("bare letter answers parse as choices") {
    StubServer srv;
    std::string answer = "A";
    srv.reply = [&](const json&) { return json{{"text", answer}}; };
    LlmClient client(quick_config(srv));
    // 'A' both times: forward picks first passage, swapped picks second.
    CHECK(client.preference("q", "x", "y") == Verdict::Inconsistent);
    answer = "I cannot decide";
    CHECK_THROWS_WITH_AS(client.preference("q", "x", "y"),
                         doctest::Contains("unparseable preference answer"),
                         std::runtime_error);
}

TEST_CASE("transport errors are retried with backoff until the budget runs out") {
    StubServer srv;
    srv.reply = [](const json&) { return json{{"text", "Yes"}}; };
    srv.fail_first = 2;
    auto cfg = quick_config(srv);
    cfg.attempts = 3;
    cfg.backoff_ms = 1;
    LlmClient client(cfg);
    CHECK(client.relevance("q", "p") == 1.0);
    CHECK(srv.hits.load() == 3);

    srv.fail_first = 5;
    auto strict = quick_config(srv);
    strict.attempts = 2;
    strict.backoff_ms = 1;
    LlmClient impatient(strict);
    CHECK_THROWS_WITH_AS(impatient.relevance("q", "p"),
                         doctest::Contains("failed after 2 attempts"), std::runtime_error);
}

TEST_CASE("the disk cache answers repeats without touching the endpoint") {
    StubServer srv;
    srv.reply = [](const json&) { return json{{"scores", {2.0, 1.0}}}; };
    TempDir tmp;
    auto cfg = quick_config(srv);
    cfg.cache_dir = (tmp.path / "cache").string();
    {
        LlmClient client(cfg);
        CHECK(client.relevance("q", "p") == doctest::Approx(2.0 / 3.0));
        CHECK(client.relevance("q", "p") == doctest::Approx(2.0 / 3.0));
        CHECK(srv.hits.load() == 1);
        CHECK(client.relevance("q", "other passage") == doctest::Approx(2.0 / 3.0));
        CHECK(srv.hits.load() == 2);
    }
    // A fresh client over the same directory replays from disk.
    LlmClient again(cfg);
    CHECK(again.relevance("q", "p") == doctest::Approx(2.0 / 3.0));
    CHECK(srv.hits.load() == 2);
}

TEST_CASE("torn cache entries are refetched and repaired") {
    StubServer srv;
    srv.reply = [](const json&) { return json{{"scores", {2.0, 1.0}}}; };
    TempDir tmp;
    auto cfg = quick_config(srv);
    cfg.cache_dir = (tmp.path / "cache").string();
    LlmClient client(cfg);
    CHECK(client.relevance("q", "p") == doctest::Approx(2.0 / 3.0));

    for (const auto& entry : fs::directory_iterator(cfg.cache_dir)) {
        std::ofstream out(entry.path(), std::ios::binary);
        out << "{ torn";
    }
    CHECK(client.relevance("q", "p") == doctest::Approx(2.0 / 3.0));
    CHECK(srv.hits.load() == 2);
    CHECK(client.relevance("q", "p") == doctest::Approx(2.0 / 3.0));
    CHECK(srv.hits.load() == 2);  // repaired entry serves the third call
}

TEST_CASE("client configuration is validated up front") {
    LlmClientConfig cfg;
    CHECK_THROWS_WITH_AS(LlmClient{cfg}, doctest::Contains("no LLM endpoint"),
                         std::invalid_argument);
    cfg.endpoint = "https://secure.example/score";
    CHECK_THROWS_WITH_AS(LlmClient{cfg}, doctest::Contains("http://"),
                         std::invalid_argument);
    cfg.endpoint = "http://h/score";
    cfg.timeout_ms = 0;
    CHECK_THROWS_AS(LlmClient{cfg}, std::invalid_argument);
    cfg.timeout_ms = 1000;
    cfg.attempts = 0;
    CHECK_THROWS_AS(LlmClient{cfg}, std::invalid_argument);
    cfg.attempts = 1;
    cfg.max_in_flight = 0;
    CHECK_THROWS_AS(LlmClient{cfg}, std::invalid_argument);
}

TEST_CASE("environment variables feed the default config") {
    ::setenv("RC_LLM_ENDPOINT", "http://example:9999/score", 1);
    ::setenv("RC_LLM_TIMEOUT_MS", "1234", 1);
    auto cfg = LlmClientConfig::from_env();
    CHECK(cfg.endpoint == "http://example:9999/score");
    CHECK(cfg.timeout_ms == 1234);

    ::setenv("RC_LLM_TIMEOUT_MS", "soon", 1);
    CHECK_THROWS_WITH_AS(LlmClientConfig::from_env(), doctest::Contains("RC_LLM_TIMEOUT_MS"),
                         std::invalid_argument);
    ::unsetenv("RC_LLM_TIMEOUT_MS");
    ::unsetenv("RC_LLM_ENDPOINT");
}

TEST_CASE("whole-list relevance carries doc identity on failure") {
    StubServer srv;
    srv.reply = [](const json& body) {
        std::string prompt = body["prompt"].get<std::string>();
        bool good = prompt.find("strong") != std::string::npos;
        return json{{"scores", {good ? 4.0 : 1.0, 1.0}}};
    };
    LlmClient client(quick_config(srv));

    CandidateList cl;
    cl.query_id = "q1";
    cl.query_text = "which doc";
    cl.docs = {{"d1", "strong match"}, {"d2", "weak match"}};
    cl.initial_rank = {1, 2};
    auto sv = llm_relevance_scores(client, cl);
    CHECK(sv.kind == ScoreKind::Relevance);
    CHECK(sv.values[0] == doctest::Approx(0.8));
    CHECK(sv.values[1] == doctest::Approx(0.5));

    cl.docs[1].text.clear();
    CHECK_THROWS_WITH_AS(llm_relevance_scores(client, cl), doctest::Contains("d2"),
                         std::invalid_argument);
    cl.query_text.clear();
    CHECK_THROWS_AS(llm_relevance_scores(client, cl), std::invalid_argument);
}

TEST_CASE("the oracle adapter validates pairs and wraps failures") {
    StubServer srv;
    srv.reply = [](const json& body) {
        std::string prompt = body["prompt"].get<std::string>();
        bool a_good = prompt.find("Passage A: good") != std::string::npos;
        return json{{"text", a_good ? "Passage A" : "Passage B"}};
    };
    LlmClient client(quick_config(srv));
    LlmPreferenceOracle oracle(client);

    CandidateList cl;
    cl.query_id = "q1";
    cl.query_text = "pick one";
    cl.docs = {{"d1", "good stuff"}, {"d2", "bad stuff"}};
    cl.initial_rank = {1, 2};
    CHECK(oracle.compare(cl, 0, 1) == Verdict::IWins);
    CHECK(oracle.compare(cl, 1, 0) == Verdict::JWins);
    CHECK_THROWS_AS(oracle.compare(cl, 0, 0), OracleError);
    CHECK_THROWS_AS(oracle.compare(cl, 0, 2), OracleError);

    cl.docs[0].text.clear();
    try {
        oracle.compare(cl, 0, 1);
        FAIL("expected OracleError");
    } catch (const OracleError& e) {
        CHECK(e.query_id == "q1");
        CHECK(e.i == 0);
        CHECK(e.j == 1);
    }
}
