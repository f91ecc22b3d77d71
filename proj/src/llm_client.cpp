#include "rankconsol/llm_client.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <semaphore>
#include <stdexcept>
#include <thread>

#include "rankconsol/random.hpp"

namespace rankconsol {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (!out.empty() && out.back() == '\n') out.pop_back();
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return out;
}

// 'A' or 'B' from a preference completion like "Passage B".
char parse_choice(const std::string& text) {
    const std::string t = lower(text);
    const auto pa = t.find("passage a");
    const auto pb = t.find("passage b");
    if (pa != std::string::npos && (pb == std::string::npos || pa < pb)) return 'A';
    if (pb != std::string::npos && (pa == std::string::npos || pb < pa)) return 'B';
    const std::string bare = trim(t);
    if (bare == "a") return 'A';
    if (bare == "b") return 'B';
    throw std::runtime_error("unparseable preference answer: '" + text + "'");
}

}  // namespace

PromptTemplates PromptTemplates::builtin() {
    PromptTemplates t;
    t.relevance =
        "Passage: {passage}\n"
        "\n"
        "Query: {query}\n"
        "\n"
        "Does the passage answer the query? Output Yes or No:";
    t.preference =
        "Given a query {query}, which of the following two passages is more relevant to the "
        "query?\n"
        "\n"
        "Passage A: {passage_1}\n"
        "\n"
        "Passage B: {passage_2}\n"
        "\n"
        "Output Passage A or Passage B:";
    return t;
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
    PromptTemplates t;
    t.relevance = read_text_file(dir + "/relevance_prompt.txt");
    t.preference = read_text_file(dir + "/preference_prompt.txt");
    return t;
}

std::string fill_template(std::string tmpl,
                          const std::vector<std::pair<std::string, std::string>>& subs) {
    for (const auto& [key, value] : subs) {
        const std::string hole = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = tmpl.find(hole, pos)) != std::string::npos) {
            tmpl.replace(pos, hole.size(), value);
            pos += value.size();
        }
    }
    return tmpl;
}

LlmClientConfig LlmClientConfig::from_env() {
    LlmClientConfig cfg;
    if (const char* ep = std::getenv("RC_LLM_ENDPOINT")) cfg.endpoint = ep;
    if (const char* ms = std::getenv("RC_LLM_TIMEOUT_MS")) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(ms, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != std::strlen(ms) || v <= 0)
            throw std::invalid_argument("RC_LLM_TIMEOUT_MS must be a positive integer, got '" +
                                        std::string(ms) + "'");
        cfg.timeout_ms = v;
    }
    return cfg;
}

struct LlmClient::Impl {
    LlmClientConfig cfg;
    PromptTemplates templates;
    std::string base;  // http://host:port
    std::string path;  // /score
    std::counting_semaphore<> in_flight;
    std::atomic<std::uint64_t> tmp_counter{0};

    Impl(LlmClientConfig c, PromptTemplates t)
        : cfg(std::move(c)), templates(std::move(t)), in_flight(cfg.max_in_flight) {}

    std::string cache_path(const std::string& body) const {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(hash_seed(0, std::string_view(body))));
        return cfg.cache_dir + "/" + hex + ".json";
    }

    json request(const json& body);
};

json LlmClient::Impl::request(const json& body) {
    const std::string payload = body.dump();
    const bool cached = !cfg.cache_dir.empty();
    const std::string cpath = cached ? cache_path(payload) : "";

    if (cached) {
        std::ifstream f(cpath, std::ios::binary);
        if (f) {
            std::string text((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
            json parsed = json::parse(text, nullptr, false);
            if (!parsed.is_discarded()) return parsed;
            // torn or stale cache entry: fall through and refetch
        }
    }

    std::string last_error;
    for (int attempt = 0; attempt < cfg.attempts; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long long>(cfg.backoff_ms) << (attempt - 1)));

        in_flight.acquire();
        httplib::Client cli(base);
        cli.set_connection_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
        cli.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
        cli.set_write_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
        auto res = cli.Post(path, payload, "application/json");
        in_flight.release();

        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            last_error = "response is not valid JSON";
            continue;
        }
        if (cached) {
            const std::string tmp =
                cpath + ".tmp" + std::to_string(tmp_counter.fetch_add(1));
            std::ofstream f(tmp, std::ios::binary);
            f.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
            f.close();
            if (f) {
                std::error_code ec;
                fs::rename(tmp, cpath, ec);  // atomic publish; loser of a race is equivalent
                if (ec) fs::remove(tmp, ec);
            }
        }
        return parsed;
    }
    throw std::runtime_error("endpoint " + cfg.endpoint + " failed after " +
                             std::to_string(cfg.attempts) + " attempts: " + last_error);
}

LlmClient::LlmClient(LlmClientConfig cfg, PromptTemplates templates) {
    if (cfg.endpoint.empty())
        throw std::invalid_argument("no LLM endpoint configured (set RC_LLM_ENDPOINT)");
    if (cfg.endpoint.rfind("http://", 0) != 0)
        throw std::invalid_argument("endpoint must be http:// (TLS is not built in): " +
                                    cfg.endpoint);
    if (cfg.timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be positive");
    if (cfg.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be at least 1");
    if (cfg.attempts < 1) throw std::invalid_argument("attempts must be at least 1");

    impl_ = new Impl(std::move(cfg), std::move(templates));
    const std::string& ep = impl_->cfg.endpoint;
    const auto slash = ep.find('/', 7);
    impl_->base = slash == std::string::npos ? ep : ep.substr(0, slash);
    impl_->path = slash == std::string::npos ? "/" : ep.substr(slash);
    if (!impl_->cfg.cache_dir.empty()) fs::create_directories(impl_->cfg.cache_dir);
}

LlmClient::~LlmClient() { delete impl_; }

const PromptTemplates& LlmClient::templates() const { return impl_->templates; }

std::vector<double> LlmClient::score(const std::string& prompt,
                                     const std::vector<std::string>& continuations) {
    const json resp = impl_->request(
        {{"prompt", prompt}, {"mode", "score"}, {"continuations", continuations}});
    const auto it = resp.find("scores");
    if (it == resp.end() || !it->is_array() || it->size() != continuations.size())
        throw std::runtime_error("endpoint returned no usable scores");
    std::vector<double> out;
    out.reserve(it->size());
    for (const auto& v : it->items()) {
        if (!v.value().is_number()) throw std::runtime_error("non-numeric score in response");
        const double s = v.value().get<double>();
        if (!(s >= 0.0) || !std::isfinite(s))
            throw std::runtime_error("score out of range in response");
        out.push_back(s);
    }
    return out;
}

std::string LlmClient::generate(const std::string& prompt) {
    const json resp = impl_->request({{"prompt", prompt}, {"mode", "generate"}});
    const auto it = resp.find("text");
    if (it == resp.end() || !it->is_string())
        throw std::runtime_error("endpoint returned no text");
    return it->get<std::string>();
}

double LlmClient::relevance(const std::string& query_text, const std::string& passage_text) {
    if (query_text.empty()) throw std::invalid_argument("empty query text");
    if (passage_text.empty()) throw std::invalid_argument("empty passage text");
    const std::string prompt = fill_template(
        impl_->templates.relevance, {{"passage", passage_text}, {"query", query_text}});

    const json resp = impl_->request(
        {{"prompt", prompt}, {"mode", "score"}, {"continuations", json::array({"Yes", "No"})}});

    if (const auto it = resp.find("scores"); it != resp.end()) {
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
            throw std::runtime_error("malformed scores in response");
        const double yes = (*it)[0].get<double>();
        const double no = (*it)[1].get<double>();
        if (!(yes >= 0.0) || !(no >= 0.0) || !std::isfinite(yes) || !std::isfinite(no))
            throw std::runtime_error("score out of range in response");
        if (yes + no == 0.0) return 0.5;
        return yes / (yes + no);
    }
    // Endpoints without token scores answer with a completion instead.
    if (const auto it = resp.find("text"); it != resp.end() && it->is_string()) {
        const std::string ans = lower(trim(it->get<std::string>()));
        if (ans.rfind("yes", 0) == 0) return 1.0;
        if (ans.rfind("no", 0) == 0) return 0.0;
        throw std::runtime_error("unparseable relevance answer: '" + it->get<std::string>() +
                                 "'");
    }
    throw std::runtime_error("endpoint returned neither scores nor text");
}

Verdict LlmClient::preference(const std::string& query_text, const std::string& passage_a,
                              const std::string& passage_b) {
    if (query_text.empty()) throw std::invalid_argument("empty query text");
    if (passage_a.empty() || passage_b.empty())
        throw std::invalid_argument("empty passage text");

    const std::string forward = fill_template(
        impl_->templates.preference,
        {{"query", query_text}, {"passage_1", passage_a}, {"passage_2", passage_b}});
    const std::string swapped = fill_template(
        impl_->templates.preference,
        {{"query", query_text}, {"passage_1", passage_b}, {"passage_2", passage_a}});

    // In the swapped prompt "Passage A" names passage_b, so choices are
    // mapped back before comparing.
    const bool first_picks_a = parse_choice(generate(forward)) == 'A';
    const bool second_picks_a = parse_choice(generate(swapped)) == 'B';
    if (first_picks_a && second_picks_a) return Verdict::IWins;
    if (!first_picks_a && !second_picks_a) return Verdict::JWins;
    return Verdict::Inconsistent;
}

ScoreVector llm_relevance_scores(LlmClient& client, const CandidateList& list) {
    if (list.query_text.empty())
        throw std::invalid_argument("query " + list.query_id + " has no text");
    ScoreVector out{list.query_id, ScoreKind::Relevance, {}};
    out.values.reserve(list.size());
    for (const Document& doc : list.docs) {
        if (doc.text.empty())
            throw std::invalid_argument("doc " + doc.doc_id + " in query " + list.query_id +
                                        " has no text");
        try {
            out.values.push_back(client.relevance(list.query_text, doc.text));
        } catch (const std::exception& e) {
            throw std::runtime_error("relevance failed for query " + list.query_id + " doc " +
                                     doc.doc_id + ": " + e.what());
        }
    }
    return out;
}

Verdict LlmPreferenceOracle::compare(const CandidateList& list, int i, int j) {
    const int n = static_cast<int>(list.size());
    if (i < 0 || i >= n || j < 0 || j >= n || i == j)
        throw OracleError(list.query_id, i, j, "bad pair");
    if (list.query_text.empty())
        throw OracleError(list.query_id, i, j, "query has no text");
    if (list.docs[i].text.empty() || list.docs[j].text.empty())
        throw OracleError(list.query_id, i, j, "doc has no text");
    try {
        return client_.preference(list.query_text, list.docs[i].text, list.docs[j].text);
    } catch (const std::exception& e) {
        throw OracleError(list.query_id, i, j, e.what());
    }
}

}  // namespace rankconsol
