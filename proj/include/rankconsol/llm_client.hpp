#pragma once

// HTTP client for a generic LLM scoring endpoint. The wire protocol is a
// single POST of {"prompt", "mode": "score"|"generate", "continuations"}
// answered by {"scores": [...]} or {"text": "..."}, so any model server can
// be adapted with a few lines of glue. Responses are cached on disk by
// request hash; a real deployment replays for free and unit tests can run
// against a local stub.

#include <string>
#include <vector>

#include "rankconsol/domain.hpp"
#include "rankconsol/ranking.hpp"

namespace rankconsol {

// Prompt text with {query} / {passage} / {passage_1} / {passage_2} holes.
// The built-in strings and the files under prompts/ are identical; the files
// exist so the exact text sent to a model is auditable and swappable.
struct PromptTemplates {
    std::string relevance;
    std::string preference;

    static PromptTemplates builtin();
    // Reads relevance_prompt.txt and preference_prompt.txt from dir. One
    // trailing newline is stripped so POSIX-formatted files reproduce the
    // built-ins byte for byte.
    static PromptTemplates load_dir(const std::string& dir);
};

// Replaces every occurrence of each {key} in tmpl.
std::string fill_template(std::string tmpl,
                          const std::vector<std::pair<std::string, std::string>>& subs);

struct LlmClientConfig {
    std::string endpoint;   // http://host[:port][/path]
    int timeout_ms = 30000;
    std::string cache_dir;  // empty disables the response cache
    int max_in_flight = 4;
    int attempts = 3;       // transport retries with exponential backoff
    int backoff_ms = 200;   // first retry delay, doubles per attempt

    // Reads RC_LLM_ENDPOINT and RC_LLM_TIMEOUT_MS.
    static LlmClientConfig from_env();
};

class LlmClient {
public:
    explicit LlmClient(LlmClientConfig cfg,
                       PromptTemplates templates = PromptTemplates::builtin());
    ~LlmClient();

    LlmClient(const LlmClient&) = delete;
    LlmClient& operator=(const LlmClient&) = delete;

    // Raw endpoint calls. score() returns one value per continuation;
    // generate() returns the completion text.
    std::vector<double> score(const std::string& prompt,
                              const std::vector<std::string>& continuations);
    std::string generate(const std::string& prompt);

    // P(Yes) / (P(Yes) + P(No)) for "does the passage answer the query".
    // Endpoints without token scores may answer with text; Yes maps to 1,
    // No to 0, anything else is an error.
    double relevance(const std::string& query_text, const std::string& passage_text);

    // Asks "which passage is more relevant" twice with the passages swapped.
    // Agreement yields a direction; disagreement is Inconsistent.
    Verdict preference(const std::string& query_text, const std::string& passage_a,
                       const std::string& passage_b);

    const PromptTemplates& templates() const;

private:
    struct Impl;
    Impl* impl_;
};

// Per-document relevance for a whole list; errors gain the doc identity.
ScoreVector llm_relevance_scores(LlmClient& client, const CandidateList& list);

// PreferenceOracle adapter; failures surface as OracleError with the pair.
class LlmPreferenceOracle final : public PreferenceOracle {
public:
    explicit LlmPreferenceOracle(LlmClient& client) : client_(client) {}

    Verdict compare(const CandidateList& list, int i, int j) override;

private:
    LlmClient& client_;
};

}  // namespace rankconsol
