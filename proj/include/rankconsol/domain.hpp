#pragma once

// Core data model: queries, candidate documents, aligned score vectors, and
// sparse pairwise preferences. Everything here is immutable by convention
// once built (plain value types, no internal locking) and safe to share
// across threads.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rankconsol {

struct Document {
    std::string doc_id;
    std::string text;  // optional; only LLM-prompting oracles need it
};

// One query's candidate pool. All per-document vectors are index-aligned
// with `docs`; optional vectors are either empty or full-length.
// initial_rank is the retrieval order, a permutation of 1..n (1 = best).
struct CandidateList {
    std::string query_id;
    std::string query_text;
    std::vector<Document> docs;
    std::vector<int> labels;                  // graded relevance, empty if unjudged
    std::vector<double> normalized_labels;    // labels / max_grade, empty if unjudged
    std::vector<int> initial_rank;
    std::vector<double> retrieval_scores;     // optional (e.g. BM25)
    int max_grade = 0;                        // dataset grade ceiling, 0 = unknown

    std::size_t size() const { return docs.size(); }
    bool has_labels() const { return !labels.empty(); }
};

enum class ScoreKind {
    Relevance,     // pointwise rater output in [0,1]
    PrpScore,      // pairwise win counts
    Consolidated,  // relevance adjusted to satisfy pairwise order
    Calibrated,    // supervised monotone transform applied
    Ensemble,      // weighted mix of relevance and win counts
};

const char* to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& s);

// Per-document real scores, index-aligned with the owning CandidateList.
struct ScoreVector {
    std::string query_id;
    ScoreKind kind = ScoreKind::Relevance;
    std::vector<double> values;
};

enum class Verdict {
    IWins,
    JWins,
    Inconsistent,  // order-swapped prompts disagreed; counts as a tie
};

const char* to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

// Verdict for the same pair with the arguments exchanged.
Verdict flipped(Verdict v);

struct Preference {
    int i = 0;
    int j = 0;
    Verdict verdict = Verdict::Inconsistent;
};

// Sparse pairwise judgments for one query. Pairs are stored canonically with
// i < j (the verdict encodes direction), at most once per unordered pair.
class PreferenceSet {
public:
    PreferenceSet() = default;
    PreferenceSet(std::string query_id, int n_docs)
        : query_id_(std::move(query_id)), n_docs_(n_docs) {}

    // Canonicalizes to i < j. Re-adding a pair with the same effective
    // verdict is a no-op; a contradicting re-add throws std::invalid_argument.
    void add(int i, int j, Verdict v);

    // Verdict for (i, j), flipped if the stored direction is (j, i).
    std::optional<Verdict> find(int i, int j) const;

    const std::vector<Preference>& prefs() const { return prefs_; }
    const std::string& query_id() const { return query_id_; }
    int n_docs() const { return n_docs_; }
    std::size_t size() const { return prefs_.size(); }

private:
    std::string query_id_;
    int n_docs_ = 0;
    std::vector<Preference> prefs_;
    std::unordered_map<std::uint64_t, std::size_t> index_;  // pair key -> prefs_ slot
};

struct Violation {
    std::string query_id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Report-style dataset check: duplicate doc_ids, misaligned vectors, label
// range errors, broken rank permutations. Never throws.
ValidationReport validate_dataset(const std::vector<CandidateList>& lists);

// labels / max_grade, each label required to lie in [0, max_grade].
std::vector<double> normalize_labels(const std::vector<int>& labels, int max_grade);

}  // namespace rankconsol
