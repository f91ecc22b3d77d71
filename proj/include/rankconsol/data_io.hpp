#pragma once

// Retrieval-artifact ingestion (TREC qrels and run files, transparently
// gzip-compressed by extension) plus the single-file JSON experiment format
// that carries a full reproducible run: candidate lists, score vectors,
// pairwise preferences, and provenance.

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankconsol/domain.hpp"

namespace rankconsol {

// query_id -> doc_id -> graded relevance.
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct QrelsResult {
    Qrels grades;
    std::vector<std::string> warnings;  // clamped negatives, duplicate lines
};

// "qid 0 docid grade" lines. Duplicate (qid, docid) pairs: last wins, with a
// warning. Negative grades clamp to 0, with a warning. Malformed lines throw
// with the 1-based line number.
QrelsResult load_qrels(const std::string& path);

// "qid Q0 docid rank score tag" lines. Per query, docs are ordered by score
// descending (ties: run rank ascending, then doc_id) and cut to top_n;
// initial_rank is then re-densified 1..n so rank gaps in the input cannot
// leak through. Labels stay empty until apply_qrels.
std::vector<CandidateList> load_run(const std::string& path, int top_n = 100);

// Fills labels and normalized_labels from qrels; docs without an entry get
// label 0. max_grade is the maximum grade seen anywhere in the qrels (at
// least 1). Returns warnings for queries with no qrels entries at all.
std::vector<std::string> apply_qrels(std::vector<CandidateList>& lists, const Qrels& qrels);

struct DatasetStats {
    std::size_t n_queries = 0;
    std::set<int> label_alphabet;
    std::set<double> normalized_alphabet;
    double mean_list_length = 0.0;
    bool has_labels = false;
};

DatasetStats dataset_stats(const std::vector<CandidateList>& lists);
std::string format_dataset_stats(const DatasetStats& stats);

// Whole-file read/write. Paths ending in ".gz" go through zlib; the read
// side also sniffs the gzip magic bytes so mislabeled files still load.
std::string read_file_maybe_gz(const std::string& path);
void write_file_maybe_gz(const std::string& path, const std::string& content);

// One experiment: everything needed to replay or re-evaluate a run, in a
// single JSON document. The three per-query vectors are index-aligned with
// `lists`; preferences entries may be empty sets and score maps may miss
// kinds (partial data is a valid experiment).
struct Experiment {
    nlohmann::json provenance = nlohmann::json::object();
    std::vector<CandidateList> lists;
    std::vector<std::map<ScoreKind, std::vector<double>>> scores;
    std::vector<PreferenceSet> preferences;

    // Aligned view of one score kind; throws naming the first query that
    // lacks it.
    std::vector<ScoreVector> scores_of(ScoreKind kind) const;
};

// Schema errors carry the JSON path of the offending value
// (e.g. "queries[2].docs[0].label"). Unknown keys are ignored.
Experiment load_experiment(const std::string& path);
void save_experiment(const std::string& path, const Experiment& exp);

nlohmann::json experiment_to_json(const Experiment& exp);
Experiment experiment_from_json(const nlohmann::json& doc);

}  // namespace rankconsol
