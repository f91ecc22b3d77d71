#include "rankconsol/domain.hpp"

#include <stdexcept>
#include <unordered_set>

namespace rankconsol {

namespace {

std::uint64_t pair_key(int i, int j) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
           static_cast<std::uint32_t>(j);
}

}  // namespace

Verdict flipped(Verdict v) {
    switch (v) {
        case Verdict::IWins: return Verdict::JWins;
        case Verdict::JWins: return Verdict::IWins;
        case Verdict::Inconsistent: return Verdict::Inconsistent;
    }
    return Verdict::Inconsistent;
}

const char* to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::Relevance: return "relevance";
        case ScoreKind::PrpScore: return "prp_score";
        case ScoreKind::Consolidated: return "consolidated";
        case ScoreKind::Calibrated: return "calibrated";
        case ScoreKind::Ensemble: return "ensemble";
    }
    return "relevance";
}

ScoreKind score_kind_from_string(const std::string& s) {
    if (s == "relevance") return ScoreKind::Relevance;
    if (s == "prp_score") return ScoreKind::PrpScore;
    if (s == "consolidated") return ScoreKind::Consolidated;
    if (s == "calibrated") return ScoreKind::Calibrated;
    if (s == "ensemble") return ScoreKind::Ensemble;
    throw std::invalid_argument("unknown score kind: " + s);
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::IWins: return "i_wins";
        case Verdict::JWins: return "j_wins";
        case Verdict::Inconsistent: return "inconsistent";
    }
    return "inconsistent";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "i_wins") return Verdict::IWins;
    if (s == "j_wins") return Verdict::JWins;
    if (s == "inconsistent") return Verdict::Inconsistent;
    throw std::invalid_argument("unknown verdict: " + s);
}

void PreferenceSet::add(int i, int j, Verdict v) {
    if (i == j) throw std::invalid_argument("preference pair needs distinct indices");
    if (i < 0 || j < 0 || i >= n_docs_ || j >= n_docs_)
        throw std::invalid_argument("preference index out of range");
    if (i > j) {
        std::swap(i, j);
        v = flipped(v);
    }
    auto key = pair_key(i, j);
    auto it = index_.find(key);
    if (it != index_.end()) {
        if (prefs_[it->second].verdict != v)
            throw std::invalid_argument("contradicting verdict for pair (" +
                                        std::to_string(i) + "," + std::to_string(j) + ")");
        return;
    }
    index_.emplace(key, prefs_.size());
    prefs_.push_back(Preference{i, j, v});
}

std::optional<Verdict> PreferenceSet::find(int i, int j) const {
    bool swapped = false;
    if (i > j) {
        std::swap(i, j);
        swapped = true;
    }
    auto it = index_.find(pair_key(i, j));
    if (it == index_.end()) return std::nullopt;
    Verdict v = prefs_[it->second].verdict;
    return swapped ? flipped(v) : v;
}

std::vector<double> normalize_labels(const std::vector<int>& labels, int max_grade) {
    if (max_grade <= 0) throw std::invalid_argument("max_grade must be positive");
    std::vector<double> out;
    out.reserve(labels.size());
    for (int g : labels) {
        if (g < 0 || g > max_grade)
            throw std::invalid_argument("label " + std::to_string(g) + " outside [0, " +
                                        std::to_string(max_grade) + "]");
        out.push_back(static_cast<double>(g) / max_grade);
    }
    return out;
}

ValidationReport validate_dataset(const std::vector<CandidateList>& lists) {
    ValidationReport report;
    auto flag = [&](const std::string& qid, std::string msg) {
        report.violations.push_back(Violation{qid, std::move(msg)});
    };
    std::unordered_set<std::string> seen_qids;
    for (const auto& cl : lists) {
        const std::size_t n = cl.docs.size();
        if (!seen_qids.insert(cl.query_id).second)
            flag(cl.query_id, "duplicate query_id");
        if (n == 0) flag(cl.query_id, "empty candidate list");

        std::unordered_set<std::string> seen_docs;
        for (const auto& d : cl.docs)
            if (!seen_docs.insert(d.doc_id).second)
                flag(cl.query_id, "duplicate doc_id: " + d.doc_id);

        auto check_len = [&](std::size_t len, const char* name) {
            if (len != 0 && len != n)
                flag(cl.query_id, std::string(name) + " length " + std::to_string(len) +
                                      " != doc count " + std::to_string(n));
        };
        check_len(cl.labels.size(), "labels");
        check_len(cl.normalized_labels.size(), "normalized_labels");
        check_len(cl.initial_rank.size(), "initial_rank");
        check_len(cl.retrieval_scores.size(), "retrieval_scores");

        if (!cl.labels.empty() && cl.labels.size() == n) {
            for (int g : cl.labels) {
                if (g < 0) {
                    flag(cl.query_id, "negative label");
                    break;
                }
                if (cl.max_grade > 0 && g > cl.max_grade) {
                    flag(cl.query_id, "label exceeds max_grade");
                    break;
                }
            }
        }
        if (!cl.normalized_labels.empty() && cl.normalized_labels.size() == n) {
            for (double v : cl.normalized_labels)
                if (v < 0.0 || v > 1.0) {
                    flag(cl.query_id, "normalized label outside [0,1]");
                    break;
                }
        }
        if (!cl.initial_rank.empty() && cl.initial_rank.size() == n) {
            std::vector<bool> seen_rank(n + 1, false);
            bool bad = false;
            for (int r : cl.initial_rank) {
                if (r < 1 || r > static_cast<int>(n) || seen_rank[r]) {
                    bad = true;
                    break;
                }
                seen_rank[r] = true;
            }
            if (bad) flag(cl.query_id, "initial_rank is not a permutation of 1.." +
                                           std::to_string(n));
        }
    }
    return report;
}

}  // namespace rankconsol
