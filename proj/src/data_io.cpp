#include "rankconsol/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rankconsol {

namespace {

[[noreturn]] void line_fail(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

int parse_int(const std::string& tok, const std::string& path, std::size_t line_no,
              const char* what) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &used);
    } catch (const std::exception&) {
        line_fail(path, line_no, std::string("bad ") + what + " '" + tok + "'");
    }
    if (used != tok.size()) line_fail(path, line_no, std::string("bad ") + what + " '" + tok + "'");
    return v;
}

double parse_double(const std::string& tok, const std::string& path, std::size_t line_no,
                    const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        line_fail(path, line_no, std::string("bad ") + what + " '" + tok + "'");
    }
    if (used != tok.size()) line_fail(path, line_no, std::string("bad ") + what + " '" + tok + "'");
    return v;
}

// Calls fn(line_no, tokens) for every non-blank line.
template <typename Fn>
void for_each_line(const std::string& content, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) nl = content.size();
        ++line_no;
        std::string line = content.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) fn(line_no, line);
        pos = nl + 1;
        if (nl == content.size()) break;
    }
}

}  // namespace

std::string read_file_maybe_gz(const std::string& path) {
    // gzread falls back to a plain copy on non-gzip input, so one code path
    // serves both compressed and uncompressed files.
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path + ": " + std::strerror(errno));
    std::string out;
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    if (n < 0) {
        int errnum = 0;
        std::string msg = gzerror(f, &errnum);
        gzclose(f);
        throw std::runtime_error("error reading " + path + ": " + msg);
    }
    gzclose(f);
    return out;
}

void write_file_maybe_gz(const std::string& path, const std::string& content) {
    const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot open " + path + ": " + std::strerror(errno));
        std::size_t done = 0;
        while (done < content.size()) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(content.size() - done, 1u << 20));
            if (gzwrite(f, content.data() + done, chunk) != static_cast<int>(chunk)) {
                gzclose(f);
                throw std::runtime_error("error writing " + path);
            }
            done += chunk;
        }
        if (gzclose(f) != Z_OK) throw std::runtime_error("error closing " + path);
    } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + path + ": " + std::strerror(errno));
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw std::runtime_error("error writing " + path);
    }
}

QrelsResult load_qrels(const std::string& path) {
    QrelsResult out;
    const std::string content = read_file_maybe_gz(path);
    for_each_line(content, [&](std::size_t line_no, const std::string& line) {
        const auto toks = split_ws(line);
        if (toks.size() != 4)
            line_fail(path, line_no,
                      "expected 4 fields 'qid iter docid grade', got " +
                          std::to_string(toks.size()));
        int grade = parse_int(toks[3], path, line_no, "grade");
        if (grade < 0) {
            out.warnings.push_back(path + ":" + std::to_string(line_no) + ": negative grade " +
                                   std::to_string(grade) + " clamped to 0");
            grade = 0;
        }
        auto& per_query = out.grades[toks[0]];
        auto [it, inserted] = per_query.emplace(toks[2], grade);
        if (!inserted) {
            out.warnings.push_back(path + ":" + std::to_string(line_no) +
                                   ": duplicate entry for (" + toks[0] + ", " + toks[2] +
                                   "); last value kept");
            it->second = grade;
        }
    });
    return out;
}

std::vector<CandidateList> load_run(const std::string& path, int top_n) {
    if (top_n < 1) throw std::invalid_argument("top_n must be at least 1");
    struct Entry {
        std::string doc_id;
        int rank;
        double score;
    };
    std::map<std::string, std::vector<Entry>> per_query;
    const std::string content = read_file_maybe_gz(path);
    for_each_line(content, [&](std::size_t line_no, const std::string& line) {
        const auto toks = split_ws(line);
        if (toks.size() != 6)
            line_fail(path, line_no,
                      "expected 6 fields 'qid Q0 docid rank score tag', got " +
                          std::to_string(toks.size()));
        const int rank = parse_int(toks[3], path, line_no, "rank");
        const double score = parse_double(toks[4], path, line_no, "score");
        auto& entries = per_query[toks[0]];
        for (const auto& e : entries)
            if (e.doc_id == toks[2])
                line_fail(path, line_no,
                          "duplicate doc '" + toks[2] + "' for query '" + toks[0] + "'");
        entries.push_back({toks[2], rank, score});
    });

    std::vector<CandidateList> lists;
    lists.reserve(per_query.size());
    for (auto& [qid, entries] : per_query) {
        // Score order is authoritative; run ranks only break ties, so files
        // with rank gaps still come out densified 1..n.
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.rank != b.rank) return a.rank < b.rank;
            return a.doc_id < b.doc_id;
        });
        if (entries.size() > static_cast<std::size_t>(top_n))
            entries.resize(static_cast<std::size_t>(top_n));
        CandidateList cl;
        cl.query_id = qid;
        cl.docs.reserve(entries.size());
        cl.initial_rank.reserve(entries.size());
        cl.retrieval_scores.reserve(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            cl.docs.push_back({entries[i].doc_id, ""});
            cl.initial_rank.push_back(static_cast<int>(i) + 1);
            cl.retrieval_scores.push_back(entries[i].score);
        }
        lists.push_back(std::move(cl));
    }
    return lists;
}

std::vector<std::string> apply_qrels(std::vector<CandidateList>& lists, const Qrels& qrels) {
    std::vector<std::string> warnings;
    int max_grade = 1;
    for (const auto& [qid, docs] : qrels)
        for (const auto& [doc_id, grade] : docs) max_grade = std::max(max_grade, grade);

    for (auto& cl : lists) {
        const auto qit = qrels.find(cl.query_id);
        if (qit == qrels.end())
            warnings.push_back("query " + cl.query_id + " has no qrels entries; all labels 0");
        cl.labels.assign(cl.size(), 0);
        for (std::size_t d = 0; d < cl.size(); ++d) {
            if (qit == qrels.end()) break;
            const auto dit = qit->second.find(cl.docs[d].doc_id);
            if (dit != qit->second.end()) cl.labels[d] = dit->second;
        }
        cl.max_grade = max_grade;
        cl.normalized_labels = normalize_labels(cl.labels, max_grade);
    }
    return warnings;
}

DatasetStats dataset_stats(const std::vector<CandidateList>& lists) {
    DatasetStats s;
    s.n_queries = lists.size();
    std::size_t total = 0;
    for (const auto& cl : lists) {
        total += cl.size();
        if (cl.has_labels()) {
            s.has_labels = true;
            for (int l : cl.labels) s.label_alphabet.insert(l);
            for (double nl : cl.normalized_labels) s.normalized_alphabet.insert(nl);
        }
    }
    s.mean_list_length = lists.empty() ? 0.0 : static_cast<double>(total) / lists.size();
    return s;
}

std::string format_dataset_stats(const DatasetStats& stats) {
    std::ostringstream ss;
    ss << "queries              " << stats.n_queries << "\n";
    ss << "mean list length     " << stats.mean_list_length << "\n";
    if (stats.has_labels) {
        ss << "label alphabet       {";
        bool first = true;
        for (int l : stats.label_alphabet) {
            if (!first) ss << ", ";
            ss << l;
            first = false;
        }
        ss << "}\n";
        ss << "normalized alphabet  {";
        first = true;
        for (double nl : stats.normalized_alphabet) {
            if (!first) ss << ", ";
            ss << nl;
            first = false;
        }
        ss << "}\n";
    } else {
        ss << "label alphabet       (unjudged)\n";
    }
    return ss.str();
}

std::vector<ScoreVector> Experiment::scores_of(ScoreKind kind) const {
    std::vector<ScoreVector> out;
    out.reserve(lists.size());
    for (std::size_t q = 0; q < lists.size(); ++q) {
        const auto it = q < scores.size() ? scores[q].find(kind) : scores[q].end();
        if (q >= scores.size() || it == scores[q].end())
            throw std::runtime_error("query " + lists[q].query_id + " has no " +
                                     std::string(to_string(kind)) + " scores");
        out.push_back({lists[q].query_id, kind, it->second});
    }
    return out;
}

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("experiment schema: " + path + ": " + what);
}

const json* find_key(const json& obj, const char* key) {
    if (!obj.is_object()) return nullptr;
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) schema_fail(path, "expected string");
    return v.get<std::string>();
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) schema_fail(path, "expected integer");
    return v.get<int>();
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) schema_fail(path, "expected number");
    return v.get<double>();
}

std::string idx(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

}  // namespace

json experiment_to_json(const Experiment& exp) {
    if (!exp.scores.empty() && exp.scores.size() != exp.lists.size())
        throw std::invalid_argument("experiment scores misaligned with lists");
    if (!exp.preferences.empty() && exp.preferences.size() != exp.lists.size())
        throw std::invalid_argument("experiment preferences misaligned with lists");

    json queries = json::array();
    for (std::size_t q = 0; q < exp.lists.size(); ++q) {
        const CandidateList& cl = exp.lists[q];
        json jq = json::object();
        jq["query_id"] = cl.query_id;
        if (!cl.query_text.empty()) jq["query_text"] = cl.query_text;
        if (cl.max_grade > 0) jq["max_grade"] = cl.max_grade;
        json docs = json::array();
        for (std::size_t d = 0; d < cl.size(); ++d) {
            json jd = json::object();
            jd["doc_id"] = cl.docs[d].doc_id;
            if (!cl.docs[d].text.empty()) jd["text"] = cl.docs[d].text;
            if (cl.has_labels()) jd["label"] = cl.labels[d];
            if (!cl.initial_rank.empty()) jd["initial_rank"] = cl.initial_rank[d];
            if (!cl.retrieval_scores.empty()) jd["retrieval_score"] = cl.retrieval_scores[d];
            docs.push_back(std::move(jd));
        }
        jq["docs"] = std::move(docs);
        if (q < exp.scores.size() && !exp.scores[q].empty()) {
            json js = json::object();
            for (const auto& [kind, values] : exp.scores[q]) js[to_string(kind)] = values;
            jq["scores"] = std::move(js);
        }
        if (q < exp.preferences.size() && exp.preferences[q].size() > 0) {
            json jp = json::array();
            for (const Preference& p : exp.preferences[q].prefs())
                jp.push_back({{"i", p.i}, {"j", p.j}, {"verdict", to_string(p.verdict)}});
            jq["preferences"] = std::move(jp);
        }
        queries.push_back(std::move(jq));
    }

    json doc = json::object();
    doc["format"] = "rankconsol-experiment";
    doc["version"] = 1;
    doc["provenance"] = exp.provenance;
    doc["queries"] = std::move(queries);
    return doc;
}

Experiment experiment_from_json(const json& doc) {
    if (!doc.is_object()) schema_fail("$", "expected top-level object");
    if (const json* f = find_key(doc, "format")) {
        if (as_string(*f, "format") != "rankconsol-experiment")
            schema_fail("format", "not a rankconsol experiment file");
    }
    if (const json* v = find_key(doc, "version")) {
        if (as_int(*v, "version") != 1)
            schema_fail("version", "unsupported version " + v->dump());
    }

    Experiment exp;
    if (const json* p = find_key(doc, "provenance")) {
        if (!p->is_object()) schema_fail("provenance", "expected object");
        exp.provenance = *p;
    }

    const json* queries = find_key(doc, "queries");
    if (!queries) schema_fail("queries", "missing");
    if (!queries->is_array()) schema_fail("queries", "expected array");

    for (std::size_t qi = 0; qi < queries->size(); ++qi) {
        const std::string qpath = idx("queries", qi);
        const json& jq = (*queries)[qi];
        if (!jq.is_object()) schema_fail(qpath, "expected object");

        CandidateList cl;
        const json* jid = find_key(jq, "query_id");
        if (!jid) schema_fail(qpath + ".query_id", "missing");
        cl.query_id = as_string(*jid, qpath + ".query_id");
        if (cl.query_id.empty()) schema_fail(qpath + ".query_id", "empty");
        if (const json* jt = find_key(jq, "query_text"))
            cl.query_text = as_string(*jt, qpath + ".query_text");
        if (const json* jg = find_key(jq, "max_grade")) {
            cl.max_grade = as_int(*jg, qpath + ".max_grade");
            if (cl.max_grade < 0) schema_fail(qpath + ".max_grade", "negative");
        }

        const json* jdocs = find_key(jq, "docs");
        if (!jdocs) schema_fail(qpath + ".docs", "missing");
        if (!jdocs->is_array() || jdocs->empty())
            schema_fail(qpath + ".docs", "expected non-empty array");
        const std::size_t n = jdocs->size();

        std::size_t n_label = 0, n_rank = 0, n_score = 0;
        for (std::size_t di = 0; di < n; ++di) {
            const std::string dpath = idx(qpath + ".docs", di);
            const json& jd = (*jdocs)[di];
            if (!jd.is_object()) schema_fail(dpath, "expected object");
            Document d;
            const json* jdid = find_key(jd, "doc_id");
            if (!jdid) schema_fail(dpath + ".doc_id", "missing");
            d.doc_id = as_string(*jdid, dpath + ".doc_id");
            if (d.doc_id.empty()) schema_fail(dpath + ".doc_id", "empty");
            if (const json* jt = find_key(jd, "text")) d.text = as_string(*jt, dpath + ".text");
            cl.docs.push_back(std::move(d));
            if (const json* jl = find_key(jd, "label")) {
                cl.labels.push_back(as_int(*jl, dpath + ".label"));
                ++n_label;
            }
            if (const json* jr = find_key(jd, "initial_rank")) {
                cl.initial_rank.push_back(as_int(*jr, dpath + ".initial_rank"));
                ++n_rank;
            }
            if (const json* js = find_key(jd, "retrieval_score")) {
                cl.retrieval_scores.push_back(as_double(*js, dpath + ".retrieval_score"));
                ++n_score;
            }
        }
        if (n_label != 0 && n_label != n)
            schema_fail(qpath + ".docs", "'label' must be present on all docs or none");
        if (n_rank != 0 && n_rank != n)
            schema_fail(qpath + ".docs", "'initial_rank' must be present on all docs or none");
        if (n_score != 0 && n_score != n)
            schema_fail(qpath + ".docs", "'retrieval_score' must be present on all docs or none");

        if (cl.has_labels()) {
            if (cl.max_grade < 1)
                schema_fail(qpath + ".max_grade", "required (>= 1) when labels are present");
            try {
                cl.normalized_labels = normalize_labels(cl.labels, cl.max_grade);
            } catch (const std::exception& e) {
                schema_fail(qpath, e.what());
            }
        }
        if (cl.initial_rank.empty())
            for (std::size_t d = 0; d < n; ++d) cl.initial_rank.push_back(static_cast<int>(d) + 1);

        std::map<ScoreKind, std::vector<double>> score_map;
        if (const json* jscores = find_key(jq, "scores")) {
            if (!jscores->is_object()) schema_fail(qpath + ".scores", "expected object");
            for (const auto& [key, jarr] : jscores->items()) {
                ScoreKind kind;
                try {
                    kind = score_kind_from_string(key);
                } catch (const std::exception&) {
                    continue;  // unknown kinds are ignored, like any unknown field
                }
                const std::string spath = qpath + ".scores." + key;
                if (!jarr.is_array()) schema_fail(spath, "expected array");
                if (jarr.size() != n)
                    schema_fail(spath, "expected " + std::to_string(n) + " values, got " +
                                           std::to_string(jarr.size()));
                std::vector<double> vals;
                vals.reserve(n);
                for (std::size_t vi = 0; vi < n; ++vi)
                    vals.push_back(as_double(jarr[vi], idx(spath, vi)));
                score_map.emplace(kind, std::move(vals));
            }
        }

        PreferenceSet prefs(cl.query_id, static_cast<int>(n));
        if (const json* jprefs = find_key(jq, "preferences")) {
            if (!jprefs->is_array()) schema_fail(qpath + ".preferences", "expected array");
            for (std::size_t pi = 0; pi < jprefs->size(); ++pi) {
                const std::string ppath = idx(qpath + ".preferences", pi);
                const json& jp = (*jprefs)[pi];
                if (!jp.is_object()) schema_fail(ppath, "expected object");
                const json* ji = find_key(jp, "i");
                const json* jj = find_key(jp, "j");
                const json* jv = find_key(jp, "verdict");
                if (!ji) schema_fail(ppath + ".i", "missing");
                if (!jj) schema_fail(ppath + ".j", "missing");
                if (!jv) schema_fail(ppath + ".verdict", "missing");
                const int i = as_int(*ji, ppath + ".i");
                const int j = as_int(*jj, ppath + ".j");
                if (i < 0 || i >= static_cast<int>(n)) schema_fail(ppath + ".i", "out of range");
                if (j < 0 || j >= static_cast<int>(n)) schema_fail(ppath + ".j", "out of range");
                if (i == j) schema_fail(ppath, "i and j must differ");
                Verdict verdict;
                try {
                    verdict = verdict_from_string(as_string(*jv, ppath + ".verdict"));
                } catch (const std::exception& e) {
                    schema_fail(ppath + ".verdict", e.what());
                }
                try {
                    prefs.add(i, j, verdict);
                } catch (const std::exception& e) {
                    schema_fail(ppath, e.what());
                }
            }
        }

        exp.lists.push_back(std::move(cl));
        exp.scores.push_back(std::move(score_map));
        exp.preferences.push_back(std::move(prefs));
    }

    const ValidationReport report = validate_dataset(exp.lists);
    if (!report.ok()) {
        std::string msg = "experiment validation failed:";
        for (const Violation& v : report.violations)
            msg += "\n  " + v.query_id + ": " + v.message;
        throw std::runtime_error(msg);
    }
    return exp;
}

Experiment load_experiment(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file_maybe_gz(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return experiment_from_json(doc);
}

void save_experiment(const std::string& path, const Experiment& exp) {
    write_file_maybe_gz(path, experiment_to_json(exp).dump(2) + "\n");
}

}  // namespace rankconsol
