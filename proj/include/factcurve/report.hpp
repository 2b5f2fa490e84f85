#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcurve/claims.hpp"
#include "factcurve/core.hpp"
#include "factcurve/estimator.hpp"
#include "factcurve/gateway.hpp"
#include "factcurve/ingestion.hpp"
#include "factcurve/judgment.hpp"
#include "factcurve/svg.hpp"
#include "factcurve/version.hpp"

namespace factcurve {

inline constexpr const char* kCsvSchemaVersion = "v1";

// ---------------------------------------------------------------------------
// Number and CSV formatting
// ---------------------------------------------------------------------------

namespace fmt {

/// Fraction as a percentage with one decimal: 0.1234 -> "12.3".
[[nodiscard]] inline std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
    return buf;
}

[[nodiscard]] inline std::string pct(const std::optional<double>& fraction) {
    return fraction ? pct(*fraction) : std::string();
}

/// Per-generation average count with two decimals.
[[nodiscard]] inline std::string avg(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

/// One-decimal fixed value (Table-style "60.8").
[[nodiscard]] inline std::string fixed1(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

[[nodiscard]] inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

} // namespace fmt

/// Human-readable bucket label: "0-20", ..., "80-100".
[[nodiscard]] inline std::string bucket_label(int index) {
    return std::to_string(index * 20) + "-" + std::to_string((index + 1) * 20);
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error("cannot write " + path.string());
}

[[nodiscard]] inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

// ---------------------------------------------------------------------------
// JSON-lines persistence for claims, QA pairs and judgments
// ---------------------------------------------------------------------------

inline void save_claims(const std::vector<AtomicClaim>& claims,
                        const std::filesystem::path& path) {
    std::string out;
    for (const auto& c : claims) {
        nlohmann::json j{{"id", c.id},
                         {"generation_id", c.generation_id},
                         {"sentence_index", c.sentence_index},
                         {"text", c.text},
                         {"label", to_string(c.label)}};
        out += j.dump();
        out += "\n";
    }
    detail::write_text_file(path, out);
}

[[nodiscard]] inline std::vector<AtomicClaim> load_claims(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open claims file " + path.string());
    std::vector<AtomicClaim> claims;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            claims.push_back({j.at("id").get<std::string>(),
                              j.at("generation_id").get<std::string>(),
                              j.at("sentence_index").get<int>(), j.at("text").get<std::string>(),
                              claim_label_from_string(j.at("label").get<std::string>())});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad claim: ") + e.what(), line_no);
        }
    }
    return claims;
}

inline void save_qa_pairs(const std::vector<QaPair>& pairs, const std::filesystem::path& path) {
    std::string out;
    for (const auto& qa : pairs) {
        nlohmann::json j{
            {"claim_id", qa.claim_id}, {"question", qa.question}, {"answer", qa.answer}};
        out += j.dump();
        out += "\n";
    }
    detail::write_text_file(path, out);
}

[[nodiscard]] inline std::vector<QaPair> load_qa_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open qa file " + path.string());
    std::vector<QaPair> pairs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            pairs.push_back({j.at("claim_id").get<std::string>(),
                             j.at("question").get<std::string>(),
                             j.at("answer").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad qa pair: ") + e.what(), line_no);
        }
    }
    return pairs;
}

inline void save_judgments(const std::vector<JudgmentRecord>& judgments,
                           const std::filesystem::path& path) {
    std::string out;
    for (const auto& j : judgments) {
        nlohmann::json doc{{"claim_id", j.claim_id},
                           {"strategy", to_string(j.strategy)},
                           {"raw_response", j.raw_response},
                           {"verdict", to_string(j.verdict)}};
        out += doc.dump();
        out += "\n";
    }
    detail::write_text_file(path, out);
}

[[nodiscard]] inline std::vector<JudgmentRecord> load_judgments(
        const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open judgments file " + path.string());
    std::vector<JudgmentRecord> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            out.push_back({j.at("claim_id").get<std::string>(),
                           strategy_from_string(j.at("strategy").get<std::string>()),
                           j.at("raw_response").get<std::string>(),
                           verdict_from_string(j.at("verdict").get<std::string>())});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad judgment: ") + e.what(), line_no);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Snapshot of one command run: configuration, input checksums and output
/// checksums. Enough to replay the run against the same cache.
class RunManifest {
public:
    RunManifest(std::string command, nlohmann::json config)
        : command_(std::move(command)), config_(std::move(config)) {}

    void add_input(const std::filesystem::path& path) {
        inputs_.push_back({path.string(), sha256_hex(detail::read_text_file(path))});
    }

    void add_output(const std::filesystem::path& path) {
        outputs_.push_back({path.string(), sha256_hex(detail::read_text_file(path))});
    }

    void write(const std::filesystem::path& path) const {
        nlohmann::json inputs = nlohmann::json::array();
        for (const auto& [p, h] : inputs_) inputs.push_back({{"path", p}, {"sha256", h}});
        nlohmann::json outputs = nlohmann::json::array();
        for (const auto& [p, h] : outputs_) outputs.push_back({{"path", p}, {"sha256", h}});

        nlohmann::json core{{"command", command_}, {"config", config_}, {"inputs", inputs}};
        nlohmann::json j{
            {"run_id", sha256_hex(core.dump()).substr(0, 16)},
            {"tool_version", FACTCURVE_VERSION},
            {"csv_schema", kCsvSchemaVersion},
            {"command", command_},
            {"config", config_},
            {"inputs", inputs},
            {"outputs", outputs},
            {"created_at", ResponseCache::now_utc()},
        };
        detail::write_text_file(path, j.dump(2) + "\n");
    }

private:
    std::string command_;
    nlohmann::json config_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, std::string>> outputs_;
};

// ---------------------------------------------------------------------------
// Bucket reports (analyze)
// ---------------------------------------------------------------------------

struct AnalyzeResult {
    std::vector<BucketStats> fractions; // macro_average_fractions output
    std::vector<BucketStats> counts;    // bucket_claim_counts output
};

/// Unfiltered records and their claims only.
[[nodiscard]] inline AnalyzeResult analyze_corpus(const AnnotatedCorpus& corpus) {
    std::vector<GenerationRecord> records;
    for (const auto& r : corpus.records)
        if (!r.filtered) records.push_back(r);
    std::set<std::string> keep;
    for (const auto& r : records) keep.insert(r.id);
    std::vector<AtomicClaim> claims;
    for (const auto& c : corpus.claims)
        if (keep.count(c.generation_id)) claims.push_back(c);

    AnalyzeResult result;
    result.fractions = macro_average_fractions(records, claims);
    result.counts = bucket_claim_counts(records, claims);
    return result;
}

[[nodiscard]] inline std::string buckets_csv(const AnalyzeResult& r) {
    std::string out = "bucket_lo,bucket_hi,frac_supported,frac_unsupported,frac_irrelevant,"
                      "n_sentences,avg_supported_count,avg_unsupported_count\n";
    for (int b = 0; b < kBucketCount; ++b) {
        const auto& f = r.fractions[b];
        const auto& c = r.counts[b];
        out += fmt::pct(f.bucket.lower) + "," + fmt::pct(f.bucket.upper) + "," +
               fmt::pct(f.frac_supported) + "," + fmt::pct(f.frac_unsupported) + "," +
               fmt::pct(f.frac_irrelevant) + "," + std::to_string(f.n_sentences) + "," +
               fmt::avg(c.avg_supported_count) + "," + fmt::avg(c.avg_unsupported_count) + "\n";
    }
    return out;
}

[[nodiscard]] inline nlohmann::json buckets_json(const AnalyzeResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (int b = 0; b < kBucketCount; ++b) {
        const auto& f = r.fractions[b];
        const auto& c = r.counts[b];
        rows.push_back({{"bucket", bucket_label(b)},
                        {"bucket_lo", f.bucket.lower},
                        {"bucket_hi", f.bucket.upper},
                        {"frac_supported", f.frac_supported},
                        {"frac_unsupported", f.frac_unsupported},
                        {"frac_irrelevant", f.frac_irrelevant},
                        {"n_sentences", f.n_sentences},
                        {"avg_supported_count", c.avg_supported_count},
                        {"avg_unsupported_count", c.avg_unsupported_count}});
    }
    return nlohmann::json{{"schema", kCsvSchemaVersion}, {"buckets", rows}};
}

[[nodiscard]] inline std::string fractions_svg(const AnalyzeResult& r) {
    auto values_of = [&](auto member) {
        std::vector<std::optional<double>> v;
        for (int b = 0; b < kBucketCount; ++b) {
            if (r.fractions[b].n_sentences > 0)
                v.push_back(r.fractions[b].*member * 100.0);
            else
                v.push_back(std::nullopt);
        }
        return v;
    };
    return svg::line_chart(
        "Claim fractions by relative position", "percent",
        {{"supported", "#1f77b4", values_of(&BucketStats::frac_supported)},
         {"unsupported", "#d62728", values_of(&BucketStats::frac_unsupported)},
         {"irrelevant", "#7f7f7f", values_of(&BucketStats::frac_irrelevant)}},
        100.0);
}

[[nodiscard]] inline std::string counts_svg(const AnalyzeResult& r) {
    double y_max = 0.0;
    std::vector<std::optional<double>> s, u;
    for (int b = 0; b < kBucketCount; ++b) {
        s.push_back(r.counts[b].avg_supported_count);
        u.push_back(r.counts[b].avg_unsupported_count);
        y_max = std::max({y_max, r.counts[b].avg_supported_count,
                          r.counts[b].avg_unsupported_count});
    }
    return svg::line_chart("Claims per generation by relative position", "claims / generation",
                           {{"supported", "#1f77b4", s}, {"unsupported", "#d62728", u}},
                           y_max > 0 ? y_max * 1.1 : 1.0);
}

// ---------------------------------------------------------------------------
// Self-score and flip-rate tables
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::string selfscores_csv(const SelfScoreReport& report) {
    std::string out = "bucket,self_known,self_unknown,n_judged_supported,n_judged_unsupported,"
                      "unparseable_rate\n";
    auto row = [&](const std::string& label, const SelfScoreRow& r) {
        out += label + "," + fmt::pct(r.self_known) + "," + fmt::pct(r.self_unknown) + "," +
               std::to_string(r.n_judged_supported) + "," +
               std::to_string(r.n_judged_unsupported) + "," + fmt::pct(r.unparseable_rate) + "\n";
    };
    for (int b = 0; b < kBucketCount; ++b) row(bucket_label(b), report.per_bucket[b]);
    row("overall", report.overall);
    return out;
}

[[nodiscard]] inline std::string fliprate_csv(const std::vector<FlipRateRecord>& records) {
    std::string out = "bucket,label_class,n_correct_in_b,n_flipped,flip_rate\n";
    for (const auto& r : records) {
        out += bucket_label(r.bucket.index) + "," + to_string(r.label_class) + "," +
               std::to_string(r.n_correct_in_b) + "," + std::to_string(r.n_flipped) + ",";
        if (r.n_correct_in_b > 0) out += fmt::pct(r.flip_rate);
        out += "\n";
    }
    return out;
}

/// A parsed selfscores.csv row (scores back as fractions).
struct SelfScoreCsvRow {
    std::string bucket;
    std::optional<double> self_known;
    std::optional<double> self_unknown;
    int n_judged_supported = 0;
    int n_judged_unsupported = 0;
    double unparseable_rate = 0.0;
};

[[nodiscard]] inline std::vector<SelfScoreCsvRow> parse_selfscores_csv(
        const std::string& content) {
    std::vector<SelfScoreCsvRow> rows;
    std::istringstream in(content);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line.rfind("bucket,self_known,self_unknown", 0) != 0)
                throw ParseError("unexpected selfscores.csv header: " + line, line_no);
            continue;
        }
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            fields.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                         : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (fields.size() != 6)
            throw ParseError("expected 6 fields in selfscores.csv row", line_no);
        try {
            SelfScoreCsvRow row;
            row.bucket = fields[0];
            if (!fields[1].empty()) row.self_known = std::stod(fields[1]) / 100.0;
            if (!fields[2].empty()) row.self_unknown = std::stod(fields[2]) / 100.0;
            row.n_judged_supported = std::stoi(fields[3]);
            row.n_judged_unsupported = std::stoi(fields[4]);
            if (!fields[5].empty()) row.unparseable_rate = std::stod(fields[5]) / 100.0;
            rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad selfscores.csv row: ") + e.what(), line_no);
        }
    }
    return rows;
}

[[nodiscard]] inline std::string estimates_csv(const std::vector<SelfScoreCsvRow>& rows) {
    std::string out = "bucket,self_known,self_unknown,sigma,status\n";
    for (const auto& row : rows) {
        out += row.bucket + "," + fmt::pct(row.self_known) + "," + fmt::pct(row.self_unknown) + ",";
        if (row.self_known && row.self_unknown) {
            std::vector<std::optional<SelfScorePair>> one{
                SelfScorePair{*row.self_known, *row.self_unknown}};
            const auto cell = estimate_per_bucket(one)[0];
            if (cell.degenerate) {
                out += ",degenerate";
            } else {
                out += fmt::pct(*cell.sigma) + ",ok";
            }
        } else {
            out += ",absent";
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Corpus statistics (stats)
// ---------------------------------------------------------------------------

struct ModelStats {
    std::string model_id;
    int n_generations = 0;
    int n_filtered = 0;
    double filtered_rate = 0.0;                // fraction
    std::optional<double> claims_per_generation; // absent when all filtered
};

[[nodiscard]] inline std::vector<ModelStats> corpus_stats(const AnnotatedCorpus& corpus) {
    if (corpus.records.empty()) throw EmptyCorpusError("stats: corpus has no records");

    std::map<std::string, ModelStats> by_model;
    std::map<std::string, long> claims_by_gen;
    for (const auto& c : corpus.claims) ++claims_by_gen[c.generation_id];

    std::map<std::string, long> unfiltered_claims, unfiltered_gens;
    for (const auto& r : corpus.records) {
        auto& s = by_model[r.model_id];
        s.model_id = r.model_id;
        ++s.n_generations;
        if (r.filtered) {
            ++s.n_filtered;
        } else {
            ++unfiltered_gens[r.model_id];
            unfiltered_claims[r.model_id] += claims_by_gen[r.id];
        }
    }
    std::vector<ModelStats> out;
    for (auto& [model, s] : by_model) {
        s.filtered_rate = static_cast<double>(s.n_filtered) / s.n_generations;
        if (unfiltered_gens[model] > 0)
            s.claims_per_generation = static_cast<double>(unfiltered_claims[model]) /
                                      static_cast<double>(unfiltered_gens[model]);
        out.push_back(s);
    }
    return out;
}

[[nodiscard]] inline std::string stats_csv(const std::vector<ModelStats>& stats) {
    std::string out = "model_id,claims_per_gen,filtered_rate,n_generations,n_filtered\n";
    for (const auto& s : stats) {
        out += fmt::csv_escape(s.model_id) + ",";
        if (s.claims_per_generation) out += fmt::fixed1(*s.claims_per_generation);
        out += "," + fmt::pct(s.filtered_rate) + "," + std::to_string(s.n_generations) + "," +
               std::to_string(s.n_filtered) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline drivers
// ---------------------------------------------------------------------------

/// Claims eligible for self-judgment: Supported/Unsupported labels on
/// unfiltered generations, in sorted-id order.
[[nodiscard]] inline std::vector<AtomicClaim> judgeable_claims(const AnnotatedCorpus& corpus) {
    std::set<std::string> keep;
    for (const auto& r : corpus.records)
        if (!r.filtered) keep.insert(r.id);
    std::vector<AtomicClaim> claims;
    for (const auto& c : corpus.claims) {
        if (!keep.count(c.generation_id)) continue;
        if (c.label != ClaimLabel::Supported && c.label != ClaimLabel::Unsupported) continue;
        claims.push_back(c);
    }
    std::sort(claims.begin(), claims.end(),
              [](const AtomicClaim& a, const AtomicClaim& b) { return a.id < b.id; });
    return claims;
}

struct QaStageResult {
    std::vector<QaPair> pairs;
    std::vector<std::string> underivable;
};

/// Derives QA pairs for the given claims in sorted-id order, looking the
/// entity name up from each claim's generation.
[[nodiscard]] inline QaStageResult derive_qa_for_claims(
        const std::vector<GenerationRecord>& records, std::vector<AtomicClaim> claims,
        Gateway& gateway, const std::string& model_id) {
    std::map<std::string, std::string> entity_of;
    for (const auto& r : records) entity_of[r.id] = r.entity;
    std::sort(claims.begin(), claims.end(),
              [](const AtomicClaim& a, const AtomicClaim& b) { return a.id < b.id; });

    QaStageResult result;
    for (const auto& claim : claims) {
        auto it = entity_of.find(claim.generation_id);
        if (it == entity_of.end())
            throw ReferentialIntegrityError("claim " + claim.id + " references unknown generation " +
                                            claim.generation_id);
        const auto derived = derive_qa_all({claim}, it->second, gateway, model_id);
        for (const auto& qa : derived.pairs) result.pairs.push_back(qa);
        for (const auto& id : derived.underivable) result.underivable.push_back(id);
    }
    return result;
}

/// Derives QA pairs for every judgeable claim of the corpus.
[[nodiscard]] inline QaStageResult derive_qa_stage(const AnnotatedCorpus& corpus,
                                                   Gateway& gateway,
                                                   const std::string& model_id) {
    return derive_qa_for_claims(corpus.records, judgeable_claims(corpus), gateway, model_id);
}

struct JudgeStageResult {
    std::vector<JudgmentRecord> judgments;
    SelfScoreReport scores;
    int n_attempted = 0;
    int n_failed = 0; // gateway failures, not unparseable verdicts
};

[[nodiscard]] inline JudgeStageResult judge_stage(const AnnotatedCorpus& corpus,
                                                  JudgmentStrategy strategy,
                                                  const std::vector<QaPair>& qa_pairs,
                                                  Gateway& gateway,
                                                  const std::string& model_id) {
    std::map<std::string, std::string> entity_of;
    for (const auto& r : corpus.records) entity_of[r.id] = r.entity;
    std::map<std::string, QaPair> qa_of;
    for (const auto& qa : qa_pairs) qa_of[qa.claim_id] = qa;

    JudgeStageResult result;
    for (const auto& claim : judgeable_claims(corpus)) {
        std::optional<QaPair> qa;
        if (strategy != JudgmentStrategy::DirectAsking) {
            auto it = qa_of.find(claim.id);
            if (it == qa_of.end()) continue; // QA-underivable claims are excluded
            qa = it->second;
        }
        ++result.n_attempted;
        try {
            result.judgments.push_back(judge(claim, qa, entity_of.at(claim.generation_id),
                                             strategy, gateway, model_id));
        } catch (const GatewayError&) {
            ++result.n_failed;
        }
    }
    result.scores = self_scores(corpus.records, corpus.claims, result.judgments);
    return result;
}

/// Full offline report: bucket tables, QA derivation, judgments under the
/// Question-Answering and QA-with-NOA settings, self-scores, flip rates and
/// per-bucket factuality estimates. All outputs are deterministic given the
/// corpus and a warm cache.
struct ReportResult {
    AnalyzeResult analyze;
    QaStageResult qa;
    JudgeStageResult judge_b; // QuestionAnswering
    JudgeStageResult judge_c; // QaWithNoa
    std::vector<FlipRateRecord> flips;
};

[[nodiscard]] inline ReportResult run_report_pipeline(const AnnotatedCorpus& corpus,
                                                      Gateway& gateway,
                                                      const std::string& judge_model,
                                                      const std::string& qa_model) {
    ReportResult r;
    r.analyze = analyze_corpus(corpus);
    r.qa = derive_qa_stage(corpus, gateway, qa_model);
    r.judge_b = judge_stage(corpus, JudgmentStrategy::QuestionAnswering, r.qa.pairs, gateway,
                            judge_model);
    r.judge_c = judge_stage(corpus, JudgmentStrategy::QaWithNoa, r.qa.pairs, gateway, judge_model);
    r.flips = flip_rate(corpus.records, corpus.claims, r.judge_b.judgments, r.judge_c.judgments);
    return r;
}

/// selfscores rows from an in-memory report (bypasses the CSV round trip).
[[nodiscard]] inline std::vector<SelfScoreCsvRow> selfscore_rows(const SelfScoreReport& report) {
    return parse_selfscores_csv(selfscores_csv(report));
}

} // namespace factcurve
