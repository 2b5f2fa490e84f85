#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcurve/claims.hpp"
#include "factcurve/core.hpp"
#include "factcurve/gateway.hpp"
#include "factcurve/prompts.hpp"

namespace factcurve {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct AnnotatedCorpus {
    std::vector<GenerationRecord> records;
    std::vector<AtomicClaim> claims;
    std::string source_name;
};

/// Case-insensitive refusal phrase. A trailing "..." means "match the phrase
/// prefix": the text before the ellipsis must occur as a substring.
struct FilterRule {
    std::string phrase;
};

struct EntityList {
    std::vector<std::string> entities;
};

struct FilteredStats {
    int n_total = 0;
    int n_filtered = 0;
    double filtered_rate = 0.0; // fraction in [0, 1]
};

// ---------------------------------------------------------------------------
// Annotated corpus I/O (JSON-lines)
// ---------------------------------------------------------------------------
//
// One generation per line:
//   {"id", "entity", "model_id", "prompt", "output", "filtered"?,
//    "annotations": [{"claim", "label": "S"|"NS"|"IR", "sentence_index"}]}
//
// Sentences are derived from "output" with segment_sentences; claim ids are
// "<generation id>:a<k>" with k the 1-based annotation position.

namespace detail {

inline ClaimLabel parse_annotation_label(const std::string& s, long line_no) {
    if (s == "S") return ClaimLabel::Supported;
    if (s == "NS") return ClaimLabel::Unsupported;
    if (s == "IR") return ClaimLabel::Irrelevant;
    throw ParseError("unknown annotation label \"" + s + "\"", line_no);
}

} // namespace detail

[[nodiscard]] inline AnnotatedCorpus load_annotated(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open corpus file " + path.string());

    AnnotatedCorpus corpus;
    corpus.source_name = path.filename().string();
    std::set<std::string> seen_ids;

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }
        try {
            GenerationRecord record;
            record.id = j.at("id").get<std::string>();
            record.entity = j.at("entity").get<std::string>();
            record.model_id = j.at("model_id").get<std::string>();
            record.prompt = j.at("prompt").get<std::string>();
            record.text = j.at("output").get<std::string>();
            record.filtered = j.value("filtered", false);
            if (detail::trim(record.text).empty())
                throw ParseError("generation " + record.id + " has empty output", line_no);
            record.sentences = segment_sentences(record.text);
            if (!seen_ids.insert(record.id).second)
                throw ParseError("duplicate generation id " + record.id, line_no);

            int ordinal = 0;
            for (const auto& a : j.value("annotations", nlohmann::json::array())) {
                ++ordinal;
                AtomicClaim claim;
                claim.id = record.id + ":a" + std::to_string(ordinal);
                claim.generation_id = record.id;
                claim.text = a.at("claim").get<std::string>();
                claim.label = detail::parse_annotation_label(a.at("label").get<std::string>(),
                                                             line_no);
                claim.sentence_index = a.at("sentence_index").get<int>();
                if (claim.sentence_index < 1 ||
                    claim.sentence_index > static_cast<int>(record.sentences.size()))
                    throw ReferentialIntegrityError(
                        "claim " + claim.id + " references sentence " +
                        std::to_string(claim.sentence_index) + " of " +
                        std::to_string(record.sentences.size()) + " in generation " + record.id);
                corpus.claims.push_back(std::move(claim));
            }
            corpus.records.push_back(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad record: ") + e.what(), line_no);
        }
    }
    return corpus;
}

inline void save_annotated(const AnnotatedCorpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write corpus file " + path.string());

    for (const auto& record : corpus.records) {
        nlohmann::json annotations = nlohmann::json::array();
        for (const auto& claim : corpus.claims) {
            if (claim.generation_id != record.id) continue;
            annotations.push_back({{"claim", claim.text},
                                   {"label", to_string(claim.label)},
                                   {"sentence_index", claim.sentence_index}});
        }
        nlohmann::json j{
            {"id", record.id},         {"entity", record.entity},
            {"model_id", record.model_id}, {"prompt", record.prompt},
            {"output", record.text},   {"filtered", record.filtered},
            {"annotations", annotations},
        };
        out << j.dump() << "\n";
    }
    if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Entity lists
// ---------------------------------------------------------------------------

/// Plain text, one entity per line, UTF-8. Deduplicated preserving first
/// occurrence; must end up nonempty.
[[nodiscard]] inline EntityList load_entities(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open entity list " + path.string());
    EntityList list;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        const auto entity = detail::trim(line);
        if (entity.empty()) continue;
        if (seen.insert(entity).second) list.entities.push_back(entity);
    }
    if (list.entities.empty()) throw ParseError("entity list " + path.string() + " is empty");
    return list;
}

// ---------------------------------------------------------------------------
// Biography generation
// ---------------------------------------------------------------------------

struct GenerationRun {
    std::vector<GenerationRecord> records;
    std::vector<std::pair<std::string, std::string>> errors; // (entity, message)
};

namespace detail {

[[nodiscard]] inline std::string slugify(const std::string& s, std::size_t max_len = 40) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!out.empty() && out.back() != '-')
            out.push_back('-');
        if (out.size() >= max_len) break;
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "entity" : out;
}

} // namespace detail

/// Generates one biography per entity through the gateway. Failures are
/// collected per entity; successful records keep the input order.
[[nodiscard]] inline GenerationRun generate_bios(const EntityList& entities,
                                                 const std::string& model_id, Gateway& gateway,
                                                 double temperature = 0.0, int max_tokens = 1024) {
    if (entities.entities.empty())
        throw DomainError("generate_bios: entity list is empty");

    GenerationRun run;
    int index = 0;
    for (const auto& entity : entities.entities) {
        ++index;
        ModelRequest req;
        req.model_id = model_id;
        req.prompt = prompts::render_bio_prompt(entity);
        req.temperature = temperature;
        req.max_tokens = max_tokens;
        try {
            const auto resp = gateway.complete(req);
            GenerationRecord record;
            char seq[16];
            std::snprintf(seq, sizeof(seq), "%04d", index);
            record.id = std::string("g") + seq + "-" + detail::slugify(entity);
            record.entity = entity;
            record.prompt = req.prompt;
            record.model_id = model_id;
            record.text = resp.text;
            if (!detail::trim(resp.text).empty())
                record.sentences = segment_sentences(resp.text);
            record.filtered = false;
            run.records.push_back(std::move(record));
        } catch (const std::exception& e) {
            run.errors.emplace_back(entity, e.what());
        }
    }
    return run;
}

// ---------------------------------------------------------------------------
// Unresponsive-generation filtering
// ---------------------------------------------------------------------------

/// The stock refusal phrases. Trailing "..." marks a prefix rule.
[[nodiscard]] inline std::vector<FilterRule> default_filter_rules() {
    return {
        {"I don't have ..."},
        {"I do not have ..."},
        {"I need more information ..."},
        {"Please provide me ..."},
        {"Please clarify"},
        {"I apologize ..."},
        {"there isn't enough information"},
        {"Unfortunately, there is no ..."},
        {"If you can provide more information ..."},
        {"you could provide more ..."},
        {"It seems you might ..."},
    };
}

namespace detail {

/// The searchable needle of a rule: the phrase with any trailing ellipsis
/// removed, lowercased.
[[nodiscard]] inline std::string rule_needle(const FilterRule& rule) {
    std::string phrase = trim(rule.phrase);
    if (phrase.size() >= 3 && phrase.compare(phrase.size() - 3, 3, "...") == 0)
        phrase = trim(phrase.substr(0, phrase.size() - 3));
    return lowercase(phrase);
}

} // namespace detail

/// Scan window for refusal phrases; refusals open a response, so matching is
/// limited to the leading characters unless full_text is requested.
inline constexpr std::size_t kFilterScanWindow = 400;

[[nodiscard]] inline bool matches_any_rule(const std::string& text,
                                           const std::vector<FilterRule>& rules,
                                           bool full_text = false) {
    const std::string haystack =
        detail::lowercase(full_text ? text : text.substr(0, std::min(text.size(),
                                                                     kFilterScanWindow)));
    for (const auto& rule : rules) {
        const auto needle = detail::rule_needle(rule);
        if (needle.empty()) throw DomainError("filter rule with empty phrase");
        if (haystack.find(needle) != std::string::npos) return true;
    }
    return false;
}

/// Sets each record's filtered flag from the rules (overwriting any previous
/// value, so the operation is idempotent) and reports the filtered rate.
inline FilteredStats apply_filters(std::vector<GenerationRecord>& records,
                                   const std::vector<FilterRule>& rules,
                                   bool full_text = false) {
    FilteredStats stats;
    stats.n_total = static_cast<int>(records.size());
    for (auto& record : records) {
        record.filtered = matches_any_rule(record.text, rules, full_text);
        if (record.filtered) ++stats.n_filtered;
    }
    if (stats.n_total > 0)
        stats.filtered_rate = static_cast<double>(stats.n_filtered) / stats.n_total;
    return stats;
}

/// Loads filter rules from a plain text file, one phrase per line.
[[nodiscard]] inline std::vector<FilterRule> load_filter_rules(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open rules file " + path.string());
    std::vector<FilterRule> rules;
    std::string line;
    while (std::getline(in, line)) {
        const auto phrase = detail::trim(line);
        if (!phrase.empty()) rules.push_back({phrase});
    }
    if (rules.empty()) throw ParseError("rules file " + path.string() + " is empty");
    return rules;
}

// ---------------------------------------------------------------------------
// FActScore-style annotation adapter
// ---------------------------------------------------------------------------
//
// Maps human-annotation files of the shape
//   {"topic", "output", "annotations": [{"text", "human-atomic-facts":
//       [{"text", "label": "S"|"NS"|"IR"}], ...}] | null}
// into an AnnotatedCorpus. Each source sentence is located inside "output"
// and its facts are attached to the segment_sentences sentence covering that
// offset. Lines with null annotations become filtered records. Facts with
// missing or unknown labels are skipped and counted.

struct FactScoreConversionStats {
    int n_records = 0;
    int n_null_annotations = 0;
    int n_facts = 0;
    int n_skipped_facts = 0;
    int n_unlocated_sentences = 0;
};

[[nodiscard]] inline AnnotatedCorpus convert_factscore(
        const std::filesystem::path& path, const std::string& model_id = "unknown",
        FactScoreConversionStats* stats_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open annotation file " + path.string());

    AnnotatedCorpus corpus;
    corpus.source_name = path.filename().string();
    FactScoreConversionStats stats;

    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
        }

        GenerationRecord record;
        char seq[24];
        std::snprintf(seq, sizeof(seq), "%04ld", line_no);
        record.id = std::string("fs") + seq;
        record.entity = j.value("topic", std::string("unknown"));
        record.prompt = prompts::render_bio_prompt(record.entity);
        record.model_id = model_id;
        record.text = j.value("output", std::string());
        ++stats.n_records;

        const bool blank_output = detail::trim(record.text).empty();
        if (!j.contains("annotations") || j["annotations"].is_null() || blank_output) {
            record.filtered = true;
            ++stats.n_null_annotations;
            if (!blank_output) record.sentences = segment_sentences(record.text);
            corpus.records.push_back(std::move(record));
            continue;
        }

        record.sentences = segment_sentences(record.text);
        const auto spans = detail::sentence_spans(record.text);

        // Walk the source sentences in order, locating each inside the
        // output so facts land on the segmentation actually used here.
        std::size_t cursor = 0;
        int ordinal = 0;
        for (const auto& a : j["annotations"]) {
            const std::string src_sentence = a.value("text", std::string());
            int sentence_index = -1;
            if (!src_sentence.empty()) {
                const auto pos = record.text.find(src_sentence, cursor);
                const auto fallback = pos == std::string::npos
                                          ? record.text.find(src_sentence)
                                          : pos;
                if (fallback != std::string::npos) {
                    const std::size_t mid = fallback + src_sentence.size() / 2;
                    for (std::size_t k = 0; k < spans.size(); ++k) {
                        if (mid >= spans[k].begin && mid < spans[k].end) {
                            sentence_index = static_cast<int>(k) + 1;
                            break;
                        }
                    }
                    if (sentence_index < 0) {
                        // Offset fell between spans; take the nearest following one.
                        for (std::size_t k = 0; k < spans.size(); ++k) {
                            if (spans[k].end > mid) {
                                sentence_index = static_cast<int>(k) + 1;
                                break;
                            }
                        }
                    }
                    cursor = fallback + src_sentence.size();
                }
            }
            if (sentence_index < 0) {
                ++stats.n_unlocated_sentences;
                continue;
            }

            const char* facts_key =
                a.contains("human-atomic-facts") && !a["human-atomic-facts"].is_null()
                    ? "human-atomic-facts"
                    : "model-atomic-facts";
            if (!a.contains(facts_key) || a[facts_key].is_null()) continue;
            for (const auto& fact : a[facts_key]) {
                ++stats.n_facts;
                if (!fact.contains("label") || fact["label"].is_null()) {
                    ++stats.n_skipped_facts;
                    continue;
                }
                const std::string label = fact["label"].get<std::string>();
                if (label != "S" && label != "NS" && label != "IR") {
                    ++stats.n_skipped_facts;
                    continue;
                }
                ++ordinal;
                AtomicClaim claim;
                claim.id = record.id + ":a" + std::to_string(ordinal);
                claim.generation_id = record.id;
                claim.sentence_index = sentence_index;
                claim.text = fact.value("text", std::string());
                claim.label = detail::parse_annotation_label(label, line_no);
                corpus.claims.push_back(std::move(claim));
            }
        }
        corpus.records.push_back(std::move(record));
    }

    if (stats_out) *stats_out = stats;
    return corpus;
}

} // namespace factcurve
