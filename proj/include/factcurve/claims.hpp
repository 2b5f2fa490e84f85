#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "factcurve/core.hpp"
#include "factcurve/gateway.hpp"
#include "factcurve/prompts.hpp"

namespace factcurve {

// ---------------------------------------------------------------------------
// Sentence segmentation
// ---------------------------------------------------------------------------

namespace detail {

/// Tokens that end with '.' but do not end a sentence.
[[nodiscard]] inline const std::set<std::string, std::less<>>& abbreviation_guards() {
    static const std::set<std::string, std::less<>> guards = {
        "Dr.",  "Mr.",  "Mrs.", "Ms.",  "Prof.", "St.",  "Jr.",   "Sr.",  "Lt.",
        "Col.", "Gen.", "Maj.", "Capt.", "Sgt.", "Rev.", "Hon.",  "Gov.", "Sen.",
        "Rep.", "vs.",  "e.g.", "i.e.",  "cf.",  "No.",  "Mt.",   "Ft.",  "a.m.",
        "p.m.", "U.S.", "U.K.", "U.N.",  "U.S.A.",
    };
    return guards;
}

[[nodiscard]] inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

/// True when the token ending at position `dot` (a '.') is an abbreviation or
/// an initial like "A.".
[[nodiscard]] inline bool guarded_period(std::string_view text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0 && !is_space(text[start - 1])) --start;
    const std::string_view token = text.substr(start, dot - start + 1);
    if (abbreviation_guards().count(token) > 0) return true;
    // Single-letter initials: "A.", "J."
    if (token.size() == 2 && std::isupper(static_cast<unsigned char>(token[0]))) return true;
    return false;
}

struct SentenceSpan {
    std::size_t begin = 0; // byte offset of first character
    std::size_t end = 0;   // one past last character
};

/// Sentence spans over `text`: splits after ".", "?" or "!" followed by
/// whitespace (with an abbreviation guard on "."), and at newlines. Spans are
/// trimmed; every non-space character belongs to exactly one span.
[[nodiscard]] inline std::vector<SentenceSpan> sentence_spans(std::string_view text) {
    std::vector<SentenceSpan> spans;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n && is_space(text[i])) ++i;
    std::size_t begin = i;

    auto close = [&](std::size_t end) {
        while (end > begin && is_space(text[end - 1])) --end;
        if (end > begin) spans.push_back({begin, end});
    };

    while (i < n) {
        const char c = text[i];
        if (c == '\n') {
            close(i);
            ++i;
            while (i < n && is_space(text[i])) ++i;
            begin = i;
            continue;
        }
        if ((c == '.' || c == '?' || c == '!') && i + 1 < n && is_space(text[i + 1]) &&
            text[i + 1] != '\n') {
            if (c == '.' && guarded_period(text, i)) {
                ++i;
                continue;
            }
            close(i + 1);
            ++i;
            while (i < n && is_space(text[i]) && text[i] != '\n') ++i;
            begin = i;
            continue;
        }
        ++i;
    }
    close(n);
    return spans;
}

} // namespace detail

/// Rule-based sentence segmentation. Deterministic and offline; indices are
/// 1-based and `total` is set on every sentence.
[[nodiscard]] inline std::vector<Sentence> segment_sentences(const std::string& text) {
    const auto spans = detail::sentence_spans(text);
    if (spans.empty()) throw DomainError("segment_sentences: text is empty after trimming");

    std::vector<Sentence> sentences;
    sentences.reserve(spans.size());
    const int total = static_cast<int>(spans.size());
    for (int k = 0; k < total; ++k) {
        sentences.push_back(
            {k + 1, total, std::string(text.substr(spans[k].begin, spans[k].end - spans[k].begin))});
    }
    return sentences;
}

// ---------------------------------------------------------------------------
// Claim decomposition
// ---------------------------------------------------------------------------

struct DecompositionResult {
    int sentence_index = 0;
    std::vector<std::string> claims;
};

namespace detail {

[[nodiscard]] inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

[[nodiscard]] inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

/// Strips a leading list marker ("- ", "* ", "3.", "3)") from a line, or
/// returns nullopt when the line is not a list item.
[[nodiscard]] inline std::optional<std::string> strip_list_marker(std::string_view line) {
    const std::string t = trim(line);
    if (t.size() >= 2 && (t[0] == '-' || t[0] == '*') && t[1] == ' ') return trim(t.substr(2));
    if (t.rfind("\xE2\x80\xA2 ", 0) == 0) return trim(t.substr(4)); // "• "
    std::size_t d = 0;
    while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
    if (d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')'))
        return trim(t.substr(d + 1));
    return std::nullopt;
}

} // namespace detail

/// Parses a bulleted or numbered claim list out of a model response.
/// A single "NONE" item means the sentence was judged contentless.
[[nodiscard]] inline std::vector<std::string> parse_claim_list(const std::string& raw) {
    std::vector<std::string> claims;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const std::size_t eol = raw.find('\n', pos);
        const std::string_view line(raw.data() + pos,
                                    (eol == std::string::npos ? raw.size() : eol) - pos);
        if (auto item = detail::strip_list_marker(line); item && !item->empty())
            claims.push_back(*item);
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    if (claims.size() == 1 && detail::lowercase(claims[0]) == "none") return {};
    if (claims.empty())
        throw UnparseableResponseError("decomposition response contains no claim list", raw);
    return claims;
}

/// Deterministic claim id: generation id, sentence index, 1-based ordinal.
[[nodiscard]] inline std::string make_claim_id(const std::string& generation_id,
                                               int sentence_index, int ordinal) {
    return generation_id + ":s" + std::to_string(sentence_index) + ":c" + std::to_string(ordinal);
}

/// Decomposes one sentence into atomic claims via the gateway.
[[nodiscard]] inline DecompositionResult decompose_claims(const Sentence& sentence,
                                                          const GenerationRecord& context,
                                                          Gateway& gateway,
                                                          const std::string& model_id,
                                                          int max_tokens = 512) {
    ModelRequest req;
    req.model_id = model_id;
    req.prompt = prompts::render_decomposition(context.entity, context.text, sentence.text);
    req.temperature = 0.0;
    req.max_tokens = max_tokens;
    const auto resp = gateway.complete(req);
    return {sentence.index, parse_claim_list(resp.text)};
}

/// Decomposes every sentence of a record, assigning deterministic claim ids.
/// Claims come back unlabeled; labeling is an external verifier's job.
[[nodiscard]] inline std::vector<AtomicClaim> decompose_record(const GenerationRecord& record,
                                                              Gateway& gateway,
                                                              const std::string& model_id) {
    std::vector<AtomicClaim> claims;
    for (const auto& sentence : record.sentences) {
        const auto result = decompose_claims(sentence, record, gateway, model_id);
        int ordinal = 1;
        for (const auto& text : result.claims) {
            claims.push_back({make_claim_id(record.id, sentence.index, ordinal), record.id,
                              sentence.index, text, ClaimLabel::Unlabeled});
            ++ordinal;
        }
    }
    return claims;
}

// ---------------------------------------------------------------------------
// Question-answer derivation
// ---------------------------------------------------------------------------

struct QaPair {
    std::string claim_id;
    std::string question;
    std::string answer;
};

/// Splits a QA-derivation response on its first '#'; both sides are trimmed
/// and must be nonempty.
[[nodiscard]] inline QaPair parse_qa_response(const std::string& claim_id, const std::string& raw) {
    const auto sep = raw.find('#');
    if (sep == std::string::npos)
        throw MissingSeparatorError("QA response for claim " + claim_id + " lacks '#'", raw);
    QaPair qa;
    qa.claim_id = claim_id;
    qa.question = detail::trim(std::string_view(raw).substr(0, sep));
    qa.answer = detail::trim(std::string_view(raw).substr(sep + 1));
    if (qa.question.empty())
        throw UnparseableResponseError("QA response for claim " + claim_id + " has empty question",
                                       raw);
    if (qa.answer.empty())
        throw UnparseableResponseError("QA response for claim " + claim_id + " has empty answer",
                                       raw);
    return qa;
}

/// Derives a question-answer pair from a claim via the gateway.
[[nodiscard]] inline QaPair derive_qa(const AtomicClaim& claim, const std::string& entity,
                                      Gateway& gateway, const std::string& model_id,
                                      int max_tokens = 256) {
    if (claim.text.empty()) throw DomainError("derive_qa: empty claim text");
    ModelRequest req;
    req.model_id = model_id;
    req.prompt = prompts::render_qa_derivation(entity, claim.text);
    req.temperature = 0.0;
    req.max_tokens = max_tokens;
    const auto resp = gateway.complete(req);
    return parse_qa_response(claim.id, resp.text);
}

/// Batch QA derivation with one retry on parse failure. Claims that still
/// fail are returned in `underivable` and excluded from downstream scoring.
struct QaDerivation {
    std::vector<QaPair> pairs;
    std::vector<std::string> underivable; // claim ids
};

[[nodiscard]] inline QaDerivation derive_qa_all(const std::vector<AtomicClaim>& claims,
                                                const std::string& entity, Gateway& gateway,
                                                const std::string& model_id) {
    QaDerivation out;
    for (const auto& claim : claims) {
        bool done = false;
        for (int attempt = 0; attempt < 2 && !done; ++attempt) {
            try {
                out.pairs.push_back(derive_qa(claim, entity, gateway, model_id));
                done = true;
            } catch (const UnparseableResponseError&) {
                // retry once; with a warm cache the retry sees the same
                // response and the claim lands in `underivable`
            }
        }
        if (!done) out.underivable.push_back(claim.id);
    }
    return out;
}

} // namespace factcurve
