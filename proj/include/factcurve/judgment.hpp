#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "factcurve/claims.hpp"
#include "factcurve/core.hpp"
#include "factcurve/gateway.hpp"
#include "factcurve/prompts.hpp"

namespace factcurve {

// ---------------------------------------------------------------------------
// Strategies and verdicts
// ---------------------------------------------------------------------------

enum class JudgmentStrategy {
    DirectAsking,
    QuestionAnswering,
    QaWithNoa,
};

[[nodiscard]] inline const char* to_string(JudgmentStrategy s) {
    switch (s) {
        case JudgmentStrategy::DirectAsking:      return "direct";
        case JudgmentStrategy::QuestionAnswering: return "qa";
        case JudgmentStrategy::QaWithNoa:         return "qa-noa";
    }
    return "qa";
}

[[nodiscard]] inline JudgmentStrategy strategy_from_string(const std::string& s) {
    if (s == "direct") return JudgmentStrategy::DirectAsking;
    if (s == "qa") return JudgmentStrategy::QuestionAnswering;
    if (s == "qa-noa") return JudgmentStrategy::QaWithNoa;
    throw ParseError("unknown judgment strategy \"" + s + "\"");
}

enum class Verdict {
    JudgedTrue,
    JudgedFalse,
    JudgedNoa,
    Unparseable,
};

[[nodiscard]] inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::JudgedTrue:  return "true";
        case Verdict::JudgedFalse: return "false";
        case Verdict::JudgedNoa:   return "noa";
        case Verdict::Unparseable: return "unparseable";
    }
    return "unparseable";
}

[[nodiscard]] inline Verdict verdict_from_string(const std::string& s) {
    if (s == "true") return Verdict::JudgedTrue;
    if (s == "false") return Verdict::JudgedFalse;
    if (s == "noa") return Verdict::JudgedNoa;
    if (s == "unparseable") return Verdict::Unparseable;
    throw ParseError("unknown verdict \"" + s + "\"");
}

struct JudgmentRecord {
    std::string claim_id;
    JudgmentStrategy strategy = JudgmentStrategy::QaWithNoa;
    std::string raw_response;
    Verdict verdict = Verdict::Unparseable;
};

// ---------------------------------------------------------------------------
// Verdict parsing
// ---------------------------------------------------------------------------

namespace detail {

[[nodiscard]] inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

/// Case-insensitive whole-token search for `needle` in `hay`, starting at
/// `from`. Returns npos when absent.
[[nodiscard]] inline std::size_t find_word(const std::string& hay, const std::string& needle,
                                           std::size_t from = 0) {
    const std::string h = lowercase(hay);
    for (std::size_t pos = h.find(needle, from); pos != std::string::npos;
         pos = h.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(h[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right_ok = end >= h.size() || !is_word_char(h[end]);
        if (left_ok && right_ok) return pos;
    }
    return std::string::npos;
}

} // namespace detail

/// Extracts a verdict from a raw judgment response: the leftmost match wins
/// among (in tie-break priority) a parenthesized option letter "(A)", a bare
/// option letter followed by punctuation, and the whole words
/// "true"/"false"/"none of the above". Option letters and the NOA phrase are
/// only recognized under the strategies whose prompts offer them.
[[nodiscard]] inline Verdict parse_verdict(const std::string& raw, JudgmentStrategy strategy) {
    const bool letters = strategy != JudgmentStrategy::DirectAsking;
    const bool noa = strategy == JudgmentStrategy::QaWithNoa;

    struct Match {
        std::size_t pos;
        int priority; // lower wins at equal position
        Verdict verdict;
    };
    std::optional<Match> best;
    auto consider = [&](std::size_t pos, int priority, Verdict v) {
        if (pos == std::string::npos) return;
        if (!best || pos < best->pos || (pos == best->pos && priority < best->priority))
            best = Match{pos, priority, v};
    };

    const std::string lower = detail::lowercase(raw);

    if (letters) {
        const std::array<std::pair<char, Verdict>, 3> options = {{
            {'a', Verdict::JudgedTrue},
            {'b', Verdict::JudgedFalse},
            {'c', Verdict::JudgedNoa},
        }};
        for (const auto& [letter, verdict] : options) {
            if (verdict == Verdict::JudgedNoa && !noa) continue;
            // "(a)" anywhere
            const std::string paren = std::string("(") + letter + ")";
            consider(lower.find(paren), 0, verdict);
            // bare letter token followed by punctuation: "b)", "a.", "c:"
            for (std::size_t i = 0; i + 1 < lower.size(); ++i) {
                if (lower[i] != letter) continue;
                if (i > 0 && detail::is_word_char(lower[i - 1])) continue;
                const char next = lower[i + 1];
                if (next == ')' || next == '.' || next == ':' || next == ',' || next == ';') {
                    consider(i, 1, verdict);
                    break;
                }
            }
        }
    }
    if (noa) consider(detail::find_word(raw, "none of the above"), 2, Verdict::JudgedNoa);
    consider(detail::find_word(raw, "true"), 2, Verdict::JudgedTrue);
    consider(detail::find_word(raw, "false"), 2, Verdict::JudgedFalse);

    return best ? best->verdict : Verdict::Unparseable;
}

// ---------------------------------------------------------------------------
// Judging
// ---------------------------------------------------------------------------

/// Renders the strategy's prompt for one claim. DirectAsking takes the claim
/// text; the QA strategies take the derived question-answer pair.
[[nodiscard]] inline std::string render_judgment_prompt(const AtomicClaim& claim,
                                                        const std::optional<QaPair>& qa,
                                                        const std::string& entity,
                                                        JudgmentStrategy strategy) {
    switch (strategy) {
        case JudgmentStrategy::DirectAsking:
            if (qa.has_value())
                throw DomainError("judge: DirectAsking takes no question-answer pair");
            return prompts::render_direct_asking(entity, claim.text);
        case JudgmentStrategy::QuestionAnswering:
            if (!qa.has_value())
                throw DomainError("judge: QuestionAnswering requires a question-answer pair");
            return prompts::render_question_answering(qa->question, qa->answer);
        case JudgmentStrategy::QaWithNoa:
            if (!qa.has_value())
                throw DomainError("judge: QaWithNoa requires a question-answer pair");
            return prompts::render_qa_with_noa(qa->question, qa->answer);
    }
    throw DomainError("judge: unknown strategy");
}

[[nodiscard]] inline JudgmentRecord judge(const AtomicClaim& claim,
                                          const std::optional<QaPair>& qa,
                                          const std::string& entity, JudgmentStrategy strategy,
                                          Gateway& gateway, const std::string& model_id,
                                          int max_tokens = 64) {
    ModelRequest req;
    req.model_id = model_id;
    req.prompt = render_judgment_prompt(claim, qa, entity, strategy);
    req.temperature = 0.0;
    req.max_tokens = max_tokens;
    const auto resp = gateway.complete(req);

    JudgmentRecord record;
    record.claim_id = claim.id;
    record.strategy = strategy;
    record.raw_response = resp.text;
    record.verdict = parse_verdict(resp.text, strategy);
    return record;
}

// ---------------------------------------------------------------------------
// Self-Known / Self-Unknown scores
// ---------------------------------------------------------------------------

/// Scores for one bucket (or the overall corpus).
struct SelfScoreRow {
    std::optional<double> self_known;
    std::optional<double> self_unknown;
    int n_judged_supported = 0;   // supported claims with a parseable verdict
    int n_judged_unsupported = 0; // unsupported claims with a parseable verdict
    int n_unparseable = 0;
    double unparseable_rate = 0.0;
};

struct SelfScoreReport {
    std::array<SelfScoreRow, kBucketCount> per_bucket;
    SelfScoreRow overall;
};

namespace detail {

struct LocatedClaim {
    const AtomicClaim* claim;
    int bucket_index;
};

/// Claims joined to their bucket, restricted to Supported/Unsupported labels,
/// in sorted claim-id order.
[[nodiscard]] inline std::vector<LocatedClaim> locate_scoreable_claims(
        const std::vector<GenerationRecord>& generations,
        const std::vector<AtomicClaim>& claims) {
    std::map<std::string, int> totals;
    for (const auto& g : generations) totals[g.id] = static_cast<int>(g.sentences.size());

    std::map<std::string, LocatedClaim> ordered;
    for (const auto& c : claims) {
        if (c.label != ClaimLabel::Supported && c.label != ClaimLabel::Unsupported) continue;
        auto it = totals.find(c.generation_id);
        if (it == totals.end())
            throw ReferentialIntegrityError("claim " + c.id + " references unknown generation " +
                                            c.generation_id);
        const auto bucket = bucket_of(relative_position(c.sentence_index, it->second));
        ordered[c.id] = {&c, bucket.index};
    }
    std::vector<LocatedClaim> out;
    out.reserve(ordered.size());
    for (auto& [id, lc] : ordered) out.push_back(lc);
    return out;
}

} // namespace detail

/// Computes Self-Known and Self-Unknown per bucket and overall from one
/// strategy's judgment table.
///
///   Self-Known   = |Supported judged true| / |Supported with parseable verdict|
///   Self-Unknown = |Unsupported judged false or NOA| / |Unsupported with parseable verdict|
///
/// NOA counts as "judged incorrect". Unparseable verdicts leave the
/// denominators and are reported via unparseable_rate. Buckets whose
/// denominator is zero report an absent score, never 0/0.
[[nodiscard]] inline SelfScoreReport self_scores(const std::vector<GenerationRecord>& generations,
                                                 const std::vector<AtomicClaim>& claims,
                                                 const std::vector<JudgmentRecord>& judgments) {
    std::map<std::string, const JudgmentRecord*> by_claim;
    for (const auto& j : judgments) by_claim[j.claim_id] = &j;

    struct Tally {
        int s_judged = 0, s_true = 0;
        int u_judged = 0, u_incorrect = 0;
        int unparseable = 0, total = 0;
    };
    std::array<Tally, kBucketCount> per_bucket{};
    Tally overall{};

    for (const auto& lc : detail::locate_scoreable_claims(generations, claims)) {
        auto it = by_claim.find(lc.claim->id);
        if (it == by_claim.end()) continue; // unjudged claims contribute nothing
        const Verdict v = it->second->verdict;

        auto add = [&](Tally& t) {
            ++t.total;
            if (v == Verdict::Unparseable) {
                ++t.unparseable;
                return;
            }
            if (lc.claim->label == ClaimLabel::Supported) {
                ++t.s_judged;
                if (v == Verdict::JudgedTrue) ++t.s_true;
            } else {
                ++t.u_judged;
                if (v == Verdict::JudgedFalse || v == Verdict::JudgedNoa) ++t.u_incorrect;
            }
        };
        add(per_bucket[lc.bucket_index]);
        add(overall);
    }

    auto to_row = [](const Tally& t) {
        SelfScoreRow row;
        row.n_judged_supported = t.s_judged;
        row.n_judged_unsupported = t.u_judged;
        row.n_unparseable = t.unparseable;
        if (t.s_judged > 0) row.self_known = static_cast<double>(t.s_true) / t.s_judged;
        if (t.u_judged > 0) row.self_unknown = static_cast<double>(t.u_incorrect) / t.u_judged;
        if (t.total > 0) row.unparseable_rate = static_cast<double>(t.unparseable) / t.total;
        return row;
    };

    SelfScoreReport report;
    for (int b = 0; b < kBucketCount; ++b) report.per_bucket[b] = to_row(per_bucket[b]);
    report.overall = to_row(overall);
    return report;
}

// ---------------------------------------------------------------------------
// Flip rate between two judgment settings
// ---------------------------------------------------------------------------

struct FlipRateRecord {
    PositionBucket bucket;
    ClaimLabel label_class = ClaimLabel::Supported;
    int n_correct_in_b = 0; // judged true under the first setting
    int n_flipped = 0;      // of those, judged false or NOA under the second
    double flip_rate = 0.0; // n_flipped / n_correct_in_b when defined
};

/// Flip rate from judgment setting `b` to setting `c`, per bucket and label
/// class. Both tables must cover the same claim ids; claims unparseable in
/// either setting are excluded.
[[nodiscard]] inline std::vector<FlipRateRecord> flip_rate(
        const std::vector<GenerationRecord>& generations,
        const std::vector<AtomicClaim>& claims,
        const std::vector<JudgmentRecord>& judgments_b,
        const std::vector<JudgmentRecord>& judgments_c) {
    std::map<std::string, Verdict> vb, vc;
    for (const auto& j : judgments_b) vb[j.claim_id] = j.verdict;
    for (const auto& j : judgments_c) vc[j.claim_id] = j.verdict;
    if (vb.size() != vc.size())
        throw MismatchedClaimSetError("flip_rate: judgment tables cover " +
                                      std::to_string(vb.size()) + " vs " +
                                      std::to_string(vc.size()) + " claims");
    for (const auto& [id, v] : vb)
        if (vc.find(id) == vc.end())
            throw MismatchedClaimSetError("flip_rate: claim " + id +
                                          " judged under the first setting only");

    struct Cell {
        int n_correct = 0;
        int n_flipped = 0;
    };
    std::array<std::array<Cell, 2>, kBucketCount> cells{}; // [bucket][0=S, 1=U]

    for (const auto& lc : detail::locate_scoreable_claims(generations, claims)) {
        auto itb = vb.find(lc.claim->id);
        auto itc = vc.find(lc.claim->id);
        if (itb == vb.end() || itc == vc.end()) continue;
        if (itb->second == Verdict::Unparseable || itc->second == Verdict::Unparseable) continue;
        if (itb->second != Verdict::JudgedTrue) continue;
        auto& cell = cells[lc.bucket_index][lc.claim->label == ClaimLabel::Supported ? 0 : 1];
        ++cell.n_correct;
        if (itc->second == Verdict::JudgedFalse || itc->second == Verdict::JudgedNoa)
            ++cell.n_flipped;
    }

    std::vector<FlipRateRecord> out;
    out.reserve(kBucketCount * 2);
    for (int b = 0; b < kBucketCount; ++b) {
        for (int cls = 0; cls < 2; ++cls) {
            FlipRateRecord rec;
            rec.bucket = position_buckets()[b];
            rec.label_class = cls == 0 ? ClaimLabel::Supported : ClaimLabel::Unsupported;
            rec.n_correct_in_b = cells[b][cls].n_correct;
            rec.n_flipped = cells[b][cls].n_flipped;
            if (rec.n_correct_in_b > 0)
                rec.flip_rate = static_cast<double>(rec.n_flipped) / rec.n_correct_in_b;
            out.push_back(rec);
        }
    }
    return out;
}

} // namespace factcurve
