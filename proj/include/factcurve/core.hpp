#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "factcurve/errors.hpp"

namespace factcurve {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Label assigned to an atomic claim by an annotator or external verifier.
enum class ClaimLabel {
    Supported,
    Unsupported,
    Irrelevant,
    Unlabeled,
};

[[nodiscard]] inline const char* to_string(ClaimLabel label) {
    switch (label) {
        case ClaimLabel::Supported:   return "S";
        case ClaimLabel::Unsupported: return "NS";
        case ClaimLabel::Irrelevant:  return "IR";
        case ClaimLabel::Unlabeled:   return "UNL";
    }
    return "UNL";
}

[[nodiscard]] inline ClaimLabel claim_label_from_string(const std::string& s) {
    if (s == "S")   return ClaimLabel::Supported;
    if (s == "NS")  return ClaimLabel::Unsupported;
    if (s == "IR")  return ClaimLabel::Irrelevant;
    if (s == "UNL") return ClaimLabel::Unlabeled;
    throw ParseError("unknown claim label \"" + s + "\"");
}

/// One sentence of a generation. Indices are 1-based; `total` is the
/// sentence count of the whole generation, so index/total is the sentence's
/// relative position in (0, 1].
struct Sentence {
    int index = 1;
    int total = 1;
    std::string text;
};

/// One long-form model output together with its prompt and segmentation.
struct GenerationRecord {
    std::string id;
    std::string entity;
    std::string prompt;
    std::string model_id;
    std::string text;
    std::vector<Sentence> sentences;
    bool filtered = false;
};

/// A short single-fact statement decomposed from a generation.
struct AtomicClaim {
    std::string id;
    std::string generation_id;
    int sentence_index = 1;
    std::string text;
    ClaimLabel label = ClaimLabel::Unlabeled;
};

/// One of the five relative-position ranges partitioning (0, 1]:
/// (0,0.2], (0.2,0.4], (0.4,0.6], (0.6,0.8], (0.8,1.0].
struct PositionBucket {
    int index = 0;
    double lower = 0.0; // exclusive
    double upper = 0.2; // inclusive

    friend bool operator==(const PositionBucket&, const PositionBucket&) = default;
};

inline constexpr int kBucketCount = 5;

[[nodiscard]] inline const std::array<PositionBucket, kBucketCount>& position_buckets() {
    static const std::array<PositionBucket, kBucketCount> buckets = {{
        {0, 0.0, 0.2},
        {1, 0.2, 0.4},
        {2, 0.4, 0.6},
        {3, 0.6, 0.8},
        {4, 0.8, 1.0},
    }};
    return buckets;
}

/// Aggregated statistics for one position bucket.
struct BucketStats {
    PositionBucket bucket;

    // Macro-averaged per-sentence claim fractions. Sum to 1 when
    // n_sentences > 0.
    double frac_supported = 0.0;
    double frac_unsupported = 0.0;
    double frac_irrelevant = 0.0;
    int n_sentences = 0;

    // Per-generation average claim counts landing in this bucket.
    double avg_supported_count = 0.0;
    double avg_unsupported_count = 0.0;

    // Self-judgment scores; present only when the corresponding judged
    // count is nonzero.
    std::optional<double> self_known;
    std::optional<double> self_unknown;
    int n_judged_supported = 0;
    int n_judged_unsupported = 0;
};

// ---------------------------------------------------------------------------
// Bucket arithmetic
// ---------------------------------------------------------------------------

/// Relative position of sentence `index` out of `total`, in (0, 1].
[[nodiscard]] inline double relative_position(int index, int total) {
    if (total < 1)
        throw DomainError("relative_position: total must be >= 1, got " + std::to_string(total));
    if (index < 1 || index > total)
        throw DomainError("relative_position: index " + std::to_string(index) +
                          " outside [1, " + std::to_string(total) + "]");
    return static_cast<double>(index) / static_cast<double>(total);
}

/// The unique bucket with lower < pos <= upper.
[[nodiscard]] inline PositionBucket bucket_of(double pos) {
    if (!(pos > 0.0) || !(pos <= 1.0))
        throw DomainError("bucket_of: position " + std::to_string(pos) + " outside (0, 1]");
    for (const auto& b : position_buckets()) {
        if (pos > b.lower && pos <= b.upper) return b;
    }
    // Unreachable: the buckets partition (0, 1].
    throw DomainError("bucket_of: no bucket for position " + std::to_string(pos));
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace detail {

/// Claims grouped by (generation id, sentence index), with claim order inside
/// a group fixed by claim id so that floating-point accumulation is
/// deterministic regardless of input order.
using ClaimsBySentence = std::map<std::pair<std::string, int>, std::vector<const AtomicClaim*>>;

inline ClaimsBySentence group_claims(const std::vector<GenerationRecord>& generations,
                                     const std::vector<AtomicClaim>& claims,
                                     bool require_labels) {
    std::map<std::string, const GenerationRecord*> by_id;
    for (const auto& g : generations) by_id[g.id] = &g;

    ClaimsBySentence grouped;
    for (const auto& c : claims) {
        if (require_labels && c.label == ClaimLabel::Unlabeled)
            throw DomainError("claim " + c.id + " is unlabeled");
        auto it = by_id.find(c.generation_id);
        if (it == by_id.end())
            throw ReferentialIntegrityError("claim " + c.id + " references unknown generation " +
                                            c.generation_id);
        const auto n = static_cast<int>(it->second->sentences.size());
        if (c.sentence_index < 1 || c.sentence_index > n)
            throw ReferentialIntegrityError("claim " + c.id + " references sentence " +
                                            std::to_string(c.sentence_index) + " of " +
                                            std::to_string(n) + " in generation " +
                                            c.generation_id);
        grouped[{c.generation_id, c.sentence_index}].push_back(&c);
    }
    for (auto& [key, group] : grouped) {
        std::sort(group.begin(), group.end(),
                  [](const AtomicClaim* a, const AtomicClaim* b) { return a->id < b->id; });
    }
    return grouped;
}

inline int sentence_total(const std::vector<GenerationRecord>& generations,
                          const std::string& generation_id) {
    for (const auto& g : generations)
        if (g.id == generation_id) return static_cast<int>(g.sentences.size());
    throw ReferentialIntegrityError("unknown generation " + generation_id);
}

} // namespace detail

/// Macro-average claim fractions per bucket: each sentence with at least one
/// claim contributes its own supported/unsupported/irrelevant fractions with
/// equal weight to the bucket its relative position falls in.
[[nodiscard]] inline std::vector<BucketStats> macro_average_fractions(
        const std::vector<GenerationRecord>& generations,
        const std::vector<AtomicClaim>& claims) {
    auto grouped = detail::group_claims(generations, claims, /*require_labels=*/true);
    if (grouped.empty())
        throw EmptyCorpusError("macro_average_fractions: no sentence has any claim");

    std::map<std::string, int> totals;
    for (const auto& g : generations) totals[g.id] = static_cast<int>(g.sentences.size());

    std::array<double, kBucketCount> sum_s{}, sum_u{}, sum_i{};
    std::array<int, kBucketCount> n_sent{};

    for (const auto& [key, group] : grouped) {
        const auto& [gen_id, sentence_index] = key;
        int n_s = 0, n_u = 0, n_i = 0;
        for (const auto* c : group) {
            switch (c->label) {
                case ClaimLabel::Supported:   ++n_s; break;
                case ClaimLabel::Unsupported: ++n_u; break;
                case ClaimLabel::Irrelevant:  ++n_i; break;
                case ClaimLabel::Unlabeled:   break; // rejected in group_claims
            }
        }
        const double total = static_cast<double>(n_s + n_u + n_i);
        const auto bucket = bucket_of(relative_position(sentence_index, totals.at(gen_id)));
        sum_s[bucket.index] += n_s / total;
        sum_u[bucket.index] += n_u / total;
        sum_i[bucket.index] += n_i / total;
        n_sent[bucket.index] += 1;
    }

    std::vector<BucketStats> out(kBucketCount);
    for (int b = 0; b < kBucketCount; ++b) {
        out[b].bucket = position_buckets()[b];
        out[b].n_sentences = n_sent[b];
        if (n_sent[b] > 0) {
            out[b].frac_supported = sum_s[b] / n_sent[b];
            out[b].frac_unsupported = sum_u[b] / n_sent[b];
            out[b].frac_irrelevant = sum_i[b] / n_sent[b];
        }
    }
    return out;
}

/// Per-generation average supported/unsupported claim counts per bucket.
/// Every generation counts toward the denominator, whether or not it has a
/// sentence in the bucket.
[[nodiscard]] inline std::vector<BucketStats> bucket_claim_counts(
        const std::vector<GenerationRecord>& generations,
        const std::vector<AtomicClaim>& claims) {
    if (generations.empty())
        throw EmptyCorpusError("bucket_claim_counts: no generations");
    auto grouped = detail::group_claims(generations, claims, /*require_labels=*/true);

    std::map<std::string, int> totals;
    for (const auto& g : generations) totals[g.id] = static_cast<int>(g.sentences.size());

    std::array<long, kBucketCount> n_supported{}, n_unsupported{};
    for (const auto& [key, group] : grouped) {
        const auto& [gen_id, sentence_index] = key;
        const auto bucket = bucket_of(relative_position(sentence_index, totals.at(gen_id)));
        for (const auto* c : group) {
            if (c->label == ClaimLabel::Supported) ++n_supported[bucket.index];
            if (c->label == ClaimLabel::Unsupported) ++n_unsupported[bucket.index];
        }
    }

    const double n_gen = static_cast<double>(generations.size());
    std::vector<BucketStats> out(kBucketCount);
    for (int b = 0; b < kBucketCount; ++b) {
        out[b].bucket = position_buckets()[b];
        out[b].avg_supported_count = n_supported[b] / n_gen;
        out[b].avg_unsupported_count = n_unsupported[b] / n_gen;
    }
    return out;
}

/// Fraction of supported claims among supported + unsupported ones.
/// Irrelevant and unlabeled claims do not enter the denominator.
[[nodiscard]] inline double factuality_of_set(const std::vector<AtomicClaim>& claims) {
    long n_s = 0, n_u = 0;
    for (const auto& c : claims) {
        if (c.label == ClaimLabel::Supported) ++n_s;
        if (c.label == ClaimLabel::Unsupported) ++n_u;
    }
    if (n_s + n_u == 0)
        throw EmptySetError("factuality_of_set: no supported or unsupported claims");
    return static_cast<double>(n_s) / static_cast<double>(n_s + n_u);
}

} // namespace factcurve
