#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "factcurve/errors.hpp"

namespace factcurve {

/// A (Self-Known, Self-Unknown) score pair, both in [0, 1].
struct SelfScorePair {
    double self_known = 0.0;
    double self_unknown = 0.0;
};

struct FactualityEstimate {
    double sigma = 0.0;
};

inline constexpr double kDegeneracyGuard = 1e-9;

/// Closed-form factuality estimate:
///     sigma = (1 - SelfUnknown) / (2 - SelfUnknown - SelfKnown)
/// Undefined as SelfKnown + SelfUnknown approaches 2, where the underlying
/// self-consistency equation no longer identifies sigma.
[[nodiscard]] inline FactualityEstimate estimate_factuality(const SelfScorePair& scores) {
    const double sk = scores.self_known;
    const double su = scores.self_unknown;
    if (sk + su >= 2.0 - kDegeneracyGuard)
        throw DegenerateDenominatorError(
            "estimate_factuality: self_known + self_unknown = " + std::to_string(sk + su) +
            " leaves the estimate undefined");
    return {(1.0 - su) / (2.0 - su - sk)};
}

/// Result of the fixed-point iteration oracle.
struct FixedPointResult {
    double value = 0.0;
    bool converged = false;
    /// False when the iteration map is the identity (SelfKnown = SelfUnknown = 1):
    /// every starting point is a fixed point and sigma is not identifiable.
    bool identifiable = true;
    int iterations = 0;
};

/// Independent oracle for estimate_factuality: iterates the self-consistency
/// map
///     sigma <- SelfKnown * sigma + (1 - SelfUnknown) * (1 - sigma)
/// from sigma0 = 0.5 until successive iterates differ by less than tol.
/// The map is a contraction iff |SelfKnown + SelfUnknown - 1| < 1.
[[nodiscard]] inline FixedPointResult fixed_point_oracle(double self_known, double self_unknown,
                                                         double tol = 1e-12,
                                                         int max_iter = 10000) {
    const double slope = self_known + self_unknown - 1.0;
    double sigma = 0.5;
    if (std::abs(slope) >= 1.0) {
        // Identity map: sigma -> sigma. Report the start value, flagged.
        return {sigma, false, false, 0};
    }
    for (int i = 1; i <= max_iter; ++i) {
        const double next = self_known * sigma + (1.0 - self_unknown) * (1.0 - sigma);
        const double delta = std::abs(next - sigma);
        sigma = next;
        if (delta < tol) return {sigma, true, true, i};
    }
    throw NonConvergenceError("fixed_point_oracle: no convergence after " +
                              std::to_string(max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// Claim-stream simulator
// ---------------------------------------------------------------------------

struct SimulationConfig {
    long n_claims = 0;
    double true_sigma = 0.0;
    double self_known = 0.0;
    double self_unknown = 0.0;
    std::uint64_t seed = 0;
};

struct SimulationResult {
    long n_supported = 0;
    long n_unsupported = 0;
    std::optional<double> empirical_self_known;
    std::optional<double> empirical_self_unknown;
    double judged_correct_fraction = 0.0;
};

namespace detail {

/// SplitMix64 (Steele, Lea & Flood 2014). Stateless: draw i of a stream is a
/// pure function of (seed, i), so streams can be sharded across threads with
/// no interleaving concerns and reproduce bit-exactly on any platform.
[[nodiscard]] inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from draw `counter` of stream `seed`.
[[nodiscard]] inline double uniform_draw(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(splitmix64(seed ^ splitmix64(counter)) >> 11) * 0x1.0p-53;
}

} // namespace detail

/// Draws n_claims synthetic claims: claim i is Supported with probability
/// true_sigma (draw 2i), then judged correct with probability self_known if
/// supported, or judged incorrect with probability self_unknown if
/// unsupported (draw 2i+1). Returns the empirical rates.
[[nodiscard]] inline SimulationResult simulate_claim_stream(const SimulationConfig& cfg) {
    if (cfg.n_claims <= 0)
        throw ConfigError("simulate_claim_stream: n_claims must be positive");
    for (const double rate : {cfg.true_sigma, cfg.self_known, cfg.self_unknown}) {
        if (!(rate >= 0.0 && rate <= 1.0))
            throw ConfigError("simulate_claim_stream: rates must lie in [0, 1]");
    }

    long n_supported = 0, n_unsupported = 0;
    long supported_judged_correct = 0, unsupported_judged_incorrect = 0;

    for (long i = 0; i < cfg.n_claims; ++i) {
        const double u_label = detail::uniform_draw(cfg.seed, 2 * static_cast<std::uint64_t>(i));
        const double u_judge = detail::uniform_draw(cfg.seed, 2 * static_cast<std::uint64_t>(i) + 1);
        if (u_label < cfg.true_sigma) {
            ++n_supported;
            if (u_judge < cfg.self_known) ++supported_judged_correct;
        } else {
            ++n_unsupported;
            if (u_judge < cfg.self_unknown) ++unsupported_judged_incorrect;
        }
    }

    SimulationResult result;
    result.n_supported = n_supported;
    result.n_unsupported = n_unsupported;
    if (n_supported > 0)
        result.empirical_self_known =
            static_cast<double>(supported_judged_correct) / static_cast<double>(n_supported);
    if (n_unsupported > 0)
        result.empirical_self_unknown =
            static_cast<double>(unsupported_judged_incorrect) / static_cast<double>(n_unsupported);

    const long judged_correct =
        supported_judged_correct + (n_unsupported - unsupported_judged_incorrect);
    result.judged_correct_fraction =
        static_cast<double>(judged_correct) / static_cast<double>(cfg.n_claims);
    return result;
}

// ---------------------------------------------------------------------------
// Per-bucket estimation
// ---------------------------------------------------------------------------

/// Estimate for one bucket; `sigma` absent when the input pair was absent or
/// degenerate, with `degenerate` distinguishing the two.
struct BucketEstimate {
    std::optional<double> sigma;
    bool degenerate = false;
};

/// Applies estimate_factuality bucket-wise. Degenerate pairs are reported
/// positionally instead of aborting the whole sequence.
[[nodiscard]] inline std::vector<BucketEstimate> estimate_per_bucket(
        const std::vector<std::optional<SelfScorePair>>& bucket_scores) {
    std::vector<BucketEstimate> out;
    out.reserve(bucket_scores.size());
    for (const auto& pair : bucket_scores) {
        BucketEstimate cell;
        if (pair.has_value()) {
            try {
                cell.sigma = estimate_factuality(*pair).sigma;
            } catch (const DegenerateDenominatorError&) {
                cell.degenerate = true;
            }
        }
        out.push_back(cell);
    }
    return out;
}

} // namespace factcurve
