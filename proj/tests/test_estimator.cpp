#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "factcurve/estimator.hpp"

using namespace factcurve;

TEST_CASE("estimate_factuality analytic points") {
    CHECK(estimate_factuality({1.0, 0.0}).sigma == Catch::Approx(1.0).margin(1e-12));
    CHECK(estimate_factuality({0.0, 0.0}).sigma == Catch::Approx(0.5).margin(1e-12));
    CHECK(estimate_factuality({0.0, 1.0}).sigma == Catch::Approx(0.0).margin(1e-12));
    CHECK(estimate_factuality({0.5, 0.5}).sigma == Catch::Approx(0.5).margin(1e-12));
    CHECK(estimate_factuality({0.8, 0.3}).sigma == Catch::Approx(0.7 / 0.9).margin(1e-9));
    CHECK_THROWS_AS(estimate_factuality({1.0, 1.0}), DegenerateDenominatorError);
    CHECK_THROWS_AS(estimate_factuality({1.0, 1.0 - 1e-10}), DegenerateDenominatorError);
}

TEST_CASE("estimate stays in [0, 1] for valid score pairs") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double sk = unit(rng), su = unit(rng);
        if (sk + su > 1.9) continue;
        const double sigma = estimate_factuality({sk, su}).sigma;
        CHECK(sigma >= 0.0);
        CHECK(sigma <= 1.0);
    }
}

TEST_CASE("estimate is increasing in self-known, decreasing in self-unknown") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 1000) {
        double sk = unit(rng) * 0.95, su = unit(rng) * 0.95;
        if (sk + su > 1.9 - 2 * h) continue;
        ++checked;
        const double base = estimate_factuality({sk, su}).sigma;
        const double up_sk = estimate_factuality({sk + h, su}).sigma;
        const double up_su = estimate_factuality({sk, su + h}).sigma;
        INFO("sk=" << sk << " su=" << su);
        CHECK(up_sk > base);  // dsigma/dSK > 0
        CHECK(up_su < base);  // dsigma/dSU < 0
    }
}

TEST_CASE("fixed_point_oracle converges to the closed form") {
    const auto r = fixed_point_oracle(0.8, 0.3);
    CHECK(r.converged);
    CHECK(r.identifiable);
    CHECK(r.value == Catch::Approx(0.7 / 0.9).margin(1e-9));
}

TEST_CASE("fixed_point_oracle at the symmetric point settles in one step") {
    const auto r = fixed_point_oracle(0.5, 0.5);
    CHECK(r.converged);
    CHECK(r.value == Catch::Approx(0.5).margin(1e-15));
    CHECK(r.iterations <= 2);
}

TEST_CASE("fixed_point_oracle flags the identity map as non-identifiable") {
    // With both scores at 1 the iteration map is sigma -> sigma: every start
    // value is a fixed point and nothing is learned.
    const auto r = fixed_point_oracle(1.0, 1.0);
    CHECK_FALSE(r.identifiable);
    CHECK_FALSE(r.converged);
    CHECK(r.value == 0.5); // the start value, reported as-is
}

TEST_CASE("oracle agrees with the closed form on random contraction pairs") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int checked = 0;
    while (checked < 1000) {
        const double sk = unit(rng), su = unit(rng);
        if (std::abs(sk + su - 1.0) >= 0.999) continue; // keep a contraction margin
        ++checked;
        const auto oracle = fixed_point_oracle(sk, su, 1e-13, 100000);
        const auto closed = estimate_factuality({sk, su});
        REQUIRE(oracle.converged);
        CHECK(oracle.value == Catch::Approx(closed.sigma).margin(1e-9));
    }
}

TEST_CASE("simulate_claim_stream is deterministic per seed") {
    SimulationConfig cfg{10000, 0.6, 0.7, 0.4, 42};
    const auto a = simulate_claim_stream(cfg);
    const auto b = simulate_claim_stream(cfg);
    CHECK(a.n_supported == b.n_supported);
    CHECK(a.judged_correct_fraction == b.judged_correct_fraction);
    CHECK(a.empirical_self_known == b.empirical_self_known);
    CHECK(a.empirical_self_unknown == b.empirical_self_unknown);

    cfg.seed = 43;
    const auto c = simulate_claim_stream(cfg);
    CHECK(a.n_supported != c.n_supported); // different stream
}

TEST_CASE("simulate_claim_stream with sigma 1 draws no unsupported claims") {
    SimulationConfig cfg{5000, 1.0, 0.9, 0.5, 7};
    const auto r = simulate_claim_stream(cfg);
    CHECK(r.n_unsupported == 0);
    CHECK_FALSE(r.empirical_self_unknown.has_value());
    CHECK(r.empirical_self_known.has_value());
}

TEST_CASE("simulate_claim_stream rejects nonpositive claim counts and bad rates") {
    CHECK_THROWS_AS(simulate_claim_stream({0, 0.5, 0.5, 0.5, 1}), ConfigError);
    CHECK_THROWS_AS(simulate_claim_stream({10, 1.5, 0.5, 0.5, 1}), ConfigError);
    CHECK_THROWS_AS(simulate_claim_stream({10, 0.5, -0.1, 0.5, 1}), ConfigError);
    CHECK_THROWS_AS(simulate_claim_stream({10, 0.5, 0.5, 2.0, 1}), ConfigError);
}

TEST_CASE("Monte Carlo run at the analytic fixed point recovers sigma") {
    // At sigma* = (1-SU)/(2-SK-SU) the judged-correct fraction equals sigma*.
    const double sk = 0.8, su = 0.3;
    const double sigma_star = 0.7 / 0.9;
    SimulationConfig cfg{100000, sigma_star, sk, su, 42};
    const auto r = simulate_claim_stream(cfg);

    CHECK(std::abs(r.judged_correct_fraction - sigma_star) < 0.01);

    REQUIRE(r.empirical_self_known.has_value());
    REQUIRE(r.empirical_self_unknown.has_value());
    const auto est = estimate_factuality({*r.empirical_self_known, *r.empirical_self_unknown});
    CHECK(std::abs(est.sigma - sigma_star) < 0.02);

    // Three-standard-error consistency band around the analytic target.
    const double n = static_cast<double>(cfg.n_claims);
    const double se = std::sqrt(sigma_star * (1 - sigma_star) / n);
    CHECK(std::abs(static_cast<double>(r.n_supported) / n - sigma_star) < 3 * se + 1e-12);
}

TEST_CASE("estimate_per_bucket maps pairs positionally") {
    std::vector<std::optional<SelfScorePair>> pairs(5, SelfScorePair{0.8, 0.3});
    const auto cells = estimate_per_bucket(pairs);
    REQUIRE(cells.size() == 5);
    for (const auto& c : cells) {
        REQUIRE(c.sigma.has_value());
        CHECK(*c.sigma == Catch::Approx(0.7 / 0.9).margin(1e-9));
        CHECK_FALSE(c.degenerate);
    }
}

TEST_CASE("estimate_per_bucket keeps absent and degenerate cells distinct") {
    std::vector<std::optional<SelfScorePair>> pairs = {
        SelfScorePair{0.8, 0.3},
        std::nullopt,
        SelfScorePair{1.0, 1.0},
    };
    const auto cells = estimate_per_bucket(pairs);
    CHECK(cells[0].sigma.has_value());
    CHECK_FALSE(cells[1].sigma.has_value());
    CHECK_FALSE(cells[1].degenerate);
    CHECK_FALSE(cells[2].sigma.has_value());
    CHECK(cells[2].degenerate);
}

TEST_CASE("estimates decrease strictly as self-unknown rises") {
    std::vector<std::optional<SelfScorePair>> pairs;
    for (int b = 0; b < 5; ++b) pairs.push_back(SelfScorePair{0.7, 0.1 + 0.15 * b});
    const auto cells = estimate_per_bucket(pairs);
    for (int b = 1; b < 5; ++b) {
        REQUIRE(cells[b].sigma.has_value());
        CHECK(*cells[b].sigma < *cells[b - 1].sigma);
    }
}

TEST_CASE("fixed_point_oracle reports non-convergence under a starved budget") {
    // Slope 0.95 with the fixed point away from the start value needs far
    // more than two iterations to land within 1e-15.
    CHECK_THROWS_AS(fixed_point_oracle(0.98, 0.97, 1e-15, 2), NonConvergenceError);
}
