#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

#include "factcurve/judgment.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace factcurve;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CannedTransport : Transport {
    std::string reply;
    ModelResponse send(const ModelRequest&) override { return {reply, false, {}}; }
};

JudgmentRecord make_judgment(const std::string& claim_id, JudgmentStrategy strategy, Verdict v) {
    return {claim_id, strategy, std::string("fixture:") + to_string(v), v};
}

} // namespace

TEST_CASE("parse_verdict recognizes option letters, words and the NOA phrase") {
    using S = JudgmentStrategy;
    CHECK(parse_verdict("(A) True", S::QaWithNoa) == Verdict::JudgedTrue);
    CHECK(parse_verdict("B) False", S::QuestionAnswering) == Verdict::JudgedFalse);
    CHECK(parse_verdict("The proposed answer is: (C) None of the above", S::QaWithNoa) ==
          Verdict::JudgedNoa);
    CHECK(parse_verdict("True. The answer is supported.", S::DirectAsking) ==
          Verdict::JudgedTrue);
    CHECK(parse_verdict("false", S::DirectAsking) == Verdict::JudgedFalse);
    CHECK(parse_verdict("I cannot determine this.", S::QaWithNoa) == Verdict::Unparseable);
}

TEST_CASE("parse_verdict picks the leftmost match") {
    // The NOA phrase appears before the later "(A)" and wins by position.
    CHECK(parse_verdict("It is none of the above, (A) could be tempting.",
                        JudgmentStrategy::QaWithNoa) == Verdict::JudgedNoa);
    // Parenthesized letters beat the words that follow them.
    CHECK(parse_verdict("(B) False, not true.", JudgmentStrategy::QaWithNoa) ==
          Verdict::JudgedFalse);
}

TEST_CASE("parse_verdict only accepts tokens the strategy's prompt offered") {
    // No lettered options exist under Direct-Asking.
    CHECK(parse_verdict("(A)", JudgmentStrategy::DirectAsking) == Verdict::Unparseable);
    // NOA is not an option under plain Question-Answering.
    CHECK(parse_verdict("None of the above.", JudgmentStrategy::QuestionAnswering) ==
          Verdict::Unparseable);
    CHECK(parse_verdict("(C) None of the above", JudgmentStrategy::QuestionAnswering) ==
          Verdict::Unparseable);
}

TEST_CASE("parse_verdict ignores letters and words embedded in other tokens") {
    CHECK(parse_verdict("Basically untrue-ish, unclear.", JudgmentStrategy::QaWithNoa) ==
          Verdict::Unparseable);
    CHECK(parse_verdict("A grand statement without options", JudgmentStrategy::QaWithNoa) ==
          Verdict::Unparseable);
}

TEST_CASE("judgment prompts match their golden template bytes") {
    AtomicClaim claim{"c1", "g1", 1, "Lanny Flaherty is an American.", ClaimLabel::Supported};
    QaPair qa{"c1", "What nationality is Lanny Flaherty?", "American"};

    CHECK(render_judgment_prompt(claim, std::nullopt, "Lanny Flaherty",
                                 JudgmentStrategy::DirectAsking) ==
          read_file(helpers::golden("direct_asking.txt")));
    CHECK(render_judgment_prompt(claim, qa, "Lanny Flaherty",
                                 JudgmentStrategy::QuestionAnswering) ==
          read_file(helpers::golden("question_answering.txt")));
    CHECK(render_judgment_prompt(claim, qa, "Lanny Flaherty", JudgmentStrategy::QaWithNoa) ==
          read_file(helpers::golden("qa_noa.txt")));
}

TEST_CASE("judge requires a QA pair exactly when the strategy uses one") {
    AtomicClaim claim{"c1", "g1", 1, "Some claim.", ClaimLabel::Supported};
    QaPair qa{"c1", "Q?", "A"};
    CHECK_THROWS_AS(render_judgment_prompt(claim, qa, "E", JudgmentStrategy::DirectAsking),
                    DomainError);
    CHECK_THROWS_AS(
        render_judgment_prompt(claim, std::nullopt, "E", JudgmentStrategy::QuestionAnswering),
        DomainError);
    CHECK_THROWS_AS(render_judgment_prompt(claim, std::nullopt, "E", JudgmentStrategy::QaWithNoa),
                    DomainError);
}

TEST_CASE("judge returns the parsed verdict with the raw response attached") {
    helpers::TempDir dir("judge");
    auto transport = std::make_shared<CannedTransport>();
    transport->reply = "The proposed answer is: (C) None of the above";
    auto cache = std::make_shared<ResponseCache>(dir.path);
    Gateway gw(GatewayMode::Record, cache, transport);

    AtomicClaim claim{"c1", "g1", 1, "Lanny Flaherty is an American.", ClaimLabel::Supported};
    QaPair qa{"c1", "What nationality is Lanny Flaherty?", "American"};
    const auto rec = judge(claim, qa, "Lanny Flaherty", JudgmentStrategy::QaWithNoa, gw, "m");
    CHECK(rec.claim_id == "c1");
    CHECK(rec.strategy == JudgmentStrategy::QaWithNoa);
    CHECK(rec.verdict == Verdict::JudgedNoa);
    CHECK(rec.raw_response == transport->reply);
}

TEST_CASE("self_scores hand-counted example") {
    // One-sentence generation: every claim lands in bucket 4.
    auto gen = helpers::make_generation("g1", 1);
    std::vector<AtomicClaim> claims;
    for (int i = 0; i < 4; ++i)
        claims.push_back({"s" + std::to_string(i), "g1", 1, "x", ClaimLabel::Supported});
    for (int i = 0; i < 2; ++i)
        claims.push_back({"u" + std::to_string(i), "g1", 1, "x", ClaimLabel::Unsupported});

    const auto strategy = JudgmentStrategy::QaWithNoa;
    std::vector<JudgmentRecord> judgments = {
        make_judgment("s0", strategy, Verdict::JudgedTrue),
        make_judgment("s1", strategy, Verdict::JudgedTrue),
        make_judgment("s2", strategy, Verdict::JudgedTrue),
        make_judgment("s3", strategy, Verdict::JudgedFalse),
        make_judgment("u0", strategy, Verdict::JudgedFalse),
        make_judgment("u1", strategy, Verdict::JudgedNoa),
    };
    const auto report = self_scores({gen}, claims, judgments);
    REQUIRE(report.overall.self_known.has_value());
    CHECK(*report.overall.self_known == 0.75);
    REQUIRE(report.overall.self_unknown.has_value());
    CHECK(*report.overall.self_unknown == 1.0); // NOA counts as judged-incorrect
    CHECK(report.per_bucket[4].n_judged_supported == 4);
    CHECK(report.per_bucket[4].n_judged_unsupported == 2);
    for (int b = 0; b < 4; ++b) {
        CHECK_FALSE(report.per_bucket[b].self_known.has_value());
        CHECK_FALSE(report.per_bucket[b].self_unknown.has_value());
    }
}

TEST_CASE("self_scores excludes unparseable verdicts from denominators") {
    auto gen = helpers::make_generation("g1", 1);
    std::vector<AtomicClaim> claims = {
        {"s0", "g1", 1, "x", ClaimLabel::Supported},
        {"s1", "g1", 1, "x", ClaimLabel::Supported},
        {"u0", "g1", 1, "x", ClaimLabel::Unsupported},
    };
    const auto strategy = JudgmentStrategy::QaWithNoa;
    std::vector<JudgmentRecord> judgments = {
        make_judgment("s0", strategy, Verdict::JudgedTrue),
        make_judgment("s1", strategy, Verdict::Unparseable),
        make_judgment("u0", strategy, Verdict::Unparseable),
    };
    const auto report = self_scores({gen}, claims, judgments);
    REQUIRE(report.overall.self_known.has_value());
    CHECK(*report.overall.self_known == 1.0); // one parseable supported claim
    CHECK_FALSE(report.overall.self_unknown.has_value());
    CHECK(report.overall.n_unparseable == 2);
    CHECK(report.overall.unparseable_rate == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("self_scores ignores ordering, irrelevant claims and NOA-vs-false coding") {
    auto corpus = helpers::random_corpus(31);
    const auto strategy = JudgmentStrategy::QaWithNoa;

    std::mt19937 rng(77);
    std::vector<JudgmentRecord> judgments;
    for (const auto& c : corpus.claims) {
        const auto roll = rng() % 4;
        const Verdict v = roll == 0   ? Verdict::JudgedTrue
                          : roll == 1 ? Verdict::JudgedFalse
                          : roll == 2 ? Verdict::JudgedNoa
                                      : Verdict::Unparseable;
        judgments.push_back(make_judgment(c.id, strategy, v));
    }
    const auto base = self_scores(corpus.generations, corpus.claims, judgments);

    // Shuffle everything.
    auto shuffled_claims = corpus.claims;
    auto shuffled_judgments = judgments;
    std::shuffle(shuffled_claims.begin(), shuffled_claims.end(), rng);
    std::shuffle(shuffled_judgments.begin(), shuffled_judgments.end(), rng);
    const auto shuffled = self_scores(corpus.generations, shuffled_claims, shuffled_judgments);
    CHECK(shuffled.overall.self_known == base.overall.self_known);
    CHECK(shuffled.overall.self_unknown == base.overall.self_unknown);

    // Extra irrelevant claims change nothing, judged or not.
    auto padded_claims = corpus.claims;
    auto padded_judgments = judgments;
    for (int i = 0; i < 5; ++i) {
        AtomicClaim ir{"ir" + std::to_string(i), corpus.generations[0].id, 1, "x",
                       ClaimLabel::Irrelevant};
        padded_claims.push_back(ir);
        padded_judgments.push_back(make_judgment(ir.id, strategy, Verdict::JudgedTrue));
    }
    const auto padded = self_scores(corpus.generations, padded_claims, padded_judgments);
    CHECK(padded.overall.self_known == base.overall.self_known);
    CHECK(padded.overall.self_unknown == base.overall.self_unknown);

    // Recoding NOA as False leaves self-unknown untouched.
    auto recoded = judgments;
    for (auto& j : recoded)
        if (j.verdict == Verdict::JudgedNoa) j.verdict = Verdict::JudgedFalse;
    const auto recoded_report = self_scores(corpus.generations, corpus.claims, recoded);
    CHECK(recoded_report.overall.self_unknown == base.overall.self_unknown);
    for (int b = 0; b < kBucketCount; ++b)
        CHECK(recoded_report.per_bucket[b].self_unknown == base.per_bucket[b].self_unknown);
}

TEST_CASE("self_scores values stay inside [0, 1] wherever present") {
    for (unsigned seed = 300; seed < 330; ++seed) {
        auto corpus = helpers::random_corpus(seed);
        std::mt19937 rng(seed);
        std::vector<JudgmentRecord> judgments;
        for (const auto& c : corpus.claims) {
            const auto roll = rng() % 4;
            const Verdict v = roll == 0   ? Verdict::JudgedTrue
                              : roll == 1 ? Verdict::JudgedFalse
                              : roll == 2 ? Verdict::JudgedNoa
                                          : Verdict::Unparseable;
            judgments.push_back(make_judgment(c.id, JudgmentStrategy::QaWithNoa, v));
        }
        const auto report = self_scores(corpus.generations, corpus.claims, judgments);
        auto check_row = [](const SelfScoreRow& row) {
            if (row.self_known) {
                CHECK(*row.self_known >= 0.0);
                CHECK(*row.self_known <= 1.0);
            }
            if (row.self_unknown) {
                CHECK(*row.self_unknown >= 0.0);
                CHECK(*row.self_unknown <= 1.0);
            }
        };
        check_row(report.overall);
        for (const auto& row : report.per_bucket) check_row(row);
    }
}

TEST_CASE("flip_rate hand-enumerated example") {
    auto gen = helpers::make_generation("g1", 1);
    std::vector<AtomicClaim> claims;
    for (int i = 0; i < 4; ++i)
        claims.push_back({"s" + std::to_string(i), "g1", 1, "x", ClaimLabel::Supported});

    std::vector<JudgmentRecord> b = {
        make_judgment("s0", JudgmentStrategy::QuestionAnswering, Verdict::JudgedTrue),
        make_judgment("s1", JudgmentStrategy::QuestionAnswering, Verdict::JudgedTrue),
        make_judgment("s2", JudgmentStrategy::QuestionAnswering, Verdict::JudgedTrue),
        make_judgment("s3", JudgmentStrategy::QuestionAnswering, Verdict::JudgedFalse),
    };
    std::vector<JudgmentRecord> c = {
        make_judgment("s0", JudgmentStrategy::QaWithNoa, Verdict::JudgedTrue),
        make_judgment("s1", JudgmentStrategy::QaWithNoa, Verdict::JudgedNoa),
        make_judgment("s2", JudgmentStrategy::QaWithNoa, Verdict::JudgedFalse),
        make_judgment("s3", JudgmentStrategy::QaWithNoa, Verdict::JudgedFalse),
    };
    const auto records = flip_rate({gen}, claims, b, c);
    REQUIRE(records.size() == 10); // 5 buckets x 2 classes
    const auto& supported_b4 = records[4 * 2 + 0];
    CHECK(supported_b4.bucket.index == 4);
    CHECK(supported_b4.label_class == ClaimLabel::Supported);
    CHECK(supported_b4.n_correct_in_b == 3);
    CHECK(supported_b4.n_flipped == 2);
    CHECK(supported_b4.flip_rate == Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("flip_rate of a table against itself is zero") {
    auto corpus = helpers::random_corpus(41);
    std::mt19937 rng(41);
    std::vector<JudgmentRecord> table;
    for (const auto& c : corpus.claims) {
        const Verdict v = rng() % 2 ? Verdict::JudgedTrue : Verdict::JudgedFalse;
        table.push_back(make_judgment(c.id, JudgmentStrategy::QuestionAnswering, v));
    }
    for (const auto& rec : flip_rate(corpus.generations, corpus.claims, table, table)) {
        CHECK(rec.n_flipped == 0);
        CHECK(rec.flip_rate == 0.0);
    }
}

TEST_CASE("flip_rate demands matching claim coverage") {
    auto gen = helpers::make_generation("g1", 1);
    std::vector<AtomicClaim> claims = {{"s0", "g1", 1, "x", ClaimLabel::Supported}};
    std::vector<JudgmentRecord> b = {
        make_judgment("s0", JudgmentStrategy::QuestionAnswering, Verdict::JudgedTrue)};
    std::vector<JudgmentRecord> c_empty;
    CHECK_THROWS_AS(flip_rate({gen}, claims, b, c_empty), MismatchedClaimSetError);

    std::vector<JudgmentRecord> c_other = {
        make_judgment("other", JudgmentStrategy::QaWithNoa, Verdict::JudgedTrue)};
    CHECK_THROWS_AS(flip_rate({gen}, claims, b, c_other), MismatchedClaimSetError);
}

TEST_CASE("flip_rate matches brute-force enumeration on random verdict tables") {
    for (unsigned seed = 900; seed < 1000; ++seed) {
        auto corpus = helpers::random_corpus(seed, 5, 6);
        std::mt19937 rng(seed * 31 + 1);
        std::vector<JudgmentRecord> b, c;
        for (const auto& claim : corpus.claims) {
            const auto rb = rng() % 5;
            b.push_back(make_judgment(claim.id, JudgmentStrategy::QuestionAnswering,
                                      rb < 3   ? Verdict::JudgedTrue
                                      : rb < 4 ? Verdict::JudgedFalse
                                               : Verdict::Unparseable));
            const auto rc = rng() % 6;
            c.push_back(make_judgment(claim.id, JudgmentStrategy::QaWithNoa,
                                      rc < 2   ? Verdict::JudgedTrue
                                      : rc < 4 ? Verdict::JudgedFalse
                                      : rc < 5 ? Verdict::JudgedNoa
                                               : Verdict::Unparseable));
        }
        const auto records = flip_rate(corpus.generations, corpus.claims, b, c);
        const auto oracle = oracles::flip(corpus.generations, corpus.claims, b, c);
        for (const auto& rec : records) {
            const auto& cell =
                oracle[rec.bucket.index][rec.label_class == ClaimLabel::Supported ? 0 : 1];
            INFO("seed " << seed << " bucket " << rec.bucket.index);
            CHECK(rec.n_correct_in_b == cell.denom);
            CHECK(rec.n_flipped == cell.num);
            if (cell.denom > 0)
                CHECK(rec.flip_rate ==
                      Catch::Approx(double(cell.num) / cell.denom).margin(1e-12));
        }
    }
}

TEST_CASE("parse_verdict never throws and respects strategy vocabularies") {
    std::mt19937 rng(1337);
    const std::string alphabet = "abcABC() .:true false none of the above\nTRUE";
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const int len = static_cast<int>(rng() % 60);
        for (int i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
        for (const auto strategy :
             {JudgmentStrategy::DirectAsking, JudgmentStrategy::QuestionAnswering,
              JudgmentStrategy::QaWithNoa}) {
            const auto verdict = parse_verdict(text, strategy);
            if (strategy != JudgmentStrategy::QaWithNoa)
                CHECK(verdict != Verdict::JudgedNoa);
        }
    }
}
