#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <map>

#include "factcurve/claims.hpp"
#include "factcurve/gateway.hpp"
#include "test_helpers.hpp"

using namespace factcurve;

namespace {

std::string strip_spaces(const std::string& s) {
    std::string out;
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct ScriptedTransport : Transport {
    std::map<std::string, std::string> by_prompt_substring;
    std::string fallback = "- NONE";
    int calls = 0;

    ModelResponse send(const ModelRequest& req) override {
        ++calls;
        for (const auto& [needle, reply] : by_prompt_substring) {
            if (req.prompt.find(needle) != std::string::npos) return {reply, false, {}};
        }
        return {fallback, false, {}};
    }
};

} // namespace

TEST_CASE("segment_sentences splits on terminal punctuation") {
    const auto s = segment_sentences("He was born in 1923. He died in 1989.");
    REQUIRE(s.size() == 2);
    CHECK(s[0].text == "He was born in 1923.");
    CHECK(s[1].text == "He died in 1989.");
    CHECK(s[0].index == 1);
    CHECK(s[1].index == 2);
    CHECK(s[0].total == 2);
    CHECK(s[1].total == 2);
}

TEST_CASE("segment_sentences guards abbreviations and initials") {
    const auto s = segment_sentences("She attended U.S. schools. She taught.");
    REQUIRE(s.size() == 2);
    CHECK(s[0].text == "She attended U.S. schools.");

    const auto t = segment_sentences("Dr. Smith and John A. Doe met. They spoke.");
    REQUIRE(t.size() == 2);
    CHECK(t[0].text == "Dr. Smith and John A. Doe met.");
}

TEST_CASE("segment_sentences handles question marks, exclamations and newlines") {
    const auto s = segment_sentences("Who was she? A pioneer! She led\nmany teams.");
    REQUIRE(s.size() == 4);
    CHECK(s[0].text == "Who was she?");
    CHECK(s[1].text == "A pioneer!");
    CHECK(s[2].text == "She led");
    CHECK(s[3].text == "many teams.");
}

TEST_CASE("segment_sentences keeps a single unterminated sentence whole") {
    const auto s = segment_sentences("An unpunctuated fragment");
    REQUIRE(s.size() == 1);
    CHECK(s[0].index == 1);
    CHECK(s[0].total == 1);
    CHECK(s[0].text == "An unpunctuated fragment");
}

TEST_CASE("segment_sentences rejects blank input") {
    CHECK_THROWS_AS(segment_sentences(""), DomainError);
    CHECK_THROWS_AS(segment_sentences("   \n  \t "), DomainError);
}

TEST_CASE("segmentation covers every non-space character exactly once") {
    const std::string texts[] = {
        "He was born in 1923. He died in 1989.",
        "She attended U.S. schools. She taught.\n\nShe retired in 2001!",
        "One... two... three. Done? Yes!",
        "Dr. A. B. Chen wrote Vol. 3.",
        "Trailing spaces here.   \nAnd a final line",
    };
    for (const auto& text : texts) {
        const auto sentences = segment_sentences(text);
        std::string joined;
        for (const auto& s : sentences) joined += s.text;
        CHECK(strip_spaces(joined) == strip_spaces(text));
        for (int i = 0; i < static_cast<int>(sentences.size()); ++i) {
            CHECK(sentences[i].index == i + 1);
            CHECK(sentences[i].total == static_cast<int>(sentences.size()));
        }
    }
}

TEST_CASE("parse_claim_list accepts bullets and numbering") {
    const auto bullets = parse_claim_list("- First claim.\n- Second claim.\n");
    REQUIRE(bullets.size() == 2);
    CHECK(bullets[0] == "First claim.");

    const auto numbered = parse_claim_list("1. Alpha\n2) Beta\n3. Gamma");
    REQUIRE(numbered.size() == 3);
    CHECK(numbered[1] == "Beta");

    const auto starred = parse_claim_list("* Only one");
    REQUIRE(starred.size() == 1);

    CHECK(parse_claim_list("- NONE").empty());
    CHECK(parse_claim_list("-   none  ").empty());
}

TEST_CASE("parse_claim_list surfaces unusable responses with the raw text") {
    try {
        (void)parse_claim_list("I would rather chat about the weather.");
        FAIL("expected UnparseableResponseError");
    } catch (const UnparseableResponseError& e) {
        CHECK(e.raw == "I would rather chat about the weather.");
    }
}

TEST_CASE("decompose_claims parses the scripted list and assigns stable ids") {
    helpers::TempDir dir("claims-decompose");
    auto transport = std::make_shared<ScriptedTransport>();
    transport->by_prompt_substring["Lanny Flaherty is an American actor"] =
        "- Lanny Flaherty is an American.\n"
        "- Lanny Flaherty is an actor.\n"
        "- Lanny Flaherty was born in Mississippi.";
    auto cache = std::make_shared<ResponseCache>(dir.path);
    Gateway gw(GatewayMode::Record, cache, transport);

    GenerationRecord record;
    record.id = "g1";
    record.entity = "Lanny Flaherty";
    record.text = "Lanny Flaherty is an American actor born in Mississippi.";
    record.sentences = segment_sentences(record.text);

    const auto claims = decompose_record(record, gw, "judge-model");
    REQUIRE(claims.size() == 3);
    CHECK(claims[0].id == "g1:s1:c1");
    CHECK(claims[0].text == "Lanny Flaherty is an American.");
    CHECK(claims[1].id == "g1:s1:c2");
    CHECK(claims[2].text == "Lanny Flaherty was born in Mississippi.");
    for (const auto& c : claims) CHECK(c.label == ClaimLabel::Unlabeled);

    // Same sentence again: cache serves it, ids and texts identical.
    const int calls_before = transport->calls;
    const auto again = decompose_record(record, gw, "judge-model");
    CHECK(transport->calls == calls_before);
    REQUIRE(again.size() == 3);
    CHECK(again[0].id == claims[0].id);
    CHECK(again[0].text == claims[0].text);
}

TEST_CASE("decompose_claims treats a NONE reply as a contentless sentence") {
    helpers::TempDir dir("claims-none");
    auto transport = std::make_shared<ScriptedTransport>(); // fallback "- NONE"
    auto cache = std::make_shared<ResponseCache>(dir.path);
    Gateway gw(GatewayMode::Record, cache, transport);

    GenerationRecord record;
    record.id = "g2";
    record.entity = "Nobody";
    record.text = "Thanks for asking!";
    record.sentences = segment_sentences(record.text);

    const auto result = decompose_claims(record.sentences[0], record, gw, "judge-model");
    CHECK(result.claims.empty());
}

TEST_CASE("qa derivation prompt matches the golden template bytes") {
    const auto rendered =
        prompts::render_qa_derivation("Lanny Flaherty", "Lanny Flaherty is an American.");
    CHECK(rendered == read_file(helpers::golden("qa_derive.txt")));
}

TEST_CASE("derive_qa splits the response on the first separator") {
    helpers::TempDir dir("claims-qa");
    auto transport = std::make_shared<ScriptedTransport>();
    transport->fallback = "What nationality is Lanny Flaherty?#American";
    auto cache = std::make_shared<ResponseCache>(dir.path);
    Gateway gw(GatewayMode::Record, cache, transport);

    AtomicClaim claim{"g1:s1:c1", "g1", 1, "Lanny Flaherty is an American.",
                      ClaimLabel::Supported};
    const auto qa = derive_qa(claim, "Lanny Flaherty", gw, "judge-model");
    CHECK(qa.claim_id == "g1:s1:c1");
    CHECK(qa.question == "What nationality is Lanny Flaherty?");
    CHECK(qa.answer == "American");
}

TEST_CASE("parse_qa_response keeps later separators inside the answer") {
    const auto qa = parse_qa_response("c1", "Which award?# The 1999 # 2000 double medal ");
    CHECK(qa.question == "Which award?");
    CHECK(qa.answer == "The 1999 # 2000 double medal");

    CHECK_THROWS_AS(parse_qa_response("c1", "no separator at all"), MissingSeparatorError);
    CHECK_THROWS_AS(parse_qa_response("c1", "#answer only"), UnparseableResponseError);
    CHECK_THROWS_AS(parse_qa_response("c1", "question only#   "), UnparseableResponseError);
}

TEST_CASE("derive_qa_all retries once and then marks claims underivable") {
    helpers::TempDir dir("claims-qa-retry");
    auto transport = std::make_shared<ScriptedTransport>();
    transport->fallback = "no separator here";
    transport->by_prompt_substring["usable claim"] = "Q?#A";
    auto cache = std::make_shared<ResponseCache>(dir.path);
    Gateway gw(GatewayMode::Record, cache, transport);

    std::vector<AtomicClaim> claims = {
        {"c1", "g", 1, "usable claim", ClaimLabel::Supported},
        {"c2", "g", 1, "broken claim", ClaimLabel::Supported},
    };
    const auto result = derive_qa_all(claims, "Person", gw, "judge-model");
    REQUIRE(result.pairs.size() == 1);
    CHECK(result.pairs[0].claim_id == "c1");
    REQUIRE(result.underivable.size() == 1);
    CHECK(result.underivable[0] == "c2");
}

TEST_CASE("segment_sentences survives arbitrary text and keeps its invariants") {
    std::mt19937 rng(4242);
    const std::string alphabet = "abcDEF .?!\n\t-'\"0123456789U.S.";
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int len = static_cast<int>(rng() % 120);
        for (int i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
        try {
            const auto sentences = segment_sentences(text);
            REQUIRE_FALSE(sentences.empty());
            std::string joined;
            for (int i = 0; i < static_cast<int>(sentences.size()); ++i) {
                CHECK(sentences[i].index == i + 1);
                CHECK(sentences[i].total == static_cast<int>(sentences.size()));
                CHECK_FALSE(sentences[i].text.empty());
                joined += sentences[i].text;
            }
            CHECK(strip_spaces(joined) == strip_spaces(text));
        } catch (const DomainError&) {
            // acceptable only for blank input
            CHECK(strip_spaces(text).empty());
        }
    }
}

TEST_CASE("parse_claim_list yields claims or a typed error, never junk") {
    std::mt19937 rng(90210);
    const std::string alphabet = "xyz- *.)12\n NONEnone";
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const int len = static_cast<int>(rng() % 80);
        for (int i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
        try {
            for (const auto& claim : parse_claim_list(text)) CHECK_FALSE(claim.empty());
        } catch (const UnparseableResponseError& e) {
            CHECK(e.raw == text);
        }
    }
}
