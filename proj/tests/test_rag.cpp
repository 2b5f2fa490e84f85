#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "factcurve/rag.hpp"
#include "test_helpers.hpp"

using namespace factcurve;

namespace {

std::string normalized(const std::string& text) {
    std::istringstream in(text);
    std::string token, out;
    while (in >> token) {
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

std::string random_doc_text(std::mt19937& rng, int n_tokens) {
    std::string text;
    for (int i = 0; i < n_tokens; ++i) {
        text += "w" + std::to_string(rng() % 500);
        text += rng() % 7 == 0 ? "\n" : " ";
    }
    return text;
}

} // namespace

TEST_CASE("chunk_corpus splits greedily at 256 tokens") {
    std::mt19937 rng(1);
    CorpusDoc doc{"d1", "Test Doc", random_doc_text(rng, 600)};
    const auto chunks = chunk_corpus({doc});
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].token_count == 256);
    CHECK(chunks[1].token_count == 256);
    CHECK(chunks[2].token_count == 88);
    CHECK(chunks[0].chunk_index == 0);
    CHECK(chunks[2].chunk_index == 2);
}

TEST_CASE("chunk_corpus keeps short documents whole") {
    CorpusDoc doc{"d1", "Short", "one two three four five six seven eight nine ten"};
    const auto chunks = chunk_corpus({doc});
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].token_count == 10);
    CHECK(chunks[0].text == doc.text);
}

TEST_CASE("chunks never exceed the cap and reassemble the normalized text") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int n_tokens = 1 + static_cast<int>(rng() % 2000);
        CorpusDoc doc{"d" + std::to_string(trial), "Doc", random_doc_text(rng, n_tokens)};
        const auto chunks = chunk_corpus({doc});
        std::string reassembled;
        int total_tokens = 0;
        for (const auto& c : chunks) {
            CHECK(c.token_count <= kMaxChunkTokens);
            CHECK(static_cast<int>(normalized(c.text).empty() ? 0 : 1) <= 1);
            if (!reassembled.empty()) reassembled.push_back(' ');
            reassembled += c.text;
            total_tokens += c.token_count;
        }
        CHECK(reassembled == normalized(doc.text));
        CHECK(total_tokens == n_tokens);
    }
}

TEST_CASE("retrieve ranks the entity's biography first on the fixture corpus") {
    const auto docs = load_docs(helpers::fixture("rag/docs.jsonl"));
    REQUIRE(docs.size() == 3);
    ChunkIndex index(chunk_corpus(docs), docs);

    const auto top = index.retrieve("Mira Calloway", 3);
    REQUIRE_FALSE(top.empty());
    CHECK(top[0].doc_id == "doc-mira");
}

TEST_CASE("retrieve with oversized k returns the whole ranked index") {
    const auto docs = load_docs(helpers::fixture("rag/docs.jsonl"));
    ChunkIndex index(chunk_corpus(docs), docs);
    const auto all = index.retrieve("Mira Calloway", 100);
    CHECK(all.size() == index.chunks().size());
}

TEST_CASE("retrieve breaks score ties by doc id and chunk index") {
    std::vector<RetrievalChunk> chunks = {
        {"db", 0, "nothing relevant here", 3},
        {"da", 1, "nothing relevant here", 3},
        {"da", 0, "nothing relevant here", 3},
    };
    ChunkIndex index(chunks);
    const auto ranked = index.retrieve("some query", 3);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].doc_id == "da");
    CHECK(ranked[0].chunk_index == 0);
    CHECK(ranked[1].doc_id == "da");
    CHECK(ranked[1].chunk_index == 1);
    CHECK(ranked[2].doc_id == "db");
}

TEST_CASE("retrieve is deterministic and validates its inputs") {
    const auto docs = load_docs(helpers::fixture("rag/docs.jsonl"));
    ChunkIndex index(chunk_corpus(docs), docs);
    const auto a = index.retrieve("Mira Calloway", 3);
    const auto b = index.retrieve("Mira Calloway", 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].doc_id == b[i].doc_id);
        CHECK(a[i].chunk_index == b[i].chunk_index);
    }
    CHECK_THROWS_AS(index.retrieve("x", 0), DomainError);
    CHECK_THROWS_AS(ChunkIndex(std::vector<RetrievalChunk>{}).retrieve("x", 1), EmptyIndexError);
}

TEST_CASE("build_rag_prompt lays out document blocks and the question line") {
    std::vector<RetrievalChunk> chunks = {
        {"d1", 0, "First chunk text.", 3},
        {"d1", 1, "Second chunk text.", 3},
        {"d2", 0, "Third chunk text.", 3},
    };
    const auto prompt = build_rag_prompt("Jessie Mae Brown Beavers", chunks);
    CHECK(prompt ==
          "Document [0] First chunk text.\n"
          "Document [1] Second chunk text.\n"
          "Document [2] Third chunk text.\n"
          "Question: Tell me a bio of Jessie Mae Brown Beavers.");

    const auto single = build_rag_prompt("X", {{"d", 0, "Only.", 1}});
    CHECK(single == "Document [0] Only.\nQuestion: Tell me a bio of X.");

    CHECK_THROWS_AS(build_rag_prompt("X", {}), DomainError);
}

TEST_CASE("identical rag prompts hash to identical cache keys") {
    std::vector<RetrievalChunk> chunks = {{"d1", 0, "Chunk body.", 2}};
    const auto p1 = build_rag_prompt("Mira Calloway", chunks);
    const auto p2 = build_rag_prompt("Mira Calloway", chunks);
    ModelRequest r1{"m", p1, 0.0, 512}, r2{"m", p2, 0.0, 512};
    CHECK(cache_key(r1) == cache_key(r2));
}

TEST_CASE("chunk index persists to a versioned JSON file and loads back") {
    const auto docs = load_docs(helpers::fixture("rag/docs.jsonl"));
    ChunkIndex index(chunk_corpus(docs), docs);

    helpers::TempDir dir("rag-index");
    const auto path = dir.path / "index.json";
    save_chunk_index(index, path);
    const auto loaded = load_chunk_index(path);
    REQUIRE(loaded.chunks().size() == index.chunks().size());

    const auto a = index.retrieve("Mira Calloway", 3);
    const auto b = loaded.retrieve("Mira Calloway", 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].doc_id == b[i].doc_id);
        CHECK(a[i].chunk_index == b[i].chunk_index);
    }

    // Version tag is enforced.
    const auto bad = dir.path / "bad.json";
    std::ofstream(bad) << R"({"version": "other", "chunks": []})";
    CHECK_THROWS_AS(load_chunk_index(bad), ParseError);
}
