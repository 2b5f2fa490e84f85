#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcurve/claims.hpp"
#include "factcurve/errors.hpp"
#include "factcurve/prompts.hpp"

namespace factcurve {

struct CorpusDoc {
    std::string doc_id;
    std::string title;
    std::string text;
};

/// A retrieval unit of at most 256 whitespace tokens. `text` is the chunk's
/// tokens joined by single spaces, so concatenating a document's chunks
/// reproduces its whitespace-normalized text.
struct RetrievalChunk {
    std::string doc_id;
    int chunk_index = 0;
    std::string text;
    int token_count = 0;
};

inline constexpr int kMaxChunkTokens = 256;

namespace detail {

[[nodiscard]] inline std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

[[nodiscard]] inline std::string join_tokens(const std::vector<std::string>& tokens,
                                             std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

} // namespace detail

/// Greedy whitespace-token chunking: maximal chunks of at most 256 tokens.
[[nodiscard]] inline std::vector<RetrievalChunk> chunk_corpus(const std::vector<CorpusDoc>& docs) {
    std::vector<RetrievalChunk> chunks;
    for (const auto& doc : docs) {
        if (doc.title.empty()) throw DomainError("chunk_corpus: doc " + doc.doc_id + " has empty title");
        const auto tokens = detail::whitespace_tokens(doc.text);
        int chunk_index = 0;
        for (std::size_t start = 0; start < tokens.size(); start += kMaxChunkTokens) {
            const auto end = std::min(tokens.size(), start + kMaxChunkTokens);
            RetrievalChunk chunk;
            chunk.doc_id = doc.doc_id;
            chunk.chunk_index = chunk_index++;
            chunk.text = detail::join_tokens(tokens, start, end);
            chunk.token_count = static_cast<int>(end - start);
            chunks.push_back(std::move(chunk));
        }
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Lexical retrieval
// ---------------------------------------------------------------------------

/// Read-only lexical index over chunks. Scoring is classical tf-idf over
/// lowercased whitespace tokens of the entity name, plus a fixed bonus per
/// query term appearing in the chunk's document title. Ties break on
/// (doc_id, chunk_index).
class ChunkIndex {
public:
    ChunkIndex(std::vector<RetrievalChunk> chunks, const std::vector<CorpusDoc>& docs)
        : chunks_(std::move(chunks)) {
        for (const auto& doc : docs) titles_[doc.doc_id] = doc.title;
        build();
    }

    explicit ChunkIndex(std::vector<RetrievalChunk> chunks,
                        std::map<std::string, std::string> titles = {})
        : chunks_(std::move(chunks)), titles_(std::move(titles)) {
        build();
    }

    [[nodiscard]] const std::vector<RetrievalChunk>& chunks() const { return chunks_; }
    [[nodiscard]] const std::map<std::string, std::string>& titles() const { return titles_; }

    static constexpr double kTitleBonus = 2.0;

    /// Top-k chunks for an entity query; k larger than the index returns
    /// everything, ranked.
    [[nodiscard]] std::vector<RetrievalChunk> retrieve(const std::string& entity, int k) const {
        if (k < 1) throw DomainError("retrieve: k must be >= 1");
        if (chunks_.empty()) throw EmptyIndexError("retrieve: chunk index is empty");

        std::vector<std::string> query;
        for (auto& t : detail::whitespace_tokens(detail::lowercase(entity))) {
            if (std::find(query.begin(), query.end(), t) == query.end()) query.push_back(t);
        }

        const double n_chunks = static_cast<double>(chunks_.size());
        std::vector<std::pair<double, std::size_t>> scored;
        scored.reserve(chunks_.size());
        for (std::size_t i = 0; i < chunks_.size(); ++i) {
            double score = 0.0;
            for (const auto& term : query) {
                const double idf = idf_of(term, n_chunks);
                score += tf(i, term) * idf;
                if (title_has(chunks_[i].doc_id, term)) score += kTitleBonus * idf;
            }
            scored.emplace_back(score, i);
        }
        std::sort(scored.begin(), scored.end(), [this](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            const auto& ca = chunks_[a.second];
            const auto& cb = chunks_[b.second];
            if (ca.doc_id != cb.doc_id) return ca.doc_id < cb.doc_id;
            return ca.chunk_index < cb.chunk_index;
        });

        std::vector<RetrievalChunk> out;
        const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), chunks_.size());
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) out.push_back(chunks_[scored[i].second]);
        return out;
    }

private:
    void build() {
        term_counts_.resize(chunks_.size());
        for (std::size_t i = 0; i < chunks_.size(); ++i) {
            for (auto& t : detail::whitespace_tokens(detail::lowercase(chunks_[i].text)))
                ++term_counts_[i][t];
            for (const auto& [term, count] : term_counts_[i]) ++doc_freq_[term];
        }
        for (const auto& [doc_id, title] : titles_) {
            auto& tokens = title_tokens_[doc_id];
            for (auto& t : detail::whitespace_tokens(detail::lowercase(title)))
                tokens.insert(t);
        }
    }

    [[nodiscard]] double tf(std::size_t chunk, const std::string& term) const {
        auto it = term_counts_[chunk].find(term);
        return it == term_counts_[chunk].end() ? 0.0 : static_cast<double>(it->second);
    }

    [[nodiscard]] double idf_of(const std::string& term, double n_chunks) const {
        auto it = doc_freq_.find(term);
        const double df = it == doc_freq_.end() ? 0.0 : static_cast<double>(it->second);
        return std::log((n_chunks + 1.0) / (df + 1.0)) + 1.0;
    }

    [[nodiscard]] bool title_has(const std::string& doc_id, const std::string& term) const {
        auto it = title_tokens_.find(doc_id);
        return it != title_tokens_.end() && it->second.count(term) > 0;
    }

    std::vector<RetrievalChunk> chunks_;
    std::map<std::string, std::string> titles_;
    std::vector<std::map<std::string, int>> term_counts_;
    std::map<std::string, int> doc_freq_;
    std::map<std::string, std::set<std::string>> title_tokens_;
};

/// Convenience wrapper matching the one-shot retrieval signature.
[[nodiscard]] inline std::vector<RetrievalChunk> retrieve(const std::string& entity,
                                                          const std::vector<RetrievalChunk>& chunks,
                                                          int k) {
    return ChunkIndex(chunks).retrieve(entity, k);
}

// ---------------------------------------------------------------------------
// RAG prompt
// ---------------------------------------------------------------------------

/// "Document [i] <text>" blocks in rank order, then the bio question line.
[[nodiscard]] inline std::string build_rag_prompt(const std::string& entity,
                                                  const std::vector<RetrievalChunk>& chunks) {
    if (chunks.empty()) throw DomainError("build_rag_prompt: no chunks");
    std::string prompt;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        prompt += "Document [" + std::to_string(i) + "] " + chunks[i].text + "\n";
    }
    prompt += prompts::render_rag_question(entity);
    return prompt;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline constexpr const char* kChunkIndexVersion = "factcurve-chunk-index-v1";

/// Corpus input: JSON-lines {"doc_id", "title", "text"}.
[[nodiscard]] inline std::vector<CorpusDoc> load_docs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open docs file " + path.string());
    std::vector<CorpusDoc> docs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            docs.push_back({j.at("doc_id").get<std::string>(), j.at("title").get<std::string>(),
                            j.at("text").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad doc: ") + e.what(), line_no);
        }
    }
    return docs;
}

/// The chunk index persists as a single versioned JSON document.
inline void save_chunk_index(const ChunkIndex& index, const std::filesystem::path& path) {
    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& c : index.chunks()) {
        chunks.push_back({{"doc_id", c.doc_id},
                          {"chunk_index", c.chunk_index},
                          {"text", c.text},
                          {"token_count", c.token_count}});
    }
    nlohmann::json titles = nlohmann::json::object();
    for (const auto& [doc_id, title] : index.titles()) titles[doc_id] = title;
    nlohmann::json j{{"version", kChunkIndexVersion}, {"chunks", chunks}, {"titles", titles}};
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << "\n";
    if (!out) throw Error("cannot write chunk index " + path.string());
}

[[nodiscard]] inline ChunkIndex load_chunk_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open chunk index " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad chunk index: ") + e.what());
    }
    if (j.value("version", std::string()) != kChunkIndexVersion)
        throw ParseError("unsupported chunk index version in " + path.string());
    std::vector<RetrievalChunk> chunks;
    for (const auto& c : j.at("chunks")) {
        chunks.push_back({c.at("doc_id").get<std::string>(), c.at("chunk_index").get<int>(),
                          c.at("text").get<std::string>(), c.at("token_count").get<int>()});
    }
    std::map<std::string, std::string> titles;
    if (j.contains("titles"))
        titles = j["titles"].get<std::map<std::string, std::string>>();
    return ChunkIndex(std::move(chunks), std::move(titles));
}

} // namespace factcurve
