#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "modnet/encoders.hpp"
#include "modnet/errors.hpp"

namespace modnet {

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

struct AbstractDoc {
    int id = 0;
    std::string title;
    std::string text;
    std::size_t token_count = 0;
};

struct IngestResult {
    std::vector<AbstractDoc> docs;
    std::size_t dropped = 0;    // title failed the noun filter
    std::size_t malformed = 0;  // lines without a tab
};

/// Lowercases and splits on non-alphanumeric ASCII; bytes >= 0x80 are kept
/// so multibyte characters stay inside tokens.
std::vector<std::string> tokenize_text(const std::string& text);

/// Reads "title<TAB>text" lines and keeps docs whose every title word is
/// capitalized or appears in the bundled common-noun list. Kept docs get
/// dense ids in file order. Throws if nothing survives.
IngestResult ingest_abstracts(const std::string& path);

/// Lowercase question tokens minus stopwords and closed-class words, order
/// preserved, duplicates removed.
std::vector<std::string> extract_query_nouns(const std::vector<std::string>& question_tokens);

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;
};

struct SearchHit {
    int doc = 0;
    double score = 0.0;
};

/// Inverted index with BM25 ranking plus one stored unit vector per document
/// (idf-weighted mean of word embeddings) for LSTM seeding.
class KbIndex {
public:
    KbIndex() = default;

    static KbIndex build(const std::vector<AbstractDoc>& docs, const EmbeddingTable& embeddings);

    /// BM25 (k1=1.2, b=0.75), OR semantics over deduplicated terms, ranked by
    /// score descending then doc id ascending; at most k hits.
    std::vector<SearchHit> search(const std::vector<std::string>& terms, std::size_t k) const;

    double idf(const std::string& term) const;

    const std::vector<double>& doc_vector(int doc_id) const;

    /// Mean of the top-k retrieved doc vectors for the question's nouns;
    /// the zero vector when retrieval comes up empty.
    std::vector<double> question_vector(const std::vector<std::string>& question_tokens,
                                        std::size_t k) const;

    void save(const std::string& path) const;
    static KbIndex load(const std::string& path);

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    std::size_t vector_dim() const { return vector_dim_; }
    const std::string& title(int doc_id) const { return titles_.at(doc_id); }
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

private:
    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::string> titles_;
    std::vector<std::vector<double>> vectors_;
    double avg_doc_length_ = 0.0;
    std::size_t vector_dim_ = 0;
};

/// idf-weighted mean of the embeddings of the doc's in-vocabulary tokens,
/// normalized to unit length; the zero vector when nothing is embeddable.
std::vector<double> idf_weighted_doc_vector(const AbstractDoc& doc,
                                            const EmbeddingTable& embeddings,
                                            const KbIndex& stats);

}  // namespace modnet
