#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bubble/corpus.hpp"

namespace bubble {

struct PriorConfig;  // scoring.hpp

struct QueryTerms {
    std::string raw;
    std::vector<std::string> terms;  // tokenize(raw); duplicates collapse at use sites
};

QueryTerms make_query(std::string_view raw);

struct RetrievalConfig {
    int k_lexical = 200;     // candidate set size K; recall-oriented by default
    int m_prior_pool = 25;   // extra pool of zero-tf chunks carrying positive priors
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
};

struct Candidate {
    const Chunk* chunk = nullptr;
    int tf = 0;
    double bm25 = 0.0;
};

/// Sum over distinct query terms of their occurrence counts in the chunk.
int term_frequency(const Chunk& chunk, const QueryTerms& query);

/// Nonnegative BM25: idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_score(const Chunk& chunk, const QueryTerms& query, const Corpus& corpus,
                  const RetrievalConfig& cfg);

/// Union of the top k_lexical tf>0 chunks by BM25 and up to m_prior_pool
/// zero-tf chunks with a positive structural prior. Ordered by
/// (bm25 desc, chunk_id asc). Throws EmptyCorpus.
std::vector<Candidate> retrieve_candidates(const QueryTerms& query, const Corpus& corpus,
                                           const RetrievalConfig& cfg, const PriorConfig& priors);

}  // namespace bubble
