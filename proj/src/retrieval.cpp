#include "bubble/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "bubble/errors.hpp"
#include "bubble/scoring.hpp"

namespace bubble {

QueryTerms make_query(std::string_view raw) {
    QueryTerms q;
    q.raw = std::string(raw);
    q.terms = tokenize(raw);
    return q;
}

namespace {

std::unordered_set<std::string> distinct_terms(const QueryTerms& query) {
    return {query.terms.begin(), query.terms.end()};
}

}  // namespace

int term_frequency(const Chunk& chunk, const QueryTerms& query) {
    if (query.terms.empty()) return 0;
    auto qset = distinct_terms(query);
    int tf = 0;
    for (const auto& term : tokenize(chunk.text)) {
        if (qset.count(term)) ++tf;
    }
    return tf;
}

double bm25_score(const Chunk& chunk, const QueryTerms& query, const Corpus& corpus,
                  const RetrievalConfig& cfg) {
    if (query.terms.empty() || corpus.chunk_count() == 0) return 0.0;
    auto qset = distinct_terms(query);

    std::unordered_map<std::string, int> freq;
    for (const auto& term : tokenize(chunk.text)) {
        if (qset.count(term)) freq[term] += 1;
    }

    const double n = corpus.chunk_count();
    const double avglen = corpus.avg_chunk_tokens();
    const double len_norm = 1.0 - cfg.bm25_b + cfg.bm25_b * chunk.token_count / avglen;

    double score = 0.0;
    for (const auto& term : qset) {
        auto it = freq.find(term);
        if (it == freq.end()) continue;
        double f = it->second;
        double df = corpus.doc_freq(term);
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        score += idf * (f * (cfg.bm25_k1 + 1.0)) / (f + cfg.bm25_k1 * len_norm);
    }
    return score;
}

std::vector<Candidate> retrieve_candidates(const QueryTerms& query, const Corpus& corpus,
                                           const RetrievalConfig& cfg, const PriorConfig& priors) {
    if (corpus.chunk_count() == 0) throw EmptyCorpus();

    std::vector<Candidate> lexical;
    std::vector<std::pair<double, const Chunk*>> prior_pool;  // (prior, chunk)
    for (const auto& chunk : corpus.chunks()) {
        int tf = term_frequency(chunk, query);
        if (tf > 0) {
            lexical.push_back({&chunk, tf, bm25_score(chunk, query, corpus, cfg)});
        } else {
            double prior = structural_prior(chunk, priors);
            if (prior > 0.0) prior_pool.emplace_back(prior, &chunk);
        }
    }

    auto by_bm25 = [](const Candidate& a, const Candidate& b) {
        if (a.bm25 != b.bm25) return a.bm25 > b.bm25;
        return a.chunk->chunk_id < b.chunk->chunk_id;
    };
    std::sort(lexical.begin(), lexical.end(), by_bm25);
    if (static_cast<int>(lexical.size()) > cfg.k_lexical) lexical.resize(cfg.k_lexical);

    std::sort(prior_pool.begin(), prior_pool.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->chunk_id < b.second->chunk_id;
    });
    if (static_cast<int>(prior_pool.size()) > cfg.m_prior_pool) prior_pool.resize(cfg.m_prior_pool);

    std::set<std::string> seen;
    std::vector<Candidate> out;
    out.reserve(lexical.size() + prior_pool.size());
    for (auto& c : lexical) {
        if (seen.insert(c.chunk->chunk_id).second) out.push_back(c);
    }
    for (auto& [prior, chunk] : prior_pool) {
        if (seen.insert(chunk->chunk_id).second) out.push_back({chunk, 0, 0.0});
    }
    std::sort(out.begin(), out.end(), by_bm25);
    return out;
}

}  // namespace bubble
