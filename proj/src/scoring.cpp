#include "bubble/scoring.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace bubble {

int resolve_theta(const PriorConfig& cfg, const Corpus& corpus) {
    if (cfg.theta.has_value()) {
        if (*cfg.theta < 1) throw std::invalid_argument("theta must be >= 1");
        return *cfg.theta;
    }
    return std::max(1, corpus.median_chunk_tokens());
}

double structural_prior(const Chunk& chunk, const PriorConfig& cfg) {
    double prior = 0.0;
    auto it = cfg.section_boosts.find(chunk.section_label);
    if (it != cfg.section_boosts.end()) prior += it->second;

    if (!cfg.keyword_boosts.empty()) {
        std::unordered_set<std::string> words;
        for (auto& t : tokenize(chunk.text)) words.insert(std::move(t));
        for (const auto& [keyword, boost] : cfg.keyword_boosts) {
            if (words.count(keyword)) prior += boost;  // presence indicator, fires once
        }
    }
    return prior;
}

double length_penalty(int token_count, int theta) {
    if (theta < 1) throw std::invalid_argument("theta must be >= 1");
    if (token_count < 0) throw std::invalid_argument("token_count must be >= 0");
    return 1.0 / (1.0 + static_cast<double>(token_count) / static_cast<double>(theta));
}

ScoredCandidate score_candidate(const Candidate& candidate, const PriorConfig& cfg) {
    if (!cfg.theta.has_value()) throw std::logic_error("score_candidate: theta not resolved");
    ScoredCandidate sc;
    sc.candidate = candidate;
    sc.prior = structural_prior(*candidate.chunk, cfg);
    sc.len_penalty = length_penalty(candidate.chunk->token_count, *cfg.theta);
    sc.score_raw = candidate.tf + sc.prior;
    sc.score_final = sc.score_raw * sc.len_penalty;
    return sc;
}

std::vector<ScoredCandidate> rank_candidates(std::vector<ScoredCandidate> scored) {
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score_final != b.score_final) return a.score_final > b.score_final;
        return a.candidate.chunk->chunk_id < b.candidate.chunk->chunk_id;
    });
    return scored;
}

}  // namespace bubble
