#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bubble/corpus.hpp"
#include "bubble/retrieval.hpp"

namespace bubble {

struct PriorConfig {
    std::map<std::string, double> section_boosts;  // may be negative (penalties)
    std::map<std::string, double> keyword_boosts;  // keys pre-normalized by tokenize()
    std::optional<int> theta;                      // empty = use corpus median
    double relevance_floor = 0.0;
};

/// Explicit theta if configured, otherwise the corpus median chunk length.
int resolve_theta(const PriorConfig& cfg, const Corpus& corpus);

/// Section boost plus one keyword boost per configured keyword present in the
/// chunk text. Keyword boosts fire once per keyword regardless of occurrence
/// count. Negative values pass through unclamped; rejection of low scores is
/// the bubble's relevance gate, not the prior's job.
double structural_prior(const Chunk& chunk, const PriorConfig& cfg);

/// 1 / (1 + token_count / theta), evaluated in floating point.
double length_penalty(int token_count, int theta);

struct ScoredCandidate {
    Candidate candidate;
    double prior = 0.0;
    double len_penalty = 1.0;
    double score_raw = 0.0;    // tf + prior
    double score_final = 0.0;  // score_raw * len_penalty
};

/// Requires cfg.theta to be resolved (see resolve_theta).
ScoredCandidate score_candidate(const Candidate& candidate, const PriorConfig& cfg);

/// Descending score_final, ties broken by chunk_id ascending. Pure: permuting
/// the input yields the identical output sequence.
std::vector<ScoredCandidate> rank_candidates(std::vector<ScoredCandidate> scored);

}  // namespace bubble
