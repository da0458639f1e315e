#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "bubble/scoring.hpp"
#include "bubble/trace.hpp"

namespace bubble {

enum class SlackPolicy { strict, slack_pool };

struct GateFlags {
    bool structure = true;        // priors + length penalty in scoring
    bool redundancy = true;       // overlap gate
    bool section_budgets = true;  // per-bucket caps
};

struct BubbleConfig {
    int token_budget = 800;
    int max_chunks = 10;
    double delta = 0.55;
    // Empty optional means uniform fractions over the buckets present in the
    // ranked candidate list. Buckets missing from an explicit mapping get cap
    // 0 and are reachable only through the slack pool.
    std::optional<std::map<std::string, double>> section_fractions;
    SlackPolicy slack_policy = SlackPolicy::slack_pool;
    double relevance_floor = 0.0;
    GateFlags gates;
};

struct ContextBubble {
    struct Selection {
        ScoredCandidate cand;
        double overlap_at_selection = 0.0;
        bool via_slack = false;
    };
    std::vector<Selection> selected;
    int total_tokens = 0;
    std::map<std::string, int> section_tokens;
    std::unordered_set<std::string> word_set;  // union of tokenize(text) over selected
    int slack_spent = 0;
};

enum class Gate { none, relevance, selection_cap, global_budget, section_budget, redundancy };

// Snapshot of every gate signal for one candidate at its evaluation turn.
// Signals are computed unconditionally so the trace carries them even when an
// early gate already failed; `failed` names the first violated gate only.
struct GateOutcome {
    bool pass = true;
    Gate failed = Gate::none;
    double overlap = 0.0;
    int total_before = 0;
    int section_before = 0;
    int section_cap = -1;  // -1 when section budgets are disabled
};

/// |words(chunk) ∩ bubble.word_set| / |words(chunk)| over distinct terms.
/// 0 for an empty bubble or a chunk with no words.
double overlap(const Chunk& chunk, const ContextBubble& bubble);

/// floor(rho_s * T_B) per bucket. Explicit fractions are used verbatim
/// (validated to sum <= 1); the uniform sentinel splits equally across the
/// buckets present. Throws FractionSumExceedsOne.
std::map<std::string, int> resolve_section_caps(const std::set<std::string>& buckets,
                                                const BubbleConfig& cfg);

/// Gates in fixed order: relevance, selection cap, global budget, section
/// budget, redundancy. A zero overlap never trips the redundancy gate, so
/// delta = 0 still admits fully disjoint chunks.
GateOutcome apply_gates(const ScoredCandidate& cand, const ContextBubble& bubble,
                        const BubbleConfig& cfg, const std::map<std::string, int>& caps);

/// Greedy gated selection over the ranked candidates.
///
/// Pass 1 scans once in rank order; budget failures skip the candidate and
/// scanning continues. With the slack_pool policy, candidates whose sole
/// failure was the section budget are rescanned in rank order and admitted if
/// the selection cap, global budget and redundancy gates (against the grown
/// bubble, in that order) still pass; their tokens are charged to the slack
/// ledger. The outcome is a pure function of (ranked, cfg).
ContextBubble build_bubble(const std::vector<ScoredCandidate>& ranked, const BubbleConfig& cfg,
                           TraceSink* sink = nullptr);

}  // namespace bubble
