#include "bubble/bubble.hpp"

#include <algorithm>
#include <cmath>

#include "bubble/errors.hpp"
#include "bubble/util.hpp"

namespace bubble {

double overlap(const Chunk& chunk, const ContextBubble& bubble) {
    if (bubble.word_set.empty()) return 0.0;
    std::unordered_set<std::string> words;
    for (auto& t : tokenize(chunk.text)) words.insert(std::move(t));
    if (words.empty()) return 0.0;
    size_t shared = 0;
    for (const auto& w : words) {
        if (bubble.word_set.count(w)) ++shared;
    }
    return static_cast<double>(shared) / static_cast<double>(words.size());
}

std::map<std::string, int> resolve_section_caps(const std::set<std::string>& buckets,
                                                const BubbleConfig& cfg) {
    std::map<std::string, int> caps;
    auto cap_of = [&](double fraction) {
        // Small epsilon so fractions like 0.29 * 800 don't round down twice.
        return static_cast<int>(std::floor(fraction * cfg.token_budget + 1e-9));
    };
    if (cfg.section_fractions.has_value()) {
        double sum = 0.0;
        for (const auto& [bucket, fraction] : *cfg.section_fractions) sum += fraction;
        if (sum > 1.0 + 1e-9) throw FractionSumExceedsOne(sum);
        for (const auto& bucket : buckets) {
            auto it = cfg.section_fractions->find(bucket);
            caps[bucket] = it == cfg.section_fractions->end() ? 0 : cap_of(it->second);
        }
    } else {
        if (buckets.empty()) return caps;
        double fraction = 1.0 / static_cast<double>(buckets.size());
        for (const auto& bucket : buckets) caps[bucket] = cap_of(fraction);
    }
    return caps;
}

GateOutcome apply_gates(const ScoredCandidate& cand, const ContextBubble& bubble,
                        const BubbleConfig& cfg, const std::map<std::string, int>& caps) {
    const Chunk& chunk = *cand.candidate.chunk;

    GateOutcome out;
    out.overlap = overlap(chunk, bubble);
    out.total_before = bubble.total_tokens;
    {
        auto it = bubble.section_tokens.find(chunk.bucket);
        out.section_before = it == bubble.section_tokens.end() ? 0 : it->second;
    }
    if (cfg.gates.section_budgets) {
        auto it = caps.find(chunk.bucket);
        out.section_cap = it == caps.end() ? 0 : it->second;
    }

    auto fail = [&](Gate g) {
        out.pass = false;
        out.failed = g;
        return out;
    };

    if (cand.score_final < cfg.relevance_floor) return fail(Gate::relevance);
    if (static_cast<int>(bubble.selected.size()) >= cfg.max_chunks) return fail(Gate::selection_cap);
    if (bubble.total_tokens + chunk.token_count > cfg.token_budget) return fail(Gate::global_budget);
    if (cfg.gates.section_budgets && out.section_before + chunk.token_count > out.section_cap) {
        return fail(Gate::section_budget);
    }
    if (cfg.gates.redundancy && out.overlap > 0.0 && out.overlap >= cfg.delta) {
        return fail(Gate::redundancy);
    }
    return out;
}

namespace {

// Slack admissions charge only the tokens landing above the bucket's cap;
// anything below the cap was the bucket's own unused allocation. This keeps
// slack_spent equal to the total over-cap overflow.
int admit(ContextBubble& bubble, const ScoredCandidate& cand, double ov, bool via_slack,
          int section_cap = 0) {
    const Chunk& chunk = *cand.candidate.chunk;
    int charged = 0;
    if (via_slack) {
        auto it = bubble.section_tokens.find(chunk.bucket);
        int before = it == bubble.section_tokens.end() ? 0 : it->second;
        int after = before + chunk.token_count;
        charged = std::max(0, after - section_cap) - std::max(0, before - section_cap);
        bubble.slack_spent += charged;
    }
    bubble.selected.push_back({cand, ov, via_slack});
    bubble.total_tokens += chunk.token_count;
    bubble.section_tokens[chunk.bucket] += chunk.token_count;
    for (auto& t : tokenize(chunk.text)) bubble.word_set.insert(std::move(t));
    return charged;
}

FinalReason reason_for(Gate gate) {
    switch (gate) {
        case Gate::relevance: return FinalReason::low_relevance;
        case Gate::selection_cap: return FinalReason::selection_cap;
        case Gate::global_budget: return FinalReason::budget_exceeded;
        case Gate::section_budget: return FinalReason::section_budget_exceeded;
        case Gate::redundancy: return FinalReason::too_redundant;
        case Gate::none: break;
    }
    return FinalReason::passed_all_gates;
}

// Emits the per-stage records for one pass-1 evaluation: the scoring stage,
// then each gate up to and including the first failure.
void trace_pass1(TraceSink* sink, const ScoredCandidate& cand, const GateOutcome& out,
                 const BubbleConfig& cfg) {
    if (!sink) return;
    const Chunk& chunk = *cand.candidate.chunk;

    // Overlap is recorded here so even candidates that never reach the
    // redundancy stage carry their computed value.
    sink->record(cand, "scoring", true, {{"overlap", round6(out.overlap)}});

    auto reached = [&](Gate g) {
        return out.pass || static_cast<int>(out.failed) >= static_cast<int>(g);
    };
    auto step = [&](Gate g) { return out.pass || out.failed != g; };

    if (reached(Gate::relevance)) {
        sink->record(cand, "relevance", step(Gate::relevance),
                     {{"score_final", round6(cand.score_final)},
                      {"floor", round6(cfg.relevance_floor)}});
    }
    if (reached(Gate::selection_cap)) {
        sink->record(cand, "cap", step(Gate::selection_cap),
                     {{"max_chunks", cfg.max_chunks}});
    }
    if (reached(Gate::global_budget)) {
        sink->record(cand, "global_budget", step(Gate::global_budget),
                     {{"total_before", out.total_before},
                      {"token_count", chunk.token_count},
                      {"token_budget", cfg.token_budget}});
    }
    if (cfg.gates.section_budgets && reached(Gate::section_budget)) {
        sink->record(cand, "section_budget", step(Gate::section_budget),
                     {{"bucket", chunk.bucket},
                      {"section_before", out.section_before},
                      {"token_count", chunk.token_count},
                      {"section_cap", out.section_cap}});
    }
    if (cfg.gates.redundancy && reached(Gate::redundancy)) {
        sink->record(cand, "redundancy", step(Gate::redundancy),
                     {{"overlap", round6(out.overlap)}, {"threshold", round6(cfg.delta)}});
    }
}

}  // namespace

ContextBubble build_bubble(const std::vector<ScoredCandidate>& ranked, const BubbleConfig& cfg,
                           TraceSink* sink) {
    ContextBubble bubble;

    std::map<std::string, int> caps;
    if (cfg.gates.section_budgets && !ranked.empty()) {
        std::set<std::string> buckets;
        for (const auto& cand : ranked) buckets.insert(cand.candidate.chunk->bucket);
        caps = resolve_section_caps(buckets, cfg);
    }

    if (sink) {
        auto& audit = sink->audit();
        audit["slack_policy"] = cfg.slack_policy == SlackPolicy::strict ? "strict" : "slack_pool";
        audit["budget_scan_policy"] = "continue_after_budget_failure";
        audit["pass2_gate_order"] = "cap, global_budget, redundancy";
        audit["token_budget"] = cfg.token_budget;
        audit["max_chunks"] = cfg.max_chunks;
        audit["delta"] = round6(cfg.delta);
        audit["relevance_floor"] = round6(cfg.relevance_floor);
        audit["gates"] = {{"structure", cfg.gates.structure},
                          {"redundancy", cfg.gates.redundancy},
                          {"section_budgets", cfg.gates.section_budgets}};
        audit["section_caps"] = caps;
    }

    // Pass 1: single scan in rank order.
    std::vector<const ScoredCandidate*> slack_queue;
    for (const auto& cand : ranked) {
        GateOutcome out = apply_gates(cand, bubble, cfg, caps);
        trace_pass1(sink, cand, out, cfg);
        if (out.pass) {
            admit(bubble, cand, out.overlap, false);
            if (sink) {
                sink->finalize_candidate(cand.candidate.chunk->chunk_id, true,
                                         FinalReason::passed_all_gates);
            }
        } else if (out.failed == Gate::section_budget && cfg.slack_policy == SlackPolicy::slack_pool) {
            slack_queue.push_back(&cand);  // verdict deferred to pass 2
        } else if (sink) {
            sink->finalize_candidate(cand.candidate.chunk->chunk_id, false, reason_for(out.failed));
        }
    }

    // Pass 2: section-budget rejects compete for the global slack pool.
    for (const ScoredCandidate* cand : slack_queue) {
        const Chunk& chunk = *cand->candidate.chunk;
        bool cap_ok = static_cast<int>(bubble.selected.size()) < cfg.max_chunks;
        bool global_ok = bubble.total_tokens + chunk.token_count <= cfg.token_budget;
        double ov = overlap(chunk, bubble);
        bool redundancy_ok = !cfg.gates.redundancy || ov == 0.0 || ov < cfg.delta;

        Gate failed = Gate::none;
        if (!cap_ok) failed = Gate::selection_cap;
        else if (!global_ok) failed = Gate::global_budget;
        else if (!redundancy_ok) failed = Gate::redundancy;
        bool admitted = failed == Gate::none;

        int total_before = bubble.total_tokens;
        int section_cap = caps.count(chunk.bucket) ? caps.at(chunk.bucket) : 0;
        int charged = 0;
        if (admitted) charged = admit(bubble, *cand, ov, true, section_cap);

        if (sink) {
            sink->record(*cand, "slack", admitted,
                         {{"cap_ok", cap_ok},
                          {"total_before", total_before},
                          {"token_count", chunk.token_count},
                          {"token_budget", cfg.token_budget},
                          {"overlap", round6(ov)},
                          {"threshold", round6(cfg.delta)},
                          {"redundancy_ok", redundancy_ok},
                          {"charged_to_slack", charged}});
            sink->finalize_candidate(chunk.chunk_id, admitted,
                                     admitted ? FinalReason::passed_all_gates : reason_for(failed));
        }
    }

    return bubble;
}

}  // namespace bubble
