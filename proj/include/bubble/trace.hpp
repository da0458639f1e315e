#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bubble/scoring.hpp"

namespace bubble {

struct ContextBubble;

// Closed set of per-chunk verdicts. Stored snake_case in files; reports map
// them to display labels.
enum class FinalReason {
    passed_all_gates,
    low_relevance,
    selection_cap,
    budget_exceeded,
    section_budget_exceeded,
    too_redundant,
};

std::string_view reason_id(FinalReason r);       // e.g. "too_redundant"
std::string_view reason_spaced(FinalReason r);   // e.g. "too redundant"
std::string_view reason_label(FinalReason r);    // e.g. "Redundancy (Overlap >= delta)"

// One record per candidate per evaluated stage. The field set is the trace
// schema contract; every field is emitted non-null on every line.
struct TraceRecord {
    std::string chunk_id;
    std::string sheet_name;
    std::string bucket;
    int row_number = 0;
    int token_count = 0;
    double tf = 0.0;
    double boost = 0.0;
    double len_penalty = 1.0;
    double score_raw = 0.0;
    double score_final = 0.0;
    std::string stage;          // scoring | relevance | cap | global_budget | section_budget | redundancy | slack
    std::string step_decision;  // pass | fail
    std::string final_decision; // selected | rejected
    std::string final_reason;   // reason_id() of a FinalReason
    nlohmann::json step_details;
};

// Buffers records grouped per candidate in first-seen (rank) order; the final
// verdict is stamped onto all of a candidate's records once selection ends.
// One sink per query, single writer.
class TraceSink {
public:
    void record(const ScoredCandidate& cand, std::string_view stage, bool pass,
                nlohmann::json details);  // throws SinkClosed
    void finalize_candidate(const std::string& chunk_id, bool selected, FinalReason reason);

    // Flattened deterministic order: candidate rank, then stage order.
    std::vector<TraceRecord> records() const;

    nlohmann::json& audit() { return audit_; }
    const nlohmann::json& audit() const { return audit_; }

    void close() { open_ = false; }
    bool is_open() const { return open_; }

private:
    bool open_ = true;
    std::vector<std::vector<TraceRecord>> groups_;
    std::map<std::string, size_t> group_index_;
    nlohmann::json audit_ = nlohmann::json::object();
};

struct ManifestEntry {
    std::string chunk_id;
    std::string sheet_name;
    int token_count = 0;
    int rank = 0;  // 1-based selection order
};

struct Manifest {
    std::string query;
    std::string config_digest;
    std::vector<ManifestEntry> selected;
    int total_tokens = 0;
    std::vector<std::string> sections_covered;
    std::string created_at;  // manifest only; the trace stays timestamp-free
};

Manifest make_manifest(const std::string& query, const std::string& config_digest,
                       const ContextBubble& bubble);

/// Writes trace.jsonl, manifest.json, audit.json and bubble.txt into out_dir,
/// then closes the sink. Identical inputs produce byte-identical trace and
/// bubble files (the manifest carries the only timestamp).
void emit_run(const std::filesystem::path& out_dir, TraceSink& sink,
              const ContextBubble& bubble, const Manifest& manifest);

std::vector<TraceRecord> load_trace(const std::filesystem::path& path);

/// Percentage of rejected candidates per final reason; empty when nothing was
/// rejected. Percentages are over rejected candidates only.
std::map<std::string, double> rejection_breakdown(const std::vector<TraceRecord>& records);

}  // namespace bubble
