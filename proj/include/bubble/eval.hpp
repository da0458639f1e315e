#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bubble/bubble.hpp"
#include "bubble/config.hpp"
#include "bubble/trace.hpp"

namespace bubble {

// One context-construction strategy: gates switched on or off inside the one
// shared pipeline.
struct VariantSpec {
    std::string name;
    bool structure = true;
    bool diversity = true;
    bool section_budgets = true;
    int token_budget = 800;
};

/// flat_topk, plus_structure, plus_diversity or full. Throws UnknownVariant.
VariantSpec canonical_variant(std::string_view name, int token_budget);
std::vector<VariantSpec> canonical_variants(int token_budget);
std::string variant_display_name(const std::string& name);

struct MetricsRow {
    std::string variant;
    int tokens_used = 0;
    int unique_sections = 0;
    int chunks_selected = 0;
    // Mean at-insertion overlap over selected chunks after the first; 0 when
    // fewer than two chunks were selected.
    double avg_overlap = 0.0;
};

struct QueryEntry {
    std::string category;  // narrow_fact | multi_facet | cross_sheet | table_dependent
    std::string query;
};

struct QuerySet {
    std::vector<QueryEntry> entries;
    std::map<std::string, int> category_counts() const;
};

/// One "category: query" entry per line; '#' starts a comment. Throws
/// DataError with the offending line number, EmptyQuerySet when nothing loads.
QuerySet load_query_set(const std::filesystem::path& path);

struct RunOutput {
    ContextBubble bubble;
    TraceSink sink;
    MetricsRow metrics;
};

/// The full pipeline for one query: candidate retrieval, scoring, ranked
/// gated selection, trace. When gates.structure is off the score is raw tf
/// (no priors, no length penalty) and the prior pool is empty.
RunOutput run_query(const std::string& query, const Corpus& corpus, const EngineConfig& cfg);

EngineConfig variant_config(const VariantSpec& spec, const EngineConfig& base);

RunOutput run_variant(const std::string& query, const Corpus& corpus, const VariantSpec& spec,
                      const EngineConfig& base);

MetricsRow metrics_for(const ContextBubble& bubble, std::string variant_name);

struct CompareResult {
    // Aggregate means over the query set, one row per canonical variant.
    std::vector<MetricsRow> aggregate;
    std::vector<std::pair<QueryEntry, MetricsRow>> per_query;
    // token_matched only: per-query clamp (the full variant's realized usage).
    std::map<std::string, int> clamp_per_query;
};

/// Free mode runs each variant at its own budget; token-matched clamps every
/// variant (full included) to the full variant's realized usage per query.
CompareResult compare_variants(const QuerySet& queries, const Corpus& corpus,
                               const EngineConfig& base, bool token_matched);

/// bucket -> variant -> tokens among selected chunks, single query. Columns
/// (variants) sum to each variant's tokens_used.
std::map<std::string, std::map<std::string, int>> section_allocation(const std::string& query,
                                                                     const Corpus& corpus,
                                                                     const EngineConfig& base);

struct AblationRow {
    std::string configuration;  // Base | + Structure | + Diversity | Full
    bool structure = false;
    bool diversity = false;
    double tokens = 0.0;
    double sections = 0.0;
    double avg_overlap = 0.0;
};

std::vector<AblationRow> ablation_grid(const QuerySet& queries, const Corpus& corpus,
                                       const EngineConfig& base);

struct SweepRow {
    double delta = 0.0;
    int redundancy_passes = 0;  // candidates that cleared the overlap gate at their turn
    int unique_sections = 0;
    int tokens_used = 0;
};

std::vector<SweepRow> delta_sweep(const std::string& query, const Corpus& corpus,
                                  const EngineConfig& base, const std::vector<double>& deltas);

inline std::vector<double> default_delta_grid() { return {0.3, 0.4, 0.5, 0.6, 0.7}; }

// A rendered report: named files plus a machine-readable summary document.
struct ReportBundle {
    std::map<std::string, std::string> files;  // filename -> content
    nlohmann::json summary;
};

ReportBundle report_compare(const QuerySet&, const Corpus&, const EngineConfig&, bool token_matched);
ReportBundle report_ablation(const QuerySet&, const Corpus&, const EngineConfig&);
ReportBundle report_sections(const std::string& query, const Corpus&, const EngineConfig&);
ReportBundle report_sweep(const std::string& query, const Corpus&, const EngineConfig&,
                          const std::vector<double>& deltas);
ReportBundle report_rejections(const QuerySet&, const Corpus&, const EngineConfig&);

}  // namespace bubble
