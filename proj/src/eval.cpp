#include "bubble/eval.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "bubble/errors.hpp"
#include "bubble/util.hpp"

namespace bubble {

VariantSpec canonical_variant(std::string_view name, int token_budget) {
    VariantSpec spec;
    spec.name = std::string(name);
    spec.token_budget = token_budget;
    if (name == "flat_topk") {
        spec.structure = false;
        spec.diversity = false;
        spec.section_budgets = false;
    } else if (name == "plus_structure") {
        spec.structure = true;
        spec.diversity = false;
        spec.section_budgets = false;
    } else if (name == "plus_diversity") {
        spec.structure = false;
        spec.diversity = true;
        spec.section_budgets = false;
    } else if (name == "full") {
        spec.structure = true;
        spec.diversity = true;
        spec.section_budgets = true;
    } else {
        throw UnknownVariant(std::string(name));
    }
    return spec;
}

std::vector<VariantSpec> canonical_variants(int token_budget) {
    return {canonical_variant("flat_topk", token_budget),
            canonical_variant("plus_structure", token_budget),
            canonical_variant("plus_diversity", token_budget),
            canonical_variant("full", token_budget)};
}

std::string variant_display_name(const std::string& name) {
    if (name == "flat_topk") return "Flat Top-K";
    if (name == "plus_structure") return "+ Structure";
    if (name == "plus_diversity") return "+ Diversity";
    if (name == "full") return "Full Context Bubble";
    return name;
}

std::map<std::string, int> QuerySet::category_counts() const {
    std::map<std::string, int> counts;
    for (const auto& e : entries) counts[e.category] += 1;
    return counts;
}

QuerySet load_query_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read query set: " + path.string());

    static const std::set<std::string> kCategories = {"narrow_fact", "multi_facet", "cross_sheet",
                                                      "table_dependent"};
    auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t\r");
        size_t e = s.find_last_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        return s.substr(b, e - b + 1);
    };

    QuerySet qs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto colon = t.find(':');
        if (colon == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'category: query'");
        }
        std::string category = trim(t.substr(0, colon));
        std::string query = trim(t.substr(colon + 1));
        if (!kCategories.count(category)) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": unknown category '" +
                            category + "'");
        }
        if (query.empty()) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty query");
        }
        qs.entries.push_back({category, query});
    }
    if (qs.entries.empty()) throw EmptyQuerySet(path.string());
    return qs;
}

MetricsRow metrics_for(const ContextBubble& bubble, std::string variant_name) {
    MetricsRow row;
    row.variant = std::move(variant_name);
    row.tokens_used = bubble.total_tokens;
    row.chunks_selected = static_cast<int>(bubble.selected.size());
    std::set<std::string> sections;
    for (const auto& sel : bubble.selected) sections.insert(sel.cand.candidate.chunk->section_label);
    row.unique_sections = static_cast<int>(sections.size());
    if (bubble.selected.size() > 1) {
        double sum = 0.0;
        for (size_t i = 1; i < bubble.selected.size(); ++i) sum += bubble.selected[i].overlap_at_selection;
        row.avg_overlap = round6(sum / static_cast<double>(bubble.selected.size() - 1));
    }
    return row;
}

RunOutput run_query(const std::string& query, const Corpus& corpus, const EngineConfig& cfg) {
    RunOutput out;
    QueryTerms terms = make_query(query);

    PriorConfig priors = cfg.priors;
    priors.theta = resolve_theta(priors, corpus);
    const bool structure = cfg.bubble.gates.structure;

    // With structure off there are no priors, so the prior pool is empty and
    // only tf > 0 chunks can become candidates.
    PriorConfig effective = structure ? priors : PriorConfig{};
    if (!effective.theta.has_value()) effective.theta = priors.theta;

    auto candidates = retrieve_candidates(terms, corpus, cfg.retrieval, effective);

    std::vector<ScoredCandidate> scored;
    scored.reserve(candidates.size());
    for (const auto& cand : candidates) {
        if (structure) {
            scored.push_back(score_candidate(cand, priors));
        } else {
            ScoredCandidate sc;
            sc.candidate = cand;
            sc.prior = 0.0;
            sc.len_penalty = 1.0;
            sc.score_raw = cand.tf;
            sc.score_final = cand.tf;
            scored.push_back(sc);
        }
    }
    auto ranked = rank_candidates(std::move(scored));

    auto& audit = out.sink.audit();
    audit["query"] = query;
    audit["theta"] = {{"value", *priors.theta},
                      {"source", cfg.priors.theta.has_value() ? "explicit" : "corpus-median"}};
    audit["retrieval"] = {{"k_lexical", cfg.retrieval.k_lexical},
                          {"m_prior_pool", cfg.retrieval.m_prior_pool},
                          {"bm25_k1", round6(cfg.retrieval.bm25_k1)},
                          {"bm25_b", round6(cfg.retrieval.bm25_b)},
                          {"candidates", static_cast<int>(ranked.size())}};
    audit["corpus"] = {{"chunk_count", corpus.chunk_count()},
                       {"rows_skipped_at_ingest", corpus.rows_skipped()}};

    out.bubble = build_bubble(ranked, cfg.bubble, &out.sink);
    out.metrics = metrics_for(out.bubble, "full");
    return out;
}

EngineConfig variant_config(const VariantSpec& spec, const EngineConfig& base) {
    EngineConfig cfg = base;
    cfg.bubble.gates.structure = spec.structure;
    cfg.bubble.gates.redundancy = spec.diversity;
    cfg.bubble.gates.section_budgets = spec.section_budgets;
    cfg.bubble.token_budget = spec.token_budget;
    return cfg;
}

RunOutput run_variant(const std::string& query, const Corpus& corpus, const VariantSpec& spec,
                      const EngineConfig& base) {
    EngineConfig cfg = variant_config(spec, base);
    RunOutput out = run_query(query, corpus, cfg);
    out.metrics.variant = spec.name;
    out.sink.audit()["variant"] = spec.name;
    return out;
}

namespace {

MetricsRow mean_row(const std::string& variant, const std::vector<MetricsRow>& rows) {
    MetricsRow out;
    out.variant = variant;
    if (rows.empty()) return out;
    double tokens = 0, sections = 0, chunks = 0, ov = 0;
    for (const auto& r : rows) {
        tokens += r.tokens_used;
        sections += r.unique_sections;
        chunks += r.chunks_selected;
        ov += r.avg_overlap;
    }
    double n = static_cast<double>(rows.size());
    // Integer fields keep their exact value for a single query; aggregates
    // over several queries round to nearest.
    out.tokens_used = static_cast<int>(std::lround(tokens / n));
    out.unique_sections = static_cast<int>(std::lround(sections / n));
    out.chunks_selected = static_cast<int>(std::lround(chunks / n));
    out.avg_overlap = round6(ov / n);
    return out;
}

}  // namespace

CompareResult compare_variants(const QuerySet& queries, const Corpus& corpus,
                               const EngineConfig& base, bool token_matched) {
    CompareResult result;
    auto variants = canonical_variants(base.bubble.token_budget);
    std::map<std::string, std::vector<MetricsRow>> per_variant;

    for (const auto& entry : queries.entries) {
        int budget = base.bubble.token_budget;
        if (token_matched) {
            auto full = run_variant(entry.query, corpus, canonical_variant("full", budget), base);
            budget = std::max(1, full.metrics.tokens_used);
            result.clamp_per_query[entry.query] = budget;
        }
        for (const auto& variant : variants) {
            VariantSpec spec = variant;
            spec.token_budget = budget;
            auto run = run_variant(entry.query, corpus, spec, base);
            per_variant[spec.name].push_back(run.metrics);
            result.per_query.emplace_back(entry, run.metrics);
        }
    }
    for (const auto& variant : variants) {
        result.aggregate.push_back(mean_row(variant.name, per_variant[variant.name]));
    }
    return result;
}

std::map<std::string, std::map<std::string, int>> section_allocation(const std::string& query,
                                                                     const Corpus& corpus,
                                                                     const EngineConfig& base) {
    std::map<std::string, std::map<std::string, int>> table;
    for (const auto& variant : canonical_variants(base.bubble.token_budget)) {
        auto run = run_variant(query, corpus, variant, base);
        for (const auto& sel : run.bubble.selected) {
            table[sel.cand.candidate.chunk->bucket][variant.name] += sel.cand.candidate.chunk->token_count;
        }
    }
    return table;
}

std::vector<AblationRow> ablation_grid(const QuerySet& queries, const Corpus& corpus,
                                       const EngineConfig& base) {
    static const std::vector<std::pair<std::string, std::string>> kRows = {
        {"flat_topk", "Base"},
        {"plus_structure", "+ Structure"},
        {"plus_diversity", "+ Diversity"},
        {"full", "Full"},
    };
    auto compare = compare_variants(queries, corpus, base, false);
    std::vector<AblationRow> rows;
    for (const auto& [name, label] : kRows) {
        auto spec = canonical_variant(name, base.bubble.token_budget);
        for (const auto& agg : compare.aggregate) {
            if (agg.variant != name) continue;
            AblationRow row;
            row.configuration = label;
            row.structure = spec.structure;
            row.diversity = spec.diversity;
            row.tokens = agg.tokens_used;
            row.sections = agg.unique_sections;
            row.avg_overlap = agg.avg_overlap;
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SweepRow> delta_sweep(const std::string& query, const Corpus& corpus,
                                  const EngineConfig& base, const std::vector<double>& deltas) {
    std::vector<SweepRow> rows;
    for (double delta : deltas) {
        EngineConfig cfg = base;
        cfg.bubble.delta = delta;
        auto run = run_variant(query, corpus, canonical_variant("full", cfg.bubble.token_budget), cfg);
        SweepRow row;
        row.delta = round6(delta);
        row.tokens_used = run.bubble.total_tokens;
        row.unique_sections = metrics_for(run.bubble, "full").unique_sections;
        for (const auto& rec : run.sink.records()) {
            if (rec.stage == "redundancy" && rec.step_decision == "pass") ++row.redundancy_passes;
            if (rec.stage == "slack" && rec.step_details.value("redundancy_ok", false) &&
                rec.step_details.value("cap_ok", false)) {
                ++row.redundancy_passes;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report rendering

namespace {

std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += csv_escape(cells[i]);
    }
    line += '\n';
    return line;
}

nlohmann::json base_summary(const QuerySet& queries) {
    nlohmann::json j;
    j["queries"] = static_cast<int>(queries.entries.size());
    j["category_counts"] = queries.category_counts();
    j["avg_overlap_definition"] =
        "mean at-insertion overlap over selected chunks after the first; 0 for 0 or 1 selections";
    return j;
}

}  // namespace

ReportBundle report_compare(const QuerySet& queries, const Corpus& corpus, const EngineConfig& base,
                            bool token_matched) {
    // The engine is deterministic; the harness demonstrates it by running the
    // comparison twice and reporting the (zero) spread instead of a Monte
    // Carlo variance table.
    auto first = compare_variants(queries, corpus, base, token_matched);
    auto second = compare_variants(queries, corpus, base, token_matched);
    double max_spread = 0.0;
    for (size_t i = 0; i < first.aggregate.size(); ++i) {
        max_spread = std::max(max_spread, static_cast<double>(std::abs(
                                              first.aggregate[i].tokens_used -
                                              second.aggregate[i].tokens_used)));
    }

    ReportBundle bundle;
    std::string agg;
    if (token_matched) {
        agg += csv_row({"Variant", "Token Budget", "Tokens Used", "Unique Sections", "Avg Overlap",
                        "Chunks Selected"});
        double mean_clamp = 0.0;
        for (const auto& [q, c] : first.clamp_per_query) mean_clamp += c;
        if (!first.clamp_per_query.empty()) mean_clamp /= first.clamp_per_query.size();
        for (const auto& row : first.aggregate) {
            agg += csv_row({variant_display_name(row.variant), fmt_num(mean_clamp),
                            std::to_string(row.tokens_used), std::to_string(row.unique_sections),
                            fmt_num(row.avg_overlap), std::to_string(row.chunks_selected)});
        }
    } else {
        agg += csv_row({"Variant", "Tokens Used", "Unique Sections", "Avg Overlap", "Chunks Selected"});
        for (const auto& row : first.aggregate) {
            agg += csv_row({variant_display_name(row.variant), std::to_string(row.tokens_used),
                            std::to_string(row.unique_sections), fmt_num(row.avg_overlap),
                            std::to_string(row.chunks_selected)});
        }
    }
    std::string name = token_matched ? "matched" : "compare";
    bundle.files[name + ".csv"] = agg;

    std::string per;
    per += csv_row({"Query", "Category", "Variant", "Tokens Used", "Unique Sections", "Avg Overlap",
                    "Chunks Selected"});
    for (const auto& [entry, row] : first.per_query) {
        per += csv_row({entry.query, entry.category, variant_display_name(row.variant),
                        std::to_string(row.tokens_used), std::to_string(row.unique_sections),
                        fmt_num(row.avg_overlap), std::to_string(row.chunks_selected)});
    }
    bundle.files[name + "_per_query.csv"] = per;

    bundle.summary = base_summary(queries);
    bundle.summary["report"] = name;
    bundle.summary["repeat_runs"] = 2;
    bundle.summary["token_std_dev"] = max_spread;  // asserted 0 by the determinism contract
    if (token_matched) bundle.summary["clamp_per_query"] = first.clamp_per_query;
    return bundle;
}

ReportBundle report_ablation(const QuerySet& queries, const Corpus& corpus,
                             const EngineConfig& base) {
    auto rows = ablation_grid(queries, corpus, base);
    ReportBundle bundle;
    std::string csv;
    csv += csv_row({"Configuration", "Structure", "Diversity", "Tokens", "Sections", "Avg Overlap"});
    for (const auto& row : rows) {
        csv += csv_row({row.configuration, row.structure ? "✓" : "✗",
                        row.diversity ? "✓" : "✗", fmt_num(row.tokens),
                        fmt_num(row.sections), fmt_num(row.avg_overlap)});
    }
    bundle.files["ablate.csv"] = csv;
    bundle.summary = base_summary(queries);
    bundle.summary["report"] = "ablate";
    return bundle;
}

ReportBundle report_sections(const std::string& query, const Corpus& corpus,
                             const EngineConfig& base) {
    auto table = section_allocation(query, corpus, base);
    auto variants = canonical_variants(base.bubble.token_budget);

    ReportBundle bundle;
    std::string csv;
    std::vector<std::string> header = {"Section"};
    for (const auto& v : variants) header.push_back(variant_display_name(v.name));
    csv += csv_row(header);
    for (const auto& [bucket, by_variant] : table) {
        std::vector<std::string> cells = {bucket};
        for (const auto& v : variants) {
            auto it = by_variant.find(v.name);
            cells.push_back(std::to_string(it == by_variant.end() ? 0 : it->second));
        }
        csv += csv_row(cells);
    }
    bundle.files["sections.csv"] = csv;
    bundle.summary["report"] = "sections";
    bundle.summary["query"] = query;
    return bundle;
}

ReportBundle report_sweep(const std::string& query, const Corpus& corpus, const EngineConfig& base,
                          const std::vector<double>& deltas) {
    auto rows = delta_sweep(query, corpus, base, deltas);
    ReportBundle bundle;
    std::string csv;
    csv += csv_row({"Delta", "Redundancy Passes", "Unique Sections", "Tokens Used"});
    for (const auto& row : rows) {
        csv += csv_row({fmt_num(row.delta), std::to_string(row.redundancy_passes),
                        std::to_string(row.unique_sections), std::to_string(row.tokens_used)});
    }
    bundle.files["sweep.csv"] = csv;
    bundle.summary["report"] = "sweep";
    bundle.summary["query"] = query;
    return bundle;
}

ReportBundle report_rejections(const QuerySet& queries, const Corpus& corpus,
                               const EngineConfig& base) {
    // Pools every rejected candidate across the query set under the full
    // variant, then reports the reason distribution.
    std::vector<TraceRecord> all;
    for (const auto& entry : queries.entries) {
        auto run = run_variant(entry.query, corpus,
                               canonical_variant("full", base.bubble.token_budget), base);
        // Rejection identity is per (query, chunk); prefix ids per query so
        // the same chunk rejected under two queries counts twice.
        for (auto rec : run.sink.records()) {
            rec.chunk_id = entry.query + "\x1f" + rec.chunk_id;
            all.push_back(std::move(rec));
        }
    }
    auto breakdown = rejection_breakdown(all);

    static const std::vector<FinalReason> kOrder = {
        FinalReason::too_redundant, FinalReason::budget_exceeded,
        FinalReason::section_budget_exceeded, FinalReason::low_relevance,
        FinalReason::selection_cap};

    ReportBundle bundle;
    std::string csv;
    csv += csv_row({"Rejection Reason", "Percentage of Candidates"});
    for (auto reason : kOrder) {
        auto it = breakdown.find(std::string(reason_id(reason)));
        if (it == breakdown.end()) continue;
        char pct[32];
        std::snprintf(pct, sizeof(pct), "%.1f%%", it->second);
        csv += csv_row({std::string(reason_label(reason)), pct});
    }
    bundle.files["rejections.csv"] = csv;
    bundle.summary = base_summary(queries);
    bundle.summary["report"] = "rejections";
    bundle.summary["breakdown"] = breakdown;
    return bundle;
}

}  // namespace bubble
