// Command line front end: ingest documents into a corpus, build a context
// bubble for a query, run the evaluation harness, or explain a trace line.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bubble/bubble.hpp"
#include "bubble/config.hpp"
#include "bubble/corpus.hpp"
#include "bubble/errors.hpp"
#include "bubble/eval.hpp"
#include "bubble/trace.hpp"
#include "bubble/util.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<bubble::RowRecord> read_rows_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bubble::UsageError("cannot read input: " + path.string());
    std::vector<bubble::RowRecord> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw bubble::DataError(path.string() + ":" + std::to_string(lineno) +
                                    ": invalid JSON record (" + e.what() + ")");
        }
        if (!j.is_object() || !j.contains("source_doc") || !j.contains("section_label") ||
            !j.contains("row_number") || !j.contains("text")) {
            throw bubble::DataError(path.string() + ":" + std::to_string(lineno) +
                                    ": record must carry source_doc, section_label, row_number, text");
        }
        bubble::RowRecord row;
        row.source_doc = j["source_doc"].get<std::string>();
        row.section_label = j["section_label"].get<std::string>();
        row.row_number = j["row_number"].get<int>();
        row.text = j["text"].get<std::string>();
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bubble::UsageError("cannot read input: " + path.string());
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out,
               int max_chunk_tokens) {
    std::vector<bubble::Chunk> chunks;
    int skipped = 0;
    for (const auto& input : inputs) {
        fs::path path(input);
        if (!fs::exists(path)) throw bubble::UsageError("cannot read input: " + input);
        auto ext = path.extension().string();
        if (ext == ".jsonl" || ext == ".ndjson") {
            auto rows = read_rows_file(path);
            for (const auto& row : rows) {
                int tokens = bubble::count_tokens(row.text);
                if (tokens == 0) {
                    ++skipped;
                    continue;
                }
                bubble::Chunk c;
                c.text = row.text;
                c.section_label = row.section_label;
                c.row_number = row.row_number;
                c.source_doc = row.source_doc;
                c.token_count = tokens;
                c.chunk_id = bubble::make_chunk_id(row.source_doc, row.section_label,
                                                   row.row_number, row.text);
                c.bucket = bubble::assign_bucket(c, bubble::SourceKind::structured_row);
                chunks.push_back(std::move(c));
            }
        } else {
            auto kind = ext == ".txt" ? bubble::SourceKind::plain_text
                                      : bubble::SourceKind::other_doc;
            auto text_chunks = bubble::ingest_text(path.filename().string(), read_text_file(path),
                                                   max_chunk_tokens, kind);
            for (auto& c : text_chunks) chunks.push_back(std::move(c));
        }
    }

    auto corpus = bubble::Corpus::from_chunks(std::move(chunks), skipped);
    corpus.save(out);

    std::set<std::string> sections;
    for (const auto& c : corpus.chunks()) sections.insert(c.section_label);
    std::printf("chunks=%d sections=%zu skipped=%d -> %s\n", corpus.chunk_count(), sections.size(),
                skipped, out.c_str());
    return 0;
}

bubble::Corpus load_corpus_checked(const std::string& path) {
    if (!fs::exists(path)) throw bubble::DataError("corpus file not found: " + path);
    return bubble::Corpus::load(path);
}

bubble::EngineConfig load_config_opt(const std::string& path) {
    if (path.empty()) return bubble::default_config();
    return bubble::load_config(path);
}

int cmd_build(const std::string& corpus_path, const std::string& query,
              const std::string& config_path, const std::string& out_dir, int budget_override,
              double delta_override, const std::string& variant) {
    auto corpus = load_corpus_checked(corpus_path);
    auto cfg = load_config_opt(config_path);
    if (budget_override > 0) cfg.bubble.token_budget = budget_override;
    if (delta_override >= 0) cfg.bubble.delta = delta_override;

    bubble::RunOutput run;
    if (variant.empty() || variant == "config") {
        run = bubble::run_query(query, corpus, cfg);
    } else {
        run = bubble::run_variant(
            query, corpus, bubble::canonical_variant(variant, cfg.bubble.token_budget), cfg);
    }

    auto manifest = bubble::make_manifest(query, bubble::config_digest(cfg), run.bubble);
    bubble::emit_run(out_dir, run.sink, run.bubble, manifest);

    auto metrics = bubble::metrics_for(run.bubble, "run");
    std::printf("tokens=%d/%d sections=%d chunks=%d%s -> %s\n", metrics.tokens_used,
                cfg.bubble.token_budget, metrics.unique_sections, metrics.chunks_selected,
                metrics.chunks_selected == 0 ? " (empty bubble)" : "", out_dir.c_str());
    return 0;
}

void write_bundle(const bubble::ReportBundle& bundle, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    for (const auto& [name, content] : bundle.files) {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out) throw bubble::DataError("cannot write report file: " + (out_dir / name).string());
        out << content;
    }
    std::ofstream summary(out_dir / "summary.json", std::ios::binary);
    summary << bundle.summary.dump(2) << '\n';
}

int cmd_eval(const std::string& corpus_path, const std::string& query_set_path,
             const std::string& config_path, const std::string& report, const std::string& out_dir,
             int budget_override, double delta_override, const std::string& query_override) {
    static const std::set<std::string> kReports = {"compare", "matched", "ablate",
                                                   "sweep",   "sections", "rejections"};
    if (!kReports.count(report)) throw bubble::UsageError("unknown report: " + report);

    auto corpus = load_corpus_checked(corpus_path);
    auto cfg = load_config_opt(config_path);
    if (budget_override > 0) cfg.bubble.token_budget = budget_override;
    if (delta_override >= 0) cfg.bubble.delta = delta_override;

    auto queries = bubble::load_query_set(query_set_path);
    std::string single_query = query_override.empty() ? queries.entries.front().query : query_override;

    bubble::ReportBundle bundle;
    if (report == "compare") bundle = bubble::report_compare(queries, corpus, cfg, false);
    else if (report == "matched") bundle = bubble::report_compare(queries, corpus, cfg, true);
    else if (report == "ablate") bundle = bubble::report_ablation(queries, corpus, cfg);
    else if (report == "sweep") bundle = bubble::report_sweep(single_query, corpus, cfg,
                                                              bubble::default_delta_grid());
    else if (report == "sections") bundle = bubble::report_sections(single_query, corpus, cfg);
    else bundle = bubble::report_rejections(queries, corpus, cfg);

    write_bundle(bundle, out_dir);
    for (const auto& [name, content] : bundle.files) {
        size_t lines = std::count(content.begin(), content.end(), '\n');
        std::printf("%s: %zu rows -> %s\n", name.c_str(), lines ? lines - 1 : 0,
                    (fs::path(out_dir) / name).string().c_str());
    }
    return 0;
}

int cmd_explain(const std::string& trace_path, const std::string& chunk_id) {
    auto records = bubble::load_trace(trace_path);
    std::vector<const bubble::TraceRecord*> mine;
    for (const auto& rec : records) {
        if (rec.chunk_id == chunk_id) mine.push_back(&rec);
    }
    if (mine.empty()) throw bubble::LookupError("chunk_id not found in trace: " + chunk_id);

    const auto* first = mine.front();
    std::printf("chunk %s (sheet \"%s\", bucket \"%s\", row %d, %d tokens)\n", chunk_id.c_str(),
                first->sheet_name.c_str(), first->bucket.c_str(), first->row_number,
                first->token_count);
    std::printf("  signals: tf=%s boost=%s len_penalty=%s score_raw=%s score_final=%s\n",
                bubble::fmt_num(first->tf).c_str(), bubble::fmt_num(first->boost).c_str(),
                bubble::fmt_num(first->len_penalty).c_str(),
                bubble::fmt_num(first->score_raw).c_str(),
                bubble::fmt_num(first->score_final).c_str());
    for (const auto* rec : mine) {
        std::string detail;
        const auto& d = rec->step_details;
        if (rec->stage == "redundancy" || rec->stage == "slack") {
            detail = "overlap=" + bubble::fmt_num(d.value("overlap", 0.0)) +
                     " delta=" + bubble::fmt_num(d.value("threshold", 0.0));
        } else if (rec->stage == "global_budget") {
            detail = "total=" + std::to_string(d.value("total_before", 0)) + " + " +
                     std::to_string(d.value("token_count", 0)) +
                     " vs budget=" + std::to_string(d.value("token_budget", 0));
        } else if (rec->stage == "section_budget") {
            detail = d.value("bucket", std::string()) + ": " +
                     std::to_string(d.value("section_before", 0)) + " + " +
                     std::to_string(d.value("token_count", 0)) +
                     " vs cap=" + std::to_string(d.value("section_cap", 0));
        } else if (rec->stage == "relevance") {
            detail = "score=" + bubble::fmt_num(d.value("score_final", 0.0)) +
                     " floor=" + bubble::fmt_num(d.value("floor", 0.0));
        } else if (rec->stage == "scoring") {
            detail = "overlap=" + bubble::fmt_num(d.value("overlap", 0.0));
        } else if (rec->stage == "cap") {
            detail = "max_chunks=" + std::to_string(d.value("max_chunks", 0));
        }
        std::printf("  %-15s %-4s %s\n", rec->stage.c_str(), rec->step_decision.c_str(),
                    detail.c_str());
    }
    std::string reason = first->final_reason;
    for (auto& c : reason) {
        if (c == '_') c = ' ';
    }
    std::printf("-> %s: %s\n", first->final_decision.c_str(), reason.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context bubble construction engine"};
    app.require_subcommand(0, 1);

    bool print_default_config = false;
    app.add_flag("--print-default-config", print_default_config,
                 "Print the full default engine config as JSON and exit");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Ingest row/text files into a corpus file");
    std::vector<std::string> inputs;
    std::string out_path;
    int max_chunk_tokens = 120;
    ingest->add_option("inputs", inputs, "Input files (.jsonl rows, .txt text)")->required();
    ingest->add_option("--out", out_path, "Corpus output path")->required();
    ingest->add_option("--max-chunk-tokens", max_chunk_tokens,
                       "Cap for text-document segments (default 120)");

    // build
    auto* build = app.add_subcommand("build", "Build a context bubble for one query");
    std::string corpus_path, config_path, query, out_dir, variant;
    int budget = -1;
    double delta = -1.0;
    build->add_option("--corpus", corpus_path, "Corpus file")->required();
    build->add_option("--query", query, "Query text")->required();
    build->add_option("--config", config_path, "Engine config JSON (defaults when omitted)");
    build->add_option("--out", out_dir, "Output directory for run artifacts")->required();
    build->add_option("--budget", budget, "Override token budget");
    build->add_option("--delta", delta, "Override redundancy threshold");
    build->add_option("--variant", variant,
                      "Emulate a canonical variant (flat_topk, plus_structure, plus_diversity, full)");

    // eval
    auto* eval = app.add_subcommand("eval", "Run the evaluation harness over a query set");
    std::string qs_path, report, eval_query;
    eval->add_option("--corpus", corpus_path, "Corpus file")->required();
    eval->add_option("--query-set", qs_path, "Query set file")->required();
    eval->add_option("--config", config_path, "Engine config JSON (defaults when omitted)");
    eval->add_option("--report", report,
                     "compare | matched | ablate | sweep | sections | rejections")->required();
    eval->add_option("--out", out_dir, "Output directory")->required();
    eval->add_option("--budget", budget, "Override token budget");
    eval->add_option("--delta", delta, "Override redundancy threshold");
    eval->add_option("--query", eval_query, "Query for single-query reports (sweep, sections)");

    // explain
    auto* explain = app.add_subcommand("explain", "Explain one chunk's trace, stage by stage");
    std::string trace_path, chunk_id;
    explain->add_option("trace", trace_path, "trace.jsonl path")->required();
    explain->add_option("chunk_id", chunk_id, "Chunk identifier")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
            return app.exit(e);
        }
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (print_default_config) {
            std::cout << bubble::config_to_json(bubble::default_config()).dump(2) << "\n";
            return 0;
        }
        if (ingest->parsed()) return cmd_ingest(inputs, out_path, max_chunk_tokens);
        if (build->parsed()) {
            return cmd_build(corpus_path, query, config_path, out_dir, budget, delta, variant);
        }
        if (eval->parsed()) {
            return cmd_eval(corpus_path, qs_path, config_path, report, out_dir, budget, delta,
                            eval_query);
        }
        if (explain->parsed()) return cmd_explain(trace_path, chunk_id);
        std::cout << app.help() << "\n";
        return 0;
    } catch (const bubble::LookupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const bubble::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const bubble::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
