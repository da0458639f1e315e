#include "bubble/trace.hpp"

#include <fstream>

#include "bubble/bubble.hpp"
#include "bubble/errors.hpp"
#include "bubble/util.hpp"

namespace bubble {

std::string_view reason_id(FinalReason r) {
    switch (r) {
        case FinalReason::passed_all_gates: return "passed_all_gates";
        case FinalReason::low_relevance: return "low_relevance";
        case FinalReason::selection_cap: return "selection_cap";
        case FinalReason::budget_exceeded: return "budget_exceeded";
        case FinalReason::section_budget_exceeded: return "section_budget_exceeded";
        case FinalReason::too_redundant: return "too_redundant";
    }
    return "passed_all_gates";
}

std::string_view reason_spaced(FinalReason r) {
    switch (r) {
        case FinalReason::passed_all_gates: return "passed all gates";
        case FinalReason::low_relevance: return "low relevance";
        case FinalReason::selection_cap: return "selection cap";
        case FinalReason::budget_exceeded: return "budget exceeded";
        case FinalReason::section_budget_exceeded: return "section budget exceeded";
        case FinalReason::too_redundant: return "too redundant";
    }
    return "passed all gates";
}

std::string_view reason_label(FinalReason r) {
    switch (r) {
        case FinalReason::passed_all_gates: return "Passed All Gates";
        case FinalReason::low_relevance: return "Low Relevance";
        case FinalReason::selection_cap: return "Selection Cap";
        case FinalReason::budget_exceeded: return "Token Budget Exceeded";
        case FinalReason::section_budget_exceeded: return "Section Budget Exceeded";
        case FinalReason::too_redundant: return "Redundancy (Overlap >= delta)";
    }
    return "Passed All Gates";
}

void TraceSink::record(const ScoredCandidate& cand, std::string_view stage, bool pass,
                       nlohmann::json details) {
    if (!open_) throw SinkClosed();
    const Chunk& chunk = *cand.candidate.chunk;

    TraceRecord rec;
    rec.chunk_id = chunk.chunk_id;
    rec.sheet_name = chunk.section_label;
    rec.bucket = chunk.bucket;
    rec.row_number = chunk.row_number;
    rec.token_count = chunk.token_count;
    rec.tf = round6(static_cast<double>(cand.candidate.tf));
    rec.boost = round6(cand.prior);
    rec.len_penalty = round6(cand.len_penalty);
    rec.score_raw = round6(cand.score_raw);
    rec.score_final = round6(cand.score_final);
    rec.stage = std::string(stage);
    rec.step_decision = pass ? "pass" : "fail";
    rec.final_decision = "rejected";  // stamped by finalize_candidate
    rec.final_reason = std::string(reason_id(FinalReason::passed_all_gates));
    rec.step_details = std::move(details);

    auto it = group_index_.find(rec.chunk_id);
    if (it == group_index_.end()) {
        group_index_[rec.chunk_id] = groups_.size();
        groups_.emplace_back();
        groups_.back().push_back(std::move(rec));
    } else {
        groups_[it->second].push_back(std::move(rec));
    }
}

void TraceSink::finalize_candidate(const std::string& chunk_id, bool selected, FinalReason reason) {
    auto it = group_index_.find(chunk_id);
    if (it == group_index_.end()) return;
    for (auto& rec : groups_[it->second]) {
        rec.final_decision = selected ? "selected" : "rejected";
        rec.final_reason = std::string(reason_id(reason));
    }
}

std::vector<TraceRecord> TraceSink::records() const {
    std::vector<TraceRecord> out;
    for (const auto& group : groups_) {
        out.insert(out.end(), group.begin(), group.end());
    }
    return out;
}

Manifest make_manifest(const std::string& query, const std::string& config_digest,
                       const ContextBubble& bubble) {
    Manifest m;
    m.query = query;
    m.config_digest = config_digest;
    m.total_tokens = bubble.total_tokens;
    m.created_at = iso8601_utc_now();
    int rank = 1;
    for (const auto& sel : bubble.selected) {
        const Chunk& chunk = *sel.cand.candidate.chunk;
        m.selected.push_back({chunk.chunk_id, chunk.section_label, chunk.token_count, rank++});
        bool seen = false;
        for (const auto& s : m.sections_covered) {
            if (s == chunk.section_label) { seen = true; break; }
        }
        if (!seen) m.sections_covered.push_back(chunk.section_label);
    }
    return m;
}

namespace {

nlohmann::json record_to_json(const TraceRecord& rec) {
    return {{"chunk_id", rec.chunk_id},
            {"sheet_name", rec.sheet_name},
            {"bucket", rec.bucket},
            {"row_number", rec.row_number},
            {"token_count", rec.token_count},
            {"tf", rec.tf},
            {"boost", rec.boost},
            {"len_penalty", rec.len_penalty},
            {"score_raw", rec.score_raw},
            {"score_final", rec.score_final},
            {"stage", rec.stage},
            {"step_decision", rec.step_decision},
            {"final_decision", rec.final_decision},
            {"final_reason", rec.final_reason},
            {"step_details", rec.step_details}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << content;
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

void emit_run(const std::filesystem::path& out_dir, TraceSink& sink,
              const ContextBubble& bubble, const Manifest& manifest) {
    std::filesystem::create_directories(out_dir);

    std::string trace;
    for (const auto& rec : sink.records()) {
        trace += record_to_json(rec).dump();
        trace += '\n';
    }
    write_file(out_dir / "trace.jsonl", trace);

    nlohmann::json mj;
    mj["query"] = manifest.query;
    mj["config_digest"] = manifest.config_digest;
    mj["total_tokens"] = manifest.total_tokens;
    mj["sections_covered"] = manifest.sections_covered;
    mj["created_at"] = manifest.created_at;
    mj["selected"] = nlohmann::json::array();
    for (const auto& e : manifest.selected) {
        mj["selected"].push_back({{"chunk_id", e.chunk_id},
                                  {"sheet_name", e.sheet_name},
                                  {"token_count", e.token_count},
                                  {"rank", e.rank}});
    }
    write_file(out_dir / "manifest.json", mj.dump(2) + "\n");

    nlohmann::json audit = sink.audit();
    audit["slack_spent"] = bubble.slack_spent;
    audit["section_tokens"] = bubble.section_tokens;
    write_file(out_dir / "audit.json", audit.dump(2) + "\n");

    std::string text;
    for (const auto& sel : bubble.selected) {
        const Chunk& chunk = *sel.cand.candidate.chunk;
        text += "[" + chunk.section_label + " | " + chunk.chunk_id + " | " +
                std::to_string(chunk.token_count) + " tokens]\n";
        text += chunk.text;
        text += "\n\n";
    }
    write_file(out_dir / "bubble.txt", text);

    sink.close();
}

std::vector<TraceRecord> load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read trace file: " + path.string());
    std::vector<TraceRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("trace line " + std::to_string(lineno) + " is not valid JSON: " + e.what());
        }
        TraceRecord rec;
        rec.chunk_id = j.at("chunk_id").get<std::string>();
        rec.sheet_name = j.at("sheet_name").get<std::string>();
        rec.bucket = j.at("bucket").get<std::string>();
        rec.row_number = j.at("row_number").get<int>();
        rec.token_count = j.at("token_count").get<int>();
        rec.tf = j.at("tf").get<double>();
        rec.boost = j.at("boost").get<double>();
        rec.len_penalty = j.at("len_penalty").get<double>();
        rec.score_raw = j.at("score_raw").get<double>();
        rec.score_final = j.at("score_final").get<double>();
        rec.stage = j.at("stage").get<std::string>();
        rec.step_decision = j.at("step_decision").get<std::string>();
        rec.final_decision = j.at("final_decision").get<std::string>();
        rec.final_reason = j.at("final_reason").get<std::string>();
        rec.step_details = j.at("step_details");
        records.push_back(std::move(rec));
    }
    return records;
}

std::map<std::string, double> rejection_breakdown(const std::vector<TraceRecord>& records) {
    std::map<std::string, std::string> verdict_by_chunk;  // chunk_id -> final_reason
    std::map<std::string, bool> rejected_by_chunk;
    for (const auto& rec : records) {
        if (!verdict_by_chunk.count(rec.chunk_id)) {
            verdict_by_chunk[rec.chunk_id] = rec.final_reason;
            rejected_by_chunk[rec.chunk_id] = rec.final_decision == "rejected";
        }
    }
    std::map<std::string, int> counts;
    int total = 0;
    for (const auto& [chunk_id, reason] : verdict_by_chunk) {
        if (!rejected_by_chunk[chunk_id]) continue;
        counts[reason] += 1;
        ++total;
    }
    std::map<std::string, double> out;
    if (total == 0) return out;
    for (const auto& [reason, n] : counts) {
        out[reason] = round6(100.0 * n / total);
    }
    return out;
}

}  // namespace bubble
