#pragma once

// Shared helpers for the test suites: small corpus builders, a subprocess
// runner for CLI tests, a random instance generator, and an independent
// re-implementation of the gate semantics used as the selection oracle.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "bubble/bubble.hpp"
#include "bubble/config.hpp"
#include "bubble/corpus.hpp"
#include "bubble/eval.hpp"
#include "bubble/scoring.hpp"

namespace testsupport {

inline std::filesystem::path data_dir() { return BUBBLE_DATA_DIR; }

inline std::filesystem::path make_temp_dir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path() / ("bubble_test_" + tag + "_XXXXXX");
    std::string tmpl = base.string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    return std::filesystem::path(tmpl);
}

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

inline CommandResult run_command(const std::string& cmd) {
    auto out_file = make_temp_dir("cmd") / "out.txt";
    std::string full = cmd + " > " + out_file.string() + " 2>&1";
    int rc = std::system(full.c_str());
    CommandResult result;
    result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out_file);
    std::ostringstream oss;
    oss << in.rdbuf();
    result.output = oss.str();
    return result;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream oss;
    oss << in.rdbuf();
    return oss.str();
}

inline bubble::Corpus corpus_from_texts(const std::vector<std::pair<std::string, std::string>>& rows,
                                        const std::string& source = "doc") {
    std::vector<bubble::RowRecord> records;
    std::map<std::string, int> row_counters;
    for (const auto& [section, text] : rows) {
        records.push_back({source, section, row_counters[section]++, text});
    }
    return bubble::ingest_rows(records);
}

// --------------------------------------------------------------------------
// Independent selection oracle.
//
// A deliberately plain re-simulation of the documented gate semantics:
// relevance floor, selection cap, global budget, section cap, overlap gate,
// then a second pass over section-budget rejects when the slack pool is
// active. It shares nothing with build_bubble except the tokenizer primitive.

struct OracleOutcome {
    std::vector<std::string> selected_ids;
    std::map<std::string, std::string> reason_by_id;  // chunk_id -> final reason id
};

inline OracleOutcome oracle_select(const std::vector<bubble::ScoredCandidate>& ranked,
                                   const bubble::BubbleConfig& cfg) {
    OracleOutcome result;
    std::set<std::string> bubble_words;
    std::map<std::string, long long> spent_per_bucket;
    long long spent_total = 0;
    int picked = 0;

    std::map<std::string, long long> caps;
    if (cfg.gates.section_budgets) {
        std::set<std::string> buckets;
        for (const auto& c : ranked) buckets.insert(c.candidate.chunk->bucket);
        if (cfg.section_fractions.has_value()) {
            for (const auto& b : buckets) {
                auto it = cfg.section_fractions->find(b);
                double frac = it == cfg.section_fractions->end() ? 0.0 : it->second;
                caps[b] = static_cast<long long>(std::floor(frac * cfg.token_budget + 1e-9));
            }
        } else if (!buckets.empty()) {
            for (const auto& b : buckets) {
                caps[b] = static_cast<long long>(
                    std::floor(cfg.token_budget / static_cast<double>(buckets.size()) + 1e-9));
            }
        }
    }

    auto chunk_words = [](const bubble::Chunk& chunk) {
        std::set<std::string> words;
        for (const auto& t : bubble::tokenize(chunk.text)) words.insert(t);
        return words;
    };
    auto overlap_of = [&](const bubble::Chunk& chunk) {
        auto words = chunk_words(chunk);
        if (words.empty() || bubble_words.empty()) return 0.0;
        int shared = 0;
        for (const auto& w : words) {
            if (bubble_words.count(w)) ++shared;
        }
        return static_cast<double>(shared) / static_cast<double>(words.size());
    };
    auto take = [&](const bubble::ScoredCandidate& cand) {
        const auto& chunk = *cand.candidate.chunk;
        result.selected_ids.push_back(chunk.chunk_id);
        result.reason_by_id[chunk.chunk_id] = "passed_all_gates";
        spent_total += chunk.token_count;
        spent_per_bucket[chunk.bucket] += chunk.token_count;
        for (const auto& w : chunk_words(chunk)) bubble_words.insert(w);
        ++picked;
    };

    std::vector<const bubble::ScoredCandidate*> section_rejects;
    for (const auto& cand : ranked) {
        const auto& chunk = *cand.candidate.chunk;
        if (cand.score_final < cfg.relevance_floor) {
            result.reason_by_id[chunk.chunk_id] = "low_relevance";
            continue;
        }
        if (picked >= cfg.max_chunks) {
            result.reason_by_id[chunk.chunk_id] = "selection_cap";
            continue;
        }
        if (spent_total + chunk.token_count > cfg.token_budget) {
            result.reason_by_id[chunk.chunk_id] = "budget_exceeded";
            continue;
        }
        if (cfg.gates.section_budgets) {
            long long cap = caps.count(chunk.bucket) ? caps[chunk.bucket] : 0;
            if (spent_per_bucket[chunk.bucket] + chunk.token_count > cap) {
                if (cfg.slack_policy == bubble::SlackPolicy::slack_pool) {
                    section_rejects.push_back(&cand);
                } else {
                    result.reason_by_id[chunk.chunk_id] = "section_budget_exceeded";
                }
                continue;
            }
        }
        double ov = overlap_of(chunk);
        if (cfg.gates.redundancy && ov > 0.0 && ov >= cfg.delta) {
            result.reason_by_id[chunk.chunk_id] = "too_redundant";
            continue;
        }
        take(cand);
    }

    for (const auto* cand : section_rejects) {
        const auto& chunk = *cand->candidate.chunk;
        if (picked >= cfg.max_chunks) {
            result.reason_by_id[chunk.chunk_id] = "selection_cap";
            continue;
        }
        if (spent_total + chunk.token_count > cfg.token_budget) {
            result.reason_by_id[chunk.chunk_id] = "budget_exceeded";
            continue;
        }
        double ov = overlap_of(chunk);
        if (cfg.gates.redundancy && ov > 0.0 && ov >= cfg.delta) {
            result.reason_by_id[chunk.chunk_id] = "too_redundant";
            continue;
        }
        take(*cand);
    }
    return result;
}

// --------------------------------------------------------------------------
// Random instance generator for the oracle and budget-safety fuzz.

struct RandomInstance {
    bubble::Corpus corpus;
    std::string query;
    bubble::EngineConfig config;
};

inline RandomInstance random_instance(std::mt19937& rng) {
    static const std::vector<std::string> vocab = {
        "alpha", "beta",  "gamma", "delta", "epsilon", "zeta",  "eta",   "theta",
        "iota",  "kappa", "mu",    "nu",    "omega",   "sigma", "tau",   "rho",
        "works", "site",  "floor", "wall",  "slab",    "pump",  "drain", "seal"};
    static const std::vector<std::string> sections = {"A", "B", "C", "D"};

    auto pick = [&](const std::vector<std::string>& pool) {
        return pool[rng() % pool.size()];
    };

    int n_chunks = 1 + static_cast<int>(rng() % 30);
    std::vector<bubble::RowRecord> rows;
    for (int i = 0; i < n_chunks; ++i) {
        int words = 1 + static_cast<int>(rng() % 40);
        std::string text;
        for (int w = 0; w < words; ++w) {
            if (w) text += ' ';
            text += pick(vocab);
        }
        rows.push_back({"rand", pick(sections), i, text});
    }

    RandomInstance inst;
    inst.corpus = bubble::ingest_rows(rows);

    int n_terms = static_cast<int>(rng() % 5);
    for (int t = 0; t < n_terms; ++t) {
        if (t) inst.query += ' ';
        inst.query += pick(vocab);
    }

    auto& cfg = inst.config;
    cfg.retrieval.k_lexical = 1 + static_cast<int>(rng() % 40);
    cfg.retrieval.m_prior_pool = static_cast<int>(rng() % 10);
    for (const auto& s : sections) {
        if (rng() % 2) {
            cfg.priors.section_boosts[s] = static_cast<double>(static_cast<int>(rng() % 13) - 4) / 2.0;
        }
    }
    if (rng() % 2) cfg.priors.keyword_boosts[pick(vocab)] = 1.0 + (rng() % 4);
    cfg.bubble.token_budget = 10 + static_cast<int>(rng() % 400);
    cfg.bubble.max_chunks = 1 + static_cast<int>(rng() % 12);
    cfg.bubble.delta = static_cast<double>(rng() % 11) / 10.0;
    cfg.bubble.relevance_floor = (rng() % 3 == 0) ? -1.0 : 0.0;
    cfg.bubble.slack_policy = (rng() % 2) ? bubble::SlackPolicy::slack_pool
                                          : bubble::SlackPolicy::strict;
    cfg.bubble.gates.redundancy = rng() % 4 != 0;
    cfg.bubble.gates.section_budgets = rng() % 4 != 0;
    if (rng() % 3 == 0) {
        std::map<std::string, double> fractions;
        double left = 1.0;
        for (const auto& s : sections) {
            if (rng() % 2 && left > 0.05) {
                double f = std::min(left, static_cast<double>(rng() % 40) / 100.0);
                fractions[s] = f;
                left -= f;
            }
        }
        cfg.bubble.section_fractions = fractions;
    }
    return inst;
}

// Ranked candidates for an instance, exactly as the pipeline produces them.
inline std::vector<bubble::ScoredCandidate> ranked_for(const RandomInstance& inst) {
    auto query = bubble::make_query(inst.query);
    bubble::PriorConfig priors = inst.config.priors;
    priors.theta = bubble::resolve_theta(priors, inst.corpus);
    auto candidates = bubble::retrieve_candidates(query, inst.corpus, inst.config.retrieval, priors);
    std::vector<bubble::ScoredCandidate> scored;
    for (const auto& c : candidates) scored.push_back(bubble::score_candidate(c, priors));
    return bubble::rank_candidates(std::move(scored));
}

// --------------------------------------------------------------------------
// Trace replayer: the audit contract. Re-derives every final decision from
// nothing but the recorded signals (scores, token counts, overlaps) plus the
// audit log's parameters, using its own ledgers. Returns mismatch messages;
// empty means the trace replays exactly.

struct ReplayCandidate {
    std::string chunk_id;
    std::string bucket;
    int token_count = 0;
    double score_final = 0.0;
    double pass1_overlap = 0.0;
    bool has_slack_stage = false;
    double slack_overlap = 0.0;
    std::string final_decision;
    std::string final_reason;
};

inline std::vector<std::string> replay_trace(const std::vector<bubble::TraceRecord>& records,
                                             const nlohmann::json& audit) {
    std::vector<std::string> mismatches;
    if (records.empty()) return mismatches;

    // Group records per candidate in rank order.
    std::vector<ReplayCandidate> candidates;
    std::map<std::string, size_t> index;
    for (const auto& rec : records) {
        if (!index.count(rec.chunk_id)) {
            index[rec.chunk_id] = candidates.size();
            ReplayCandidate c;
            c.chunk_id = rec.chunk_id;
            c.bucket = rec.bucket;
            c.token_count = rec.token_count;
            c.score_final = rec.score_final;
            c.final_decision = rec.final_decision;
            c.final_reason = rec.final_reason;
            candidates.push_back(c);
        }
        auto& c = candidates[index[rec.chunk_id]];
        if (rec.stage == "scoring") c.pass1_overlap = rec.step_details.value("overlap", 0.0);
        if (rec.stage == "slack") {
            c.has_slack_stage = true;
            c.slack_overlap = rec.step_details.value("overlap", 0.0);
        }
    }

    const int token_budget = audit.at("token_budget").get<int>();
    const int max_chunks = audit.at("max_chunks").get<int>();
    const double delta = audit.at("delta").get<double>();
    const double floor_v = audit.at("relevance_floor").get<double>();
    const bool gate_redundancy = audit.at("gates").at("redundancy").get<bool>();
    const bool gate_sections = audit.at("gates").at("section_budgets").get<bool>();
    const bool slack_pool = audit.at("slack_policy").get<std::string>() == "slack_pool";
    std::map<std::string, int> caps;
    if (audit.contains("section_caps")) {
        caps = audit.at("section_caps").get<std::map<std::string, int>>();
    }

    std::map<std::string, std::string> verdict;  // chunk_id -> expected reason
    std::map<std::string, int> spent;
    int total = 0, picked = 0;
    std::vector<const ReplayCandidate*> slack_queue;

    for (const auto& c : candidates) {
        if (c.score_final < floor_v) { verdict[c.chunk_id] = "low_relevance"; continue; }
        if (picked >= max_chunks) { verdict[c.chunk_id] = "selection_cap"; continue; }
        if (total + c.token_count > token_budget) { verdict[c.chunk_id] = "budget_exceeded"; continue; }
        if (gate_sections) {
            int cap = caps.count(c.bucket) ? caps.at(c.bucket) : 0;
            if (spent[c.bucket] + c.token_count > cap) {
                if (slack_pool) slack_queue.push_back(&c);
                else verdict[c.chunk_id] = "section_budget_exceeded";
                continue;
            }
        }
        if (gate_redundancy && c.pass1_overlap > 0.0 && c.pass1_overlap >= delta) {
            verdict[c.chunk_id] = "too_redundant";
            continue;
        }
        verdict[c.chunk_id] = "passed_all_gates";
        total += c.token_count;
        spent[c.bucket] += c.token_count;
        ++picked;
    }
    for (const auto* c : slack_queue) {
        if (picked >= max_chunks) { verdict[c->chunk_id] = "selection_cap"; continue; }
        if (total + c->token_count > token_budget) { verdict[c->chunk_id] = "budget_exceeded"; continue; }
        if (gate_redundancy && c->slack_overlap > 0.0 && c->slack_overlap >= delta) {
            verdict[c->chunk_id] = "too_redundant";
            continue;
        }
        verdict[c->chunk_id] = "passed_all_gates";
        total += c->token_count;
        spent[c->bucket] += c->token_count;
        ++picked;
    }

    for (const auto& c : candidates) {
        const std::string& expected = verdict[c.chunk_id];
        std::string expected_decision = expected == "passed_all_gates" ? "selected" : "rejected";
        if (c.final_decision != expected_decision || c.final_reason != expected) {
            mismatches.push_back(c.chunk_id + ": trace says " + c.final_decision + "/" +
                                 c.final_reason + ", replay says " + expected_decision + "/" +
                                 expected);
        }
    }
    return mismatches;
}

}  // namespace testsupport
