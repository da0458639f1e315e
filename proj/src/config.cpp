#include "bubble/config.hpp"

#include <fstream>
#include <set>

#include "bubble/errors.hpp"
#include "bubble/util.hpp"

namespace bubble {

EngineConfig default_config() {
    return EngineConfig{};
}

namespace {

void require_object(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("config: '" + path + "' must be an object");
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& path) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("config: unknown key '" + (path.empty() ? it.key() : path + "." + it.key()) + "'");
        }
    }
}

double number_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError("config: '" + path + "' must be a number");
    return j.get<double>();
}

int int_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError("config: '" + path + "' must be an integer");
    return j.get<int>();
}

bool bool_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError("config: '" + path + "' must be a boolean");
    return j.get<bool>();
}

std::map<std::string, double> boost_map_at(const nlohmann::json& j, const std::string& path) {
    require_object(j, path);
    std::map<std::string, double> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        out[it.key()] = number_at(it.value(), path + "." + it.key());
    }
    return out;
}

void parse_retrieval(const nlohmann::json& j, RetrievalConfig& cfg) {
    require_object(j, "retrieval");
    reject_unknown(j, {"k_lexical", "m_prior_pool", "bm25_k1", "bm25_b"}, "retrieval");
    if (j.contains("k_lexical")) cfg.k_lexical = int_at(j["k_lexical"], "retrieval.k_lexical");
    if (j.contains("m_prior_pool")) cfg.m_prior_pool = int_at(j["m_prior_pool"], "retrieval.m_prior_pool");
    if (j.contains("bm25_k1")) cfg.bm25_k1 = number_at(j["bm25_k1"], "retrieval.bm25_k1");
    if (j.contains("bm25_b")) cfg.bm25_b = number_at(j["bm25_b"], "retrieval.bm25_b");
    if (cfg.k_lexical < 1) throw ConfigError("config: retrieval.k_lexical must be >= 1");
    if (cfg.m_prior_pool < 0) throw ConfigError("config: retrieval.m_prior_pool must be >= 0");
    if (!(cfg.bm25_k1 > 0)) throw ConfigError("config: retrieval.bm25_k1 must be > 0");
    if (cfg.bm25_b < 0 || cfg.bm25_b > 1) throw ConfigError("config: retrieval.bm25_b must be in [0,1]");
}

void parse_priors(const nlohmann::json& j, PriorConfig& cfg) {
    require_object(j, "priors");
    reject_unknown(j, {"section_boosts", "keyword_boosts", "theta"}, "priors");
    if (j.contains("section_boosts")) cfg.section_boosts = boost_map_at(j["section_boosts"], "priors.section_boosts");
    if (j.contains("keyword_boosts")) cfg.keyword_boosts = boost_map_at(j["keyword_boosts"], "priors.keyword_boosts");
    if (j.contains("theta")) {
        const auto& t = j["theta"];
        if (t.is_string()) {
            if (t.get<std::string>() != "corpus-median") {
                throw ConfigError("config: priors.theta must be a positive integer or \"corpus-median\"");
            }
            cfg.theta.reset();
        } else {
            int v = int_at(t, "priors.theta");
            if (v < 1) throw ConfigError("config: priors.theta must be >= 1");
            cfg.theta = v;
        }
    }
}

void parse_bubble(const nlohmann::json& j, BubbleConfig& cfg) {
    require_object(j, "bubble");
    reject_unknown(j,
                   {"token_budget", "max_chunks", "delta", "slack_policy", "section_fractions",
                    "relevance_floor", "gates"},
                   "bubble");
    if (j.contains("token_budget")) cfg.token_budget = int_at(j["token_budget"], "bubble.token_budget");
    if (j.contains("max_chunks")) cfg.max_chunks = int_at(j["max_chunks"], "bubble.max_chunks");
    if (j.contains("delta")) cfg.delta = number_at(j["delta"], "bubble.delta");
    if (j.contains("relevance_floor")) cfg.relevance_floor = number_at(j["relevance_floor"], "bubble.relevance_floor");
    if (j.contains("slack_policy")) {
        const auto& p = j["slack_policy"];
        if (!p.is_string()) throw ConfigError("config: bubble.slack_policy must be a string");
        std::string s = p.get<std::string>();
        if (s == "strict") cfg.slack_policy = SlackPolicy::strict;
        else if (s == "slack_pool") cfg.slack_policy = SlackPolicy::slack_pool;
        else throw ConfigError("config: bubble.slack_policy must be \"strict\" or \"slack_pool\"");
    }
    if (j.contains("section_fractions")) {
        const auto& f = j["section_fractions"];
        if (f.is_string()) {
            if (f.get<std::string>() != "uniform") {
                throw ConfigError("config: bubble.section_fractions must be \"uniform\" or a bucket->fraction object");
            }
            cfg.section_fractions.reset();
        } else {
            require_object(f, "bubble.section_fractions");
            std::map<std::string, double> fractions;
            double sum = 0.0;
            for (auto it = f.begin(); it != f.end(); ++it) {
                double v = number_at(it.value(), "bubble.section_fractions." + it.key());
                if (v < 0 || v > 1) {
                    throw ConfigError("config: bubble.section_fractions." + it.key() + " must be in [0,1]");
                }
                fractions[it.key()] = v;
                sum += v;
            }
            if (sum > 1.0 + 1e-9) throw FractionSumExceedsOne(sum);
            cfg.section_fractions = std::move(fractions);
        }
    }
    if (j.contains("gates")) {
        const auto& g = j["gates"];
        require_object(g, "bubble.gates");
        reject_unknown(g, {"structure", "redundancy", "section_budgets"}, "bubble.gates");
        if (g.contains("structure")) cfg.gates.structure = bool_at(g["structure"], "bubble.gates.structure");
        if (g.contains("redundancy")) cfg.gates.redundancy = bool_at(g["redundancy"], "bubble.gates.redundancy");
        if (g.contains("section_budgets")) cfg.gates.section_budgets = bool_at(g["section_budgets"], "bubble.gates.section_budgets");
    }
    if (cfg.token_budget < 1) throw ConfigError("config: bubble.token_budget must be >= 1");
    if (cfg.max_chunks < 1) throw ConfigError("config: bubble.max_chunks must be >= 1");
    if (cfg.delta < 0 || cfg.delta > 1) throw ConfigError("config: bubble.delta must be in [0,1]");
}

}  // namespace

EngineConfig config_from_json(const nlohmann::json& doc) {
    require_object(doc, "");
    reject_unknown(doc, {"retrieval", "priors", "bubble"}, "");
    EngineConfig cfg;
    if (doc.contains("retrieval")) parse_retrieval(doc["retrieval"], cfg.retrieval);
    if (doc.contains("priors")) parse_priors(doc["priors"], cfg.priors);
    if (doc.contains("bubble")) parse_bubble(doc["bubble"], cfg.bubble);
    return cfg;
}

nlohmann::json config_to_json(const EngineConfig& cfg) {
    nlohmann::json doc;
    doc["retrieval"] = {{"k_lexical", cfg.retrieval.k_lexical},
                        {"m_prior_pool", cfg.retrieval.m_prior_pool},
                        {"bm25_k1", cfg.retrieval.bm25_k1},
                        {"bm25_b", cfg.retrieval.bm25_b}};
    nlohmann::json theta;
    if (cfg.priors.theta.has_value()) theta = *cfg.priors.theta;
    else theta = "corpus-median";
    doc["priors"] = {{"section_boosts", cfg.priors.section_boosts},
                     {"keyword_boosts", cfg.priors.keyword_boosts},
                     {"theta", theta}};
    nlohmann::json fractions;
    if (cfg.bubble.section_fractions.has_value()) fractions = *cfg.bubble.section_fractions;
    else fractions = "uniform";
    doc["bubble"] = {{"token_budget", cfg.bubble.token_budget},
                     {"max_chunks", cfg.bubble.max_chunks},
                     {"delta", cfg.bubble.delta},
                     {"slack_policy", cfg.bubble.slack_policy == SlackPolicy::strict ? "strict" : "slack_pool"},
                     {"section_fractions", fractions},
                     {"relevance_floor", cfg.bubble.relevance_floor},
                     {"gates", {{"structure", cfg.bubble.gates.structure},
                                {"redundancy", cfg.bubble.gates.redundancy},
                                {"section_budgets", cfg.bubble.gates.section_budgets}}}};
    return doc;
}

EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + path.string() + " (" + e.what() + ")");
    }
    return config_from_json(doc);
}

std::string config_digest(const EngineConfig& cfg) {
    return to_hex16(fnv1a64(config_to_json(cfg).dump()));
}

}  // namespace bubble
