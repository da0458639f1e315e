#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "bubble/bubble.hpp"
#include "bubble/retrieval.hpp"
#include "bubble/scoring.hpp"

namespace bubble {

// Every engine knob in one document: retrieval (K, prior pool, BM25 params),
// priors (section/keyword boosts, theta), bubble (budgets, delta, gates).
struct EngineConfig {
    RetrievalConfig retrieval;
    PriorConfig priors;
    BubbleConfig bubble;
};

EngineConfig default_config();

/// Strict parse: unknown keys are rejected with their dotted path; all bounds
/// are validated. Throws ConfigError.
EngineConfig config_from_json(const nlohmann::json& doc);

nlohmann::json config_to_json(const EngineConfig& cfg);

EngineConfig load_config(const std::filesystem::path& path);

/// Stable digest of the canonical JSON form, recorded in every manifest.
std::string config_digest(const EngineConfig& cfg);

}  // namespace bubble
