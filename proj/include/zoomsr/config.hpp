#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "zoomsr/distill.hpp"
#include "zoomsr/networks.hpp"
#include "zoomsr/train.hpp"

namespace zoomsr::config {

inline constexpr const char* kSeedEnv = "ZOOMSR_SEED";

/// Parses `section.key = value` lines ('#' comments, blank lines ignored) into nested JSON.
/// Values become booleans, integers or reals when they parse as such, strings otherwise
/// (surrounding double quotes are stripped). Duplicate keys are an error.
nlohmann::json parse(const std::string& text, const std::string& origin = "<string>");
nlohmann::json load(const std::filesystem::path& path);

/// If ZOOMSR_SEED is set, overrides every `*.seed` key the program reads.
void apply_seed_override(nlohmann::json& cfg);

/// Sub-object or an empty object when absent.
const nlohmann::json& section(const nlohmann::json& cfg, const std::string& name);

train::TrainConfig train_config(const nlohmann::json& cfg);
net::GeneratorConfig generator_config(const nlohmann::json& cfg, const std::string& name = "generator");
net::DiscriminatorConfig discriminator_config(const nlohmann::json& cfg, const train::TrainConfig& t);
net::ExtractorConfig extractor_config(const nlohmann::json& cfg);
distill::DistillConfig distill_config(const nlohmann::json& cfg);

}  // namespace zoomsr::config
