#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "model.hpp"

namespace predisso {

inline constexpr const char* kConfigSchema = "predissonance-config/1";
inline constexpr const char* kReportSchema = "predissonance-report/1";

nlohmann::json config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);
ModelConfig config_from_string(const std::string& text);
ModelConfig config_from_file(const std::string& path);

// Dotted-key override on the JSON form, e.g. "h=0.3", "distortion.theta=0.2",
// "cutoff.nu=0". Unknown keys are rejected before any computation.
void apply_override(nlohmann::json& j, const std::string& key, const std::string& value);

std::string canonical_config_string(const ModelConfig& cfg);
std::string config_hash(const ModelConfig& cfg);  // 16 hex digits (FNV-1a 64)

std::string fnv1a_hex(const std::string& data);

// write-with-rename so partially written outputs are never observed
void atomic_write(const std::string& path, const std::string& content);

}  // namespace predisso
