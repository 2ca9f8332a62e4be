#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "classy/harness.hpp"

namespace classy {

nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const ReplicateResult& result);
nlohmann::json to_json(const ExperimentReport& report);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::json& j);

/// One row per method: method, median test score, best-single median, p-value,
/// win, unique win, median size, median best k.
std::string summary_csv(const ExperimentReport& report);

/// Best single vs. each method for one evaluated pool.
std::string comparison_csv(const ReplicateResult& result);

/// Applies one `key = value` setting. Keys are ExperimentConfig field names.
/// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Reads a flat key-value file ('#' starts a comment) into `config`.
void load_config_file(ExperimentConfig& config, const std::filesystem::path& path);

std::vector<int> parse_int_list(std::string_view text);
std::vector<Method> parse_method_list(std::string_view text);

} // namespace classy
