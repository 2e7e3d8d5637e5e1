#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "ranknosh/search.hpp"

namespace ranknosh {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything a CLI run reads from its config file.
struct RunConfig {
  SearchConfig search;
  std::string benchmark_path;
  std::int64_t random_budget_epochs = 0;  // 0 = the search's closed-form budget
  std::size_t prior_sample_count = 1000;
  int es_truncation_epochs = 0;           // 0 = equal budget with the search
  std::int64_t es_max_pool = 100;
  std::int64_t es_initial_pool = 16;
  std::int64_t es_proposal = 10;

  // Search config used by the early-stopping and full-training baselines.
  SearchConfig es_search() const;
};

// Flat "key = value" lines; '#' starts a comment. A `preset` key, wherever it
// appears, is applied first. Unknown or repeated keys throw ConfigError
// naming the key and line.
RunConfig parse_config(std::istream& in, const std::string& source_name = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Every key with its effective value.
nlohmann::json config_to_json(const RunConfig& cfg);
// The text form accepted by parse_config.
std::string config_to_text(const RunConfig& cfg);

std::vector<int> parse_int_list(const std::string& text);
std::vector<Ratio> parse_ratio_list(const std::string& text);

}  // namespace ranknosh
