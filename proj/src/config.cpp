#include "ranknosh/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "ranknosh/errors.hpp"
#include "ranknosh/json_io.hpp"

namespace ranknosh {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("'" + text + "' is not a valid number");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("'" + text + "' is not true/false");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + f(items[i]);
  return s;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      {"benchmark_path", [](RunConfig& c, const std::string& v) { c.benchmark_path = v; },
       [](const RunConfig& c) { return c.benchmark_path; }},
      {"max_pool_count", [](RunConfig& c, const std::string& v) { c.search.max_pool = parse_number<std::int64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.max_pool); }},
      {"initial_pool_count",
       [](RunConfig& c, const std::string& v) { c.search.initial_pool = parse_number<std::int64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.initial_pool); }},
      {"proposal_count",
       [](RunConfig& c, const std::string& v) { c.search.proposal_size = parse_number<std::int64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.proposal_size); }},
      {"schedule_epochs", [](RunConfig& c, const std::string& v) { c.search.schedule.epochs = parse_int_list(v); },
       [](const RunConfig& c) {
         return join<int>(c.search.schedule.epochs, [](const int& e) { return std::to_string(e); });
       }},
      {"move_ratios_fraction",
       [](RunConfig& c, const std::string& v) { c.search.schedule.move_ratios = parse_ratio_list(v); },
       [](const RunConfig& c) {
         return join<Ratio>(c.search.schedule.move_ratios, [](const Ratio& r) { return r.str(); });
       }},
      {"universe_count",
       [](RunConfig& c, const std::string& v) { c.search.universe_size = parse_number<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.universe_size); }},
      {"prior_metric", [](RunConfig& c, const std::string& v) { c.search.prior_metric = v; },
       [](const RunConfig& c) { return c.search.prior_metric; }},
      {"reference_count",
       [](RunConfig& c, const std::string& v) { c.search.reference_cap = parse_number<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.reference_cap); }},
      {"ranker_layers_count", [](RunConfig& c, const std::string& v) { c.search.ranker.layers = parse_number<int>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.ranker.layers); }},
      {"ranker_embedding_count",
       [](RunConfig& c, const std::string& v) { c.search.ranker.embedding_dim = parse_number<int>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.ranker.embedding_dim); }},
      {"ranker_hidden_count",
       [](RunConfig& c, const std::string& v) { c.search.ranker.hidden_dim = parse_number<int>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.ranker.hidden_dim); }},
      {"ranker_antisymmetric",
       [](RunConfig& c, const std::string& v) { c.search.ranker.antisymmetric = parse_bool(v); },
       [](const RunConfig& c) { return std::string(c.search.ranker.antisymmetric ? "true" : "false"); }},
      {"ranker_init_scale",
       [](RunConfig& c, const std::string& v) { c.search.ranker.init_scale = parse_number<double>(v); },
       [](const RunConfig& c) { return format_double(c.search.ranker.init_scale); }},
      {"train_batch_count", [](RunConfig& c, const std::string& v) { c.search.train.batch_size = parse_number<int>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.train.batch_size); }},
      {"train_epochs", [](RunConfig& c, const std::string& v) { c.search.train.epochs = parse_number<int>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.train.epochs); }},
      {"train_lr_init", [](RunConfig& c, const std::string& v) { c.search.train.lr_init = parse_number<double>(v); },
       [](const RunConfig& c) { return format_double(c.search.train.lr_init); }},
      {"train_lr_final", [](RunConfig& c, const std::string& v) { c.search.train.lr_final = parse_number<double>(v); },
       [](const RunConfig& c) { return format_double(c.search.train.lr_final); }},
      {"train_pairs_per_epoch_count",
       [](RunConfig& c, const std::string& v) { c.search.train.max_pairs_per_epoch = parse_number<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.search.train.max_pairs_per_epoch); }},
      {"random_budget_epochs",
       [](RunConfig& c, const std::string& v) { c.random_budget_epochs = parse_number<std::int64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.random_budget_epochs); }},
      {"prior_sample_count",
       [](RunConfig& c, const std::string& v) { c.prior_sample_count = parse_number<std::size_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.prior_sample_count); }},
      {"es_truncation_epochs", [](RunConfig& c, const std::string& v) { c.es_truncation_epochs = parse_number<int>(v); },
       [](const RunConfig& c) { return std::to_string(c.es_truncation_epochs); }},
      {"es_max_pool_count", [](RunConfig& c, const std::string& v) { c.es_max_pool = parse_number<std::int64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.es_max_pool); }},
      {"es_initial_pool_count",
       [](RunConfig& c, const std::string& v) { c.es_initial_pool = parse_number<std::int64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.es_initial_pool); }},
      {"es_proposal_count", [](RunConfig& c, const std::string& v) { c.es_proposal = parse_number<std::int64_t>(v); },
       [](const RunConfig& c) { return std::to_string(c.es_proposal); }},
  };
  return k;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<int>(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<Ratio> parse_ratio_list(const std::string& text) {
  std::vector<Ratio> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(Ratio::parse(item));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

SearchConfig RunConfig::es_search() const {
  SearchConfig s = search;
  s.max_pool = es_max_pool;
  s.initial_pool = es_initial_pool;
  s.proposal_size = es_proposal;
  return s;
}

RunConfig parse_config(std::istream& in, const std::string& source_name) {
  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::map<std::string, Entry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source_name + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!entries.emplace(key, Entry{value, lineno}).second) {
      throw ConfigError(where + ": key '" + key + "' repeated");
    }
  }

  RunConfig cfg;
  if (auto it = entries.find("preset"); it != entries.end()) {
    try {
      cfg.search = preset_config(it->second.value);
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ":" + std::to_string(it->second.line) + ": " + e.what());
    }
    entries.erase(it);
  }
  std::vector<std::string> unknown;
  for (const auto& [key, entry] : entries) {
    const Key* k = nullptr;
    for (const auto& cand : keys()) {
      if (key == cand.name) k = &cand;
    }
    if (!k) {
      unknown.push_back(key + " (line " + std::to_string(entry.line) + ")");
      continue;
    }
    try {
      k->set(cfg, entry.value);
    } catch (const ConfigError& e) {
      throw ConfigError(source_name + ":" + std::to_string(entry.line) + ": " + key + ": " + e.what());
    }
  }
  if (!unknown.empty()) {
    std::string msg = source_name + ": unknown config keys:";
    for (const auto& u : unknown) msg += " " + u;
    throw ConfigError(msg);
  }
  if (entries.count("schedule_epochs") && !entries.count("move_ratios_fraction")) {
    cfg.search.schedule.move_ratios = default_move_ratios(cfg.search.schedule.levels());
  }
  cfg.search.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.string());
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : keys()) j[k.name] = k.get(cfg);
  return j;
}

std::string config_to_text(const RunConfig& cfg) {
  std::string s;
  for (const auto& k : keys()) s += std::string(k.name) + " = " + k.get(cfg) + "\n";
  return s;
}

}  // namespace ranknosh
