#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ranknosh/bench.hpp"
#include "ranknosh/nosh.hpp"
#include "ranknosh/ranker.hpp"

namespace ranknosh {

struct SearchConfig {
  std::int64_t max_pool = 300;      // M, counting level-0 residents
  std::int64_t initial_pool = 48;   // K_init
  std::int64_t proposal_size = 30;  // K
  Schedule schedule{{10, 50, 100, 200}, default_move_ratios(4)};
  // Candidates drawn from the benchmark records; 0 = every record.
  std::size_t universe_size = 0;
  std::string prior_metric = "mag_synth";
  std::uint64_t seed = 0;
  std::size_t reference_cap = 64;
  RankerConfig ranker;  // num_ops is taken from the benchmark
  TrainConfig train;    // seed is re-derived every round
  // Lets a single-level schedule promote every arrival (early-stopping ablation).
  bool allow_full_ratio = false;

  // Structural checks that need no benchmark.
  void validate() const;
  void validate_against(const BenchmarkTable& table) const;
};

// Named presets: "c10-12ep", "c100-200ep", "imagenet16-200ep", "nb101-sparse",
// "darts-like".
SearchConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

// Benchmark shape each preset expects: space, max_epoch and, for
// sparse benchmarks, the listed epochs.
struct PresetBench {
  SearchSpaceSpec space;
  int max_epoch;
  std::vector<int> sparse_epochs;
};
PresetBench preset_bench(const std::string& name);

struct RoundLog {
  int round = 0;
  std::int64_t pool_size = 0;
  std::int64_t budget_so_far = 0;
  double best_so_far = 0.0;
  std::size_t pairs = 0;
  double final_loss = 0.0;  // last epoch of the round's ranker fit; 0 for round 0
};

struct SearchResult {
  std::string method;
  Architecture best_arch;
  double best_val_acc = 0.0;         // at the epoch the pick was trained to
  double best_test_acc = 0.0;
  double best_final_val_acc = 0.0;   // evaluation-only lookup, not charged
  std::int64_t total_budget_epochs = 0;
  int rounds = 0;
  std::vector<PoolEntry> pool_final;  // level ascending, then key
  std::vector<RoundLog> per_round_log;
  std::vector<std::vector<double>> loss_traces;  // one per update round
};

// Level-0 arrivals per round: K_init, then min(K, M - pool) until the pool holds M.
std::vector<std::int64_t> arrival_schedule(const SearchConfig& cfg);

// Exact ledger total of a run, from a symbolic replay of the promotion counts.
std::int64_t closed_form_budget(const SearchConfig& cfg);

// Budget quoted for a preset's pool and schedule, when cfg matches one
// (200-epoch presets share 5550). Used to flag gaps to the closed form.
std::optional<std::int64_t> reference_budget(const SearchConfig& cfg);

// RANK-NOSH. Uses the benchmark's prior metric unless `scorer` is given.
// Throws ContractViolation if the ledger disagrees with closed_form_budget.
SearchResult run(const SearchConfig& cfg, const BenchmarkTable& table, const PriorScorer& scorer = {});

// Best trained entry by current validation accuracy, ties by key.
const PoolEntry& select_best(const Pyramid& pyramid);

}  // namespace ranknosh
