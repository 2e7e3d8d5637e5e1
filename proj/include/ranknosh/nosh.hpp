#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ranknosh/arch_space.hpp"
#include "ranknosh/bench.hpp"

namespace ranknosh {

// Exact rational move ratio. Promotion counts are ceilings of ratio * count,
// so ratios are kept as integers rather than binary floats.
class Ratio {
 public:
  constexpr Ratio() = default;
  // Throws std::invalid_argument unless 0 < num/den <= 1.
  Ratio(std::int64_t num, std::int64_t den);
  // "1/3", "0.5", "1".
  static Ratio parse(const std::string& text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  // ceil(ratio * n) for n >= 0.
  std::int64_t ceil_mul(std::int64_t n) const;
  std::string str() const;

  friend bool operator==(const Ratio&, const Ratio&) = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

// Per-level epoch targets E = (e(1) .. e(N)) and move ratios r(0) .. r(N-1).
struct Schedule {
  std::vector<int> epochs;
  std::vector<Ratio> move_ratios;

  int levels() const { return static_cast<int>(epochs.size()); }
  // Epochs trained by a resident of `level` (0 for level 0).
  int epoch_at(int level) const { return level == 0 ? 0 : epochs[static_cast<std::size_t>(level - 1)]; }

  // Throws ConfigError when epochs are not strictly increasing and positive,
  // when the ratio count differs from the level count, or when a ratio is 1
  // while allow_full_ratio is false.
  void validate(bool allow_full_ratio = false) const;
  // Also checks the final epoch against max_epoch and, for sparse
  // benchmarks, that every epoch is listed.
  void validate_against(const BenchmarkTable& table, bool allow_full_ratio = false) const;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

// The default move ratios: 1/3 out of level 0, 1/2 elsewhere.
std::vector<Ratio> default_move_ratios(int levels);

struct PoolEntry {
  Architecture arch;
  int level = 0;
  int trained_epochs = 0;
  std::optional<double> current_val_acc;
  double prior_score = 0.0;
  int arrival_round = 0;

  const ArchKey& key() const { return arch.key(); }
};

// Leveled candidate pool. Level l residents are trained exactly e(l) epochs;
// level 0 residents are untrained and carry only a prior score.
class Pyramid {
 public:
  explicit Pyramid(Schedule schedule);

  const Schedule& schedule() const { return schedule_; }
  int top_level() const { return schedule_.levels(); }
  const std::vector<PoolEntry>& level(int l) const { return levels_[static_cast<std::size_t>(l)]; }
  std::size_t size() const;
  // Residents of levels >= l.
  std::int64_t count_at_or_above(int l) const;
  bool contains(const ArchKey& key) const;

  // New untrained arrival at level 0. Throws ContractViolation on a duplicate.
  void insert(Architecture arch, double prior_score, int arrival_round);

  // Every trained entry (levels >= 1), level ascending then key ascending.
  std::vector<const PoolEntry*> trained() const;

  // Throws ContractViolation if a structural invariant is broken.
  void check_invariants() const;

 private:
  friend void nosh_pass(Pyramid&, BudgetLedger&, const BenchmarkTable&, std::int64_t);
  friend Pyramid read_checkpoint(std::istream&, BudgetLedger&);

  Schedule schedule_;
  std::vector<std::vector<PoolEntry>> levels_;
};

// Residents that must sit above `level` once a pass has processed it:
// ceil(r(level) * at_or_above). On a fresh pyramid holding only k arrivals this
// reduces to the classic cascade k <- ceil(r * k).
std::int64_t promotion_target(const Schedule& schedule, int level, std::int64_t at_or_above);

// Entries promoted out of `level`: the shortfall against promotion_target,
// clamped to [0, resident].
std::int64_t promote_count(const Schedule& schedule, int level, std::int64_t at_or_above, std::int64_t above,
                           std::int64_t resident);

// One NOSH pass after k arrivals were inserted at level 0. For l = 0..N-1,
// all residents of level l (old and new) are ranked by score, prior at level 0
// and current validation accuracy above, ties by canonical key; the
// promote_count best are trained from e(l) to e(l+1), charged to the ledger
// and moved up.
void nosh_pass(Pyramid& pyramid, BudgetLedger& ledger, const BenchmarkTable& oracle, std::int64_t k);

struct ContextEntry {
  const PoolEntry* entry;
  int level;
  double score_used;
};

// Snapshot ordered by level ascending then canonical key.
std::vector<ContextEntry> pairwise_context(const Pyramid& pyramid);

// Crash-resume checkpoint in the JSON Lines conventions of the benchmark format.
void write_checkpoint(const Pyramid& pyramid, const BudgetLedger& ledger, std::ostream& out);
Pyramid read_checkpoint(std::istream& in, BudgetLedger& ledger);

}  // namespace ranknosh
