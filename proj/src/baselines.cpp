#include "ranknosh/baselines.hpp"

#include <algorithm>
#include <stdexcept>

#include "ranknosh/errors.hpp"
#include "ranknosh/rng.hpp"

namespace ranknosh {

namespace {

void fill_pick(SearchResult& r, const BenchmarkTable& table, const ArchKey& key, double val) {
  const BenchRecord& rec = table.at(key);
  r.best_arch = rec.arch;
  r.best_val_acc = val;
  r.best_test_acc = rec.test_acc;
  r.best_final_val_acc = table.final_val_acc(key);
}

}  // namespace

SearchResult random_search(const BenchmarkTable& table, std::int64_t budget_epochs, std::uint64_t seed) {
  const int T = table.max_epoch();
  if (budget_epochs < T) {
    throw ConfigError("random search budget " + std::to_string(budget_epochs) + " is below one full training (" +
                      std::to_string(T) + " epochs)");
  }
  const auto n = static_cast<std::size_t>(budget_epochs / T);
  if (n > table.size()) {
    throw ConfigError("random search budget " + std::to_string(budget_epochs) + " needs " + std::to_string(n) +
                      " architectures; the benchmark has " + std::to_string(table.size()));
  }
  Rng rng(derive_seed(seed, stream::kRandomSearch));
  BudgetLedger ledger;
  SearchResult r;
  r.method = "random";
  const BenchRecord* best = nullptr;
  double best_val = 0.0;
  for (auto i : rng.sample_indices(table.size(), n)) {
    const BenchRecord& rec = table.records()[i];
    const double v = rec.val_acc.at(T);
    ledger.charge(rec.arch.key(), 0, T);
    PoolEntry e;
    e.arch = rec.arch;
    e.level = 1;
    e.trained_epochs = T;
    e.current_val_acc = v;
    r.pool_final.push_back(std::move(e));
    if (!best || v > best_val || (v == best_val && rec.arch.key() < best->arch.key())) {
      best = &rec;
      best_val = v;
    }
  }
  std::sort(r.pool_final.begin(), r.pool_final.end(),
            [](const PoolEntry& a, const PoolEntry& b) { return a.key() < b.key(); });
  fill_pick(r, table, best->arch.key(), best_val);
  r.total_budget_epochs = ledger.total_epochs();
  r.per_round_log.push_back({0, static_cast<std::int64_t>(n), ledger.total_epochs(), best_val, 0, 0.0});
  return r;
}

SearchResult prior_only(const BenchmarkTable& table, std::size_t sample_n, const std::string& metric,
                        std::uint64_t seed) {
  if (sample_n < 1) throw ConfigError("prior-only sample size must be >= 1");
  const auto n = std::min(sample_n, table.size());
  const PriorScorer scorer = table_prior_scorer(table, metric);
  Rng rng(derive_seed(seed, stream::kPriorOnly));
  const BenchRecord* best = nullptr;
  double best_prior = 0.0;
  for (auto i : rng.sample_indices(table.size(), n)) {
    const BenchRecord& rec = table.records()[i];
    const double p = scorer(rec.arch);
    if (!best || p > best_prior || (p == best_prior && rec.arch.key() < best->arch.key())) {
      best = &rec;
      best_prior = p;
    }
  }
  SearchResult r;
  r.method = "prior";
  // Nothing is trained; the reported validation accuracy is the final one.
  fill_pick(r, table, best->arch.key(), table.final_val_acc(best->arch.key()));
  PoolEntry pick;
  pick.arch = best->arch;
  pick.prior_score = best_prior;
  r.pool_final.push_back(std::move(pick));
  r.per_round_log.push_back({0, static_cast<std::int64_t>(n), 0, r.best_val_acc, 0, 0.0});
  return r;
}

SearchResult rank_es(const SearchConfig& cfg, const BenchmarkTable& table, int truncation_epoch) {
  if (truncation_epoch < 1 || truncation_epoch > table.max_epoch()) {
    throw ConfigError("truncation epoch " + std::to_string(truncation_epoch) + " outside [1, " +
                      std::to_string(table.max_epoch()) + "]");
  }
  SearchConfig es = cfg;
  es.schedule = Schedule{{truncation_epoch}, {Ratio(1, 1)}};
  es.allow_full_ratio = true;
  SearchResult r = run(es, table);
  r.method = truncation_epoch == table.max_epoch() ? "rank-full" : "rank-es";
  return r;
}

SearchResult rank_full(const SearchConfig& cfg, const BenchmarkTable& table) {
  return rank_es(cfg, table, table.max_epoch());
}

int equal_budget_truncation(const BenchmarkTable& table, std::int64_t budget_epochs, std::int64_t pool) {
  if (pool < 1) throw ConfigError("pool size must be >= 1");
  const auto t = static_cast<int>(std::min<std::int64_t>(budget_epochs / pool, table.max_epoch()));
  int best = 0;
  for (int e : table.common_epochs()) {
    if (e <= t) best = e;
  }
  if (best < 1) {
    throw ConfigError("budget " + std::to_string(budget_epochs) + " cannot train " + std::to_string(pool) +
                      " architectures for even one listed epoch");
  }
  return best;
}

}  // namespace ranknosh
