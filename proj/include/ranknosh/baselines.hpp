#pragma once

#include <cstdint>
#include <string>

#include "ranknosh/bench.hpp"
#include "ranknosh/search.hpp"

namespace ranknosh {

// Trains floor(budget / max_epoch) distinct benchmark architectures fully and
// returns the best by validation accuracy. Requires budget >= max_epoch.
SearchResult random_search(const BenchmarkTable& table, std::int64_t budget_epochs, std::uint64_t seed);

// Zero-budget pick: the best prior score among sample_n distinct benchmark
// architectures.
SearchResult prior_only(const BenchmarkTable& table, std::size_t sample_n, const std::string& metric,
                        std::uint64_t seed);

// The search loop with NOSH replaced by uniform early stopping: every pool
// member trains exactly `truncation_epoch` epochs. cfg.schedule is ignored.
SearchResult rank_es(const SearchConfig& cfg, const BenchmarkTable& table, int truncation_epoch);

// rank_es at the benchmark's max_epoch.
SearchResult rank_full(const SearchConfig& cfg, const BenchmarkTable& table);

// Truncation epoch giving rank_es the same budget as `budget_epochs` on a
// pool of `pool` architectures: floor(budget / pool), snapped down to a
// listed epoch on sparse benchmarks.
int equal_budget_truncation(const BenchmarkTable& table, std::int64_t budget_epochs, std::int64_t pool);

}  // namespace ranknosh
