#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ranknosh/bench.hpp"

namespace ranknosh {

// Ranks 1..n with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank correlation (Pearson correlation of average ranks).
// Throws std::invalid_argument on size mismatch, n < 2, or a constant input.
double spearman(std::span<const double> x, std::span<const double> y);

// Fraction of architectures in the bottom `quantile` at `epoch` that are also
// in the bottom `quantile` at max_epoch. Bottom sets hold floor(quantile * n)
// architectures (at least one), ties broken by canonical key.
double survival_fraction(const BenchmarkTable& table, int epoch, double quantile = 0.5);

// Spearman correlation between accuracies at `epoch` and at max_epoch.
double epoch_spearman(const BenchmarkTable& table, int epoch);

// One (epoch, spearman vs final) entry per listed epoch.
std::vector<std::pair<int, double>> spearman_trajectory(const BenchmarkTable& table);

struct PriorCorrelation {
  double whole_space = 0.0;
  double top_subset = 0.0;
  std::size_t top_count = 0;
};

// Spearman between a prior metric and final validation accuracy, over the
// whole table and over the top `top_quantile` architectures by final accuracy.
PriorCorrelation prior_correlation(const BenchmarkTable& table, const std::string& metric,
                                   double top_quantile = 0.01);

// 1-based rank of `key` by final validation accuracy (1 = best), ties broken
// by canonical key. Used to express "within the top 1%".
std::size_t final_rank(const BenchmarkTable& table, const ArchKey& key);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
MeanStd mean_std(std::span<const double> values);

}  // namespace ranknosh
