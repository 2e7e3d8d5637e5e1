#include "ranknosh/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ranknosh/errors.hpp"

namespace ranknosh {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least two observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("spearman: undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

void require_epoch(const BenchmarkTable& table, int epoch) {
  if (!table.has_common_epoch(epoch)) {
    throw BenchmarkError("epoch " + std::to_string(epoch) + " is not listed by every record");
  }
}

std::vector<double> accuracies_at(const BenchmarkTable& table, int epoch) {
  std::vector<double> out;
  out.reserve(table.size());
  for (const auto& r : table.records()) out.push_back(r.val_acc.at(epoch));
  return out;
}

// Record indices of the bottom `count` by accuracy at `epoch`, ties by key.
std::vector<std::size_t> bottom_set(const BenchmarkTable& table, int epoch, std::size_t count) {
  const auto acc = accuracies_at(table, epoch);
  std::vector<std::size_t> order(acc.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& recs = table.records();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (acc[a] != acc[b]) return acc[a] < acc[b];
    return recs[a].arch.key() < recs[b].arch.key();
  });
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

double survival_fraction(const BenchmarkTable& table, int epoch, double quantile) {
  if (!(quantile > 0.0 && quantile <= 1.0)) throw std::invalid_argument("survival_fraction: quantile must be in (0, 1]");
  require_epoch(table, epoch);
  const std::size_t n = table.size();
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(quantile * static_cast<double>(n))));
  const auto early = bottom_set(table, epoch, count);
  const auto final = bottom_set(table, table.max_epoch(), count);
  std::vector<std::size_t> both;
  std::set_intersection(early.begin(), early.end(), final.begin(), final.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(count);
}

double epoch_spearman(const BenchmarkTable& table, int epoch) {
  require_epoch(table, epoch);
  const auto a = accuracies_at(table, epoch);
  const auto b = accuracies_at(table, table.max_epoch());
  return spearman(a, b);
}

std::vector<std::pair<int, double>> spearman_trajectory(const BenchmarkTable& table) {
  std::vector<std::pair<int, double>> out;
  for (int e : table.common_epochs()) out.emplace_back(e, epoch_spearman(table, e));
  return out;
}

PriorCorrelation prior_correlation(const BenchmarkTable& table, const std::string& metric, double top_quantile) {
  if (!(top_quantile > 0.0 && top_quantile <= 1.0)) {
    throw std::invalid_argument("prior_correlation: top_quantile must be in (0, 1]");
  }
  const auto& recs = table.records();
  std::vector<double> prior;
  std::vector<double> final;
  prior.reserve(recs.size());
  final.reserve(recs.size());
  for (const auto& r : recs) {
    prior.push_back(table.prior_score(r.arch.key(), metric));
    final.push_back(r.val_acc.at(table.max_epoch()));
  }
  PriorCorrelation out;
  out.whole_space = spearman(prior, final);

  std::vector<std::size_t> order(recs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (final[a] != final[b]) return final[a] > final[b];
    return recs[a].arch.key() < recs[b].arch.key();
  });
  out.top_count = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(top_quantile * static_cast<double>(recs.size()))));
  out.top_count = std::min(out.top_count, recs.size());
  std::vector<double> tp;
  std::vector<double> tf;
  for (std::size_t i = 0; i < out.top_count; ++i) {
    tp.push_back(prior[order[i]]);
    tf.push_back(final[order[i]]);
  }
  out.top_subset = spearman(tp, tf);
  return out;
}

std::size_t final_rank(const BenchmarkTable& table, const ArchKey& key) {
  const double mine = table.final_val_acc(key);
  std::size_t better = 0;
  for (const auto& r : table.records()) {
    const double v = r.val_acc.at(table.max_epoch());
    if (v > mine || (v == mine && r.arch.key() < key)) ++better;
  }
  return better + 1;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / n);
  return out;
}

}  // namespace ranknosh
