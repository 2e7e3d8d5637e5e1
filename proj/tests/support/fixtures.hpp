#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "ranknosh/arch_space.hpp"
#include "ranknosh/bench.hpp"
#include "ranknosh/nosh.hpp"
#include "ranknosh/rng.hpp"

namespace fixtures {

using namespace ranknosh;

// Table over `n` distinct nb201-like cells with monotone random curves and a
// random prior; every epoch 1..max_epoch is listed.
inline BenchmarkTable random_table(std::size_t n, int max_epoch, std::uint64_t seed,
                                   const SearchSpaceSpec& space = spaces::nb201_like()) {
  Rng rng(seed);
  std::vector<BenchRecord> recs;
  for (auto& a : subsample_universe(space, n, seed ^ 0x5eedULL)) {
    BenchRecord r;
    r.arch = a;
    std::vector<double> curve(static_cast<std::size_t>(max_epoch));
    double acc = rng.uniform(0.0, 0.2);
    for (auto& c : curve) {
      acc = std::min(1.0, acc + rng.uniform(0.0, 0.8 / max_epoch));
      c = acc;
    }
    r.val_acc = AccuracyCurve::dense(curve);
    r.test_acc = std::clamp(curve.back() + rng.uniform(-0.01, 0.01), 0.0, 1.0);
    r.prior_scores["p"] = rng.normal();
    recs.push_back(std::move(r));
  }
  return BenchmarkTable(space, max_epoch, {"p"}, std::move(recs));
}

// Random strictly increasing schedule ending at max_epoch.
inline Schedule random_schedule(Rng& rng, int max_epoch, int max_levels = 4) {
  const int levels = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(std::min(max_levels, max_epoch))));
  std::vector<int> cand;
  for (int e = 1; e < max_epoch; ++e) cand.push_back(e);
  rng.shuffle(cand);
  std::vector<int> epochs(cand.begin(), cand.begin() + (levels - 1));
  epochs.push_back(max_epoch);
  std::sort(epochs.begin(), epochs.end());
  std::vector<Ratio> ratios;
  for (int l = 0; l < levels; ++l) {
    const auto den = static_cast<std::int64_t>(2 + rng.uniform_index(4));
    const auto num = static_cast<std::int64_t>(1 + rng.uniform_index(static_cast<std::uint64_t>(den - 1)));
    ratios.emplace_back(num, den);
  }
  return Schedule{epochs, ratios};
}

inline std::vector<std::int64_t> level_sizes(const Pyramid& p) {
  std::vector<std::int64_t> out;
  for (int l = 0; l <= p.top_level(); ++l) out.push_back(static_cast<std::int64_t>(p.level(l).size()));
  return out;
}

}  // namespace fixtures
