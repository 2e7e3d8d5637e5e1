#include <doctest.h>

#include <stdexcept>

#include "fixtures.hpp"
#include "ranknosh/analysis.hpp"

using namespace ranknosh;

namespace {

// O(n^2) oracle: Pearson correlation of midranks computed by pairwise counting.
double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + (equal + 1) / 2.0;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("spearman examples") {
  std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(spearman(x, x) == doctest::Approx(1.0));
  std::vector<double> rev{5, 4, 3, 2, 1};
  CHECK(spearman(x, rev) == doctest::Approx(-1.0));
  // d = (-1, 1, -1, 1, 0), sum d^2 = 4: 1 - 6*4 / (5*24) = 0.8.
  std::vector<double> y{2, 1, 4, 3, 5};
  CHECK(spearman(x, y) == doctest::Approx(0.8));
}

TEST_CASE("spearman rejects undefined inputs") {
  std::vector<double> c{1, 1, 1};
  std::vector<double> x{1, 2, 3};
  CHECK_THROWS_AS(spearman(c, x), std::invalid_argument);
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{2}), std::invalid_argument);
}

TEST_CASE("average ranks give ties their midrank") {
  std::vector<double> v{10, 20, 20, 5};
  CHECK(average_ranks(v) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("spearman agrees with the brute-force oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(49);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse values so ties are common.
      x[i] = static_cast<double>(rng.uniform_index(8));
      y[i] = rng.coin() ? x[i] + static_cast<double>(rng.uniform_index(3)) : static_cast<double>(rng.uniform_index(8));
    }
    bool cx = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    bool cy = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (cx || cy) continue;
    CHECK(std::abs(spearman(x, y) - brute_spearman(x, y)) < 1e-12);
  }
}

TEST_CASE("survival fraction") {
  auto t = fixtures::random_table(200, 30, 4);
  CHECK(survival_fraction(t, 30) == doctest::Approx(1.0));
  const double s = survival_fraction(t, 5);
  CHECK(s >= 0.0);
  CHECK(s <= 1.0);
  CHECK_THROWS(survival_fraction(t, 31));
}

TEST_CASE("survival on a sparse benchmark only at listed epochs") {
  SyntheticOptions o;
  o.sparse_epochs = {4, 12, 36, 108};
  auto t = generate_synthetic(spaces::nb101_like(), 200, 0.7, 0.01, 108, 3, o);
  CHECK_NOTHROW(survival_fraction(t, 12));
  CHECK_THROWS(survival_fraction(t, 13));
  auto traj = spearman_trajectory(t);
  REQUIRE(traj.size() == 4);
  CHECK(traj.back().first == 108);
  CHECK(traj.back().second == doctest::Approx(1.0));
}

TEST_CASE("trajectory ends at one") {
  auto t = fixtures::random_table(100, 12, 6);
  auto traj = spearman_trajectory(t);
  REQUIRE(traj.size() == 12);
  CHECK(traj.front().first == 1);
  CHECK(traj.back().second == doctest::Approx(1.0));
}

TEST_CASE("final rank and prior correlation") {
  auto t = fixtures::random_table(100, 10, 7);
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t.records()[i].val_acc.at(10) > t.records()[best].val_acc.at(10)) best = i;
  }
  CHECK(final_rank(t, t.records()[best].arch.key()) == 1);
  auto pc = prior_correlation(t, "p", 0.1);
  CHECK(pc.top_count == 10);
  CHECK(std::abs(pc.whole_space) <= 1.0);
}

TEST_CASE("mean and population std") {
  std::vector<double> v{1, 2, 3, 4};
  auto ms = mean_std(v);
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.std == doctest::Approx(std::sqrt(1.25)));
}
