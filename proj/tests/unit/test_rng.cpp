#include <doctest.h>

#include <set>

#include "ranknosh/rng.hpp"

using namespace ranknosh;

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42), d(42);
  for (int i = 0; i < 100; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("uniform_index stays in range and covers it") {
  Rng r(1);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = r.uniform_index(7);
    REQUIRE(v < 7);
    ++hits[v];
  }
  for (int h : hits) CHECK(h > 800);
  CHECK_THROWS(r.uniform_index(0));
}

TEST_CASE("uniform01 in [0,1) and normal moments") {
  Rng r(9);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("sample_indices draws distinct indices") {
  Rng r(3);
  auto idx = r.sample_indices(50, 50);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 50);
  CHECK(r.sample_indices(10, 0).empty());
  CHECK_THROWS(r.sample_indices(3, 4));
}

TEST_CASE("derive_seed separates streams and indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 10; ++s)
    for (std::uint64_t i = 0; i < 10; ++i) seen.insert(derive_seed(7, s, i));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}
