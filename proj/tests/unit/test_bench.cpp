#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "ranknosh/analysis.hpp"
#include "ranknosh/bench.hpp"
#include "ranknosh/errors.hpp"
#include "ranknosh/json_io.hpp"

using namespace ranknosh;

namespace {

std::string to_text(const BenchmarkTable& t) {
  std::ostringstream os;
  write_benchmark(t, os);
  return os.str();
}

BenchmarkTable from_text(const std::string& s) {
  std::istringstream is(s);
  return parse_benchmark(is, "mem");
}

// Replaces the first occurrence of `from` in line `line_no` (0 = header).
std::string edit_line(const std::string& text, int line_no, const std::string& from, const std::string& to) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  for (int i = 0; std::getline(is, line); ++i) {
    if (i == line_no) {
      auto pos = line.find(from);
      REQUIRE(pos != std::string::npos);
      line.replace(pos, from.size(), to);
    }
    os << line << "\n";
  }
  return os.str();
}

}  // namespace

TEST_CASE("dense curves index epochs from one") {
  auto c = AccuracyCurve::dense({0.1, 0.2, 0.3});
  CHECK(c.at(1) == 0.1);
  CHECK(c.at(3) == 0.3);
  CHECK_THROWS_AS(c.at(0), BenchmarkError);
  CHECK_THROWS_AS(c.at(4), BenchmarkError);
}

TEST_CASE("sparse curves answer only listed epochs") {
  auto c = AccuracyCurve::sparse({{4, 0.5}, {12, 0.6}, {36, 0.7}, {108, 0.8}});
  CHECK(c.at(12) == 0.6);
  CHECK_THROWS_AS(c.at(13), BenchmarkError);
  CHECK(c.epochs() == std::vector<int>{4, 12, 36, 108});
}

TEST_CASE("val_acc lookups") {
  auto t = fixtures::random_table(30, 20, 1);
  const auto& r = t.records()[3];
  CHECK(t.val_acc(r.arch, 20) == t.final_val_acc(r.arch.key()));
  CHECK(t.val_acc(r.arch, 7) == r.val_acc.dense_values()[6]);
  CHECK_THROWS_AS(t.val_acc(r.arch, 21), BenchmarkError);
  CHECK_THROWS_AS(t.val_acc(r.arch, 0), BenchmarkError);
  auto other = sample(spaces::nb201_like(), 200, 99);
  for (const auto& a : other) {
    if (!t.contains(a.key())) {
      CHECK_THROWS_AS(t.val_acc(a, 1), BenchmarkError);
      break;
    }
  }
}

TEST_CASE("constant curves give the same accuracy at every epoch") {
  auto a = sample(spaces::nb201_like(), 1, 1)[0];
  BenchRecord r{a, AccuracyCurve::dense(std::vector<double>(15, 0.42)), 0.4, {}};
  BenchmarkTable t(spaces::nb201_like(), 15, {}, {r});
  for (int e = 1; e <= 15; ++e) CHECK(t.val_acc(a, e) == 0.42);
}

TEST_CASE("benchmark save and load is the identity") {
  auto t = generate_synthetic(spaces::nb201_like(), 300, 0.7, 0.01, 50, 4);
  CHECK(from_text(to_text(t)) == t);
  const auto path = std::filesystem::temp_directory_path() / "ranknosh_bench_roundtrip.jsonl";
  save_benchmark(t, path);
  CHECK(load_benchmark(path) == t);
  CHECK(file_checksum(path) == file_checksum(path));
  std::filesystem::remove(path);

  SyntheticOptions sparse;
  sparse.sparse_epochs = {4, 12, 36, 108};
  auto s = generate_synthetic(spaces::nb101_like(), 100, 0.7, 0.01, 108, 2, sparse);
  CHECK(s.is_sparse());
  CHECK(s.common_epochs() == std::vector<int>{4, 12, 36, 108});
  CHECK(from_text(to_text(s)) == s);
}

TEST_CASE("load errors cite the offending record") {
  auto t = fixtures::random_table(5, 10, 2);
  const auto text = to_text(t);
  const auto key = t.records()[1].arch.key().hex();

  auto expect_error = [](const std::string& bad, const std::string& needle) {
    try {
      from_text(bad);
      FAIL("expected a load error");
    } catch (const BenchmarkError& e) {
      const std::string msg = e.what();
      CHECK_MESSAGE(msg.find(needle) != std::string::npos, msg);
    }
  };

  // A curve one entry short.
  {
    std::istringstream is(text);
    std::string header, rec0, rec1;
    std::getline(is, header);
    std::getline(is, rec0);
    std::getline(is, rec1);
    auto j = nlohmann::json::parse(rec1);
    j["val_acc"].erase(j["val_acc"].size() - 1);
    std::string rest((std::istreambuf_iterator<char>(is)), {});
    expect_error(header + "\n" + rec0 + "\n" + j.dump() + "\n" + rest, "record 1");
    expect_error(header + "\n" + rec0 + "\n" + j.dump() + "\n" + rest, "mem:3");
  }
  // Accuracy out of range.
  {
    std::istringstream is(text);
    std::string header, rec0;
    std::getline(is, header);
    std::getline(is, rec0);
    auto j = nlohmann::json::parse(rec0);
    j["test_acc"] = 1.5;
    std::string rest((std::istreambuf_iterator<char>(is)), {});
    expect_error(header + "\n" + j.dump() + "\n" + rest, "record 0");
  }
  // Duplicate record.
  {
    std::istringstream is(text);
    std::string header, rec0;
    std::getline(is, header);
    std::getline(is, rec0);
    expect_error(text + rec0 + "\n", "duplicate");
  }
  expect_error(edit_line(text, 0, "ranknosh-bench", "other"), "ranknosh-bench");
  expect_error("", "empty");
  expect_error(text + "{not json\n", "mem:7");
  (void)key;
}

TEST_CASE("a 199-entry curve against max_epoch 200 is rejected") {
  auto a = sample(spaces::nb201_like(), 1, 3)[0];
  BenchRecord r{a, AccuracyCurve::dense(std::vector<double>(199, 0.5)), 0.5, {}};
  try {
    BenchmarkTable t(spaces::nb201_like(), 200, {}, {r});
    FAIL("expected an error");
  } catch (const BenchmarkError& e) {
    CHECK(std::string(e.what()).find(a.key().hex()) != std::string::npos);
  }
}

TEST_CASE("ledger charges are additive and contiguous") {
  BudgetLedger l;
  ArchKey a(0, 1), b(0, 2);
  l.charge(a, 0, 10);
  l.charge(a, 10, 50);
  CHECK(l.total_epochs() == 50);
  CHECK(l.frontier(a) == 50);
  CHECK_THROWS_AS(l.charge(b, 5, 20), ContractViolation);
  l.charge(b, 0, 10);
  CHECK_THROWS_AS(l.charge(b, 5, 20), ContractViolation);
  CHECK_THROWS_AS(l.charge(b, 10, 10), ContractViolation);
  CHECK(l.total_epochs() == 60);
  CHECK(l.recompute_total() == 60);
}

TEST_CASE("ledger total is path independent") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    // Per-key interval chains, then two different valid interleavings.
    std::vector<std::vector<std::pair<int, int>>> chains(6);
    std::int64_t expected = 0;
    for (std::size_t k = 0; k < chains.size(); ++k) {
      int at = 0;
      const int steps = 1 + static_cast<int>(rng.uniform_index(4));
      for (int s = 0; s < steps; ++s) {
        const int to = at + 1 + static_cast<int>(rng.uniform_index(20));
        chains[k].push_back({at, to});
        expected += to - at;
        at = to;
      }
    }
    auto replay = [&](std::uint64_t seed) {
      Rng order(seed);
      std::vector<std::size_t> next(chains.size(), 0);
      BudgetLedger l;
      std::size_t left = 0;
      for (const auto& c : chains) left += c.size();
      while (left > 0) {
        const auto k = order.uniform_index(chains.size());
        if (next[k] == chains[k].size()) continue;
        auto [f, t] = chains[k][next[k]++];
        l.charge(ArchKey(0, k), f, t);
        --left;
      }
      return l.total_epochs();
    };
    CHECK(replay(trial) == expected);
    CHECK(replay(trial + 1000) == expected);
  }
}

TEST_CASE("noise-free synthetic with identical time constants never crosses") {
  SyntheticOptions opts;
  opts.quality_noise = 0.25;
  auto t = generate_synthetic(spaces::nb201_like(), 400, 1.0, 0.0, 40, 3, opts);
  for (int e = 1; e <= 40; ++e) CHECK(epoch_spearman(t, e) == doctest::Approx(1.0));
  CHECK(survival_fraction(t, 2) == doctest::Approx(1.0));
}

TEST_CASE("synthetic curves are monotone without noise") {
  auto t = generate_synthetic(spaces::nb201_like(), 300, 0.7, 0.0, 30, 9);
  for (const auto& r : t.records()) {
    const auto& v = r.val_acc.dense_values();
    for (std::size_t i = 1; i < v.size(); ++i) REQUIRE(v[i] >= v[i - 1]);
  }
}

TEST_CASE("synthetic calibration hits its rank-stability and prior targets") {
  auto t = generate_synthetic(spaces::nb201_like(), 5000, 0.7, 0.005, 200, 0);
  const double rho = epoch_spearman(t, early_epoch(200));
  CHECK(rho >= 0.6);
  CHECK(rho <= 0.8);
  auto pc = prior_correlation(t, "mag_synth", 0.01);
  CHECK(pc.whole_space >= 0.6);
  CHECK(pc.top_subset <= 0.45);
  CHECK(pc.top_count == 50);
  CHECK(generate_synthetic(spaces::nb201_like(), 50, 0.7, 0.005, 20, 1) ==
        generate_synthetic(spaces::nb201_like(), 50, 0.7, 0.005, 20, 1));
}

TEST_CASE("table prior scorer reads the declared metric") {
  auto t = fixtures::random_table(10, 5, 8);
  auto scorer = table_prior_scorer(t, "p");
  CHECK(scorer(t.records()[2].arch) == t.records()[2].prior_scores.at("p"));
  CHECK_THROWS_AS(table_prior_scorer(t, "nope"), BenchmarkError);
}
