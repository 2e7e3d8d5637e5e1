#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "ranknosh/baselines.hpp"
#include "ranknosh/errors.hpp"
#include "ranknosh/report.hpp"

using namespace ranknosh;

TEST_CASE("random search budget arithmetic") {
  auto t = fixtures::random_table(300, 200, 1);
  auto one = random_search(t, 200, 0);
  CHECK(one.pool_final.size() == 1);
  CHECK(one.total_budget_epochs == 200);
  auto hundred = random_search(t, 20000, 0);
  CHECK(hundred.pool_final.size() == 100);
  CHECK(hundred.total_budget_epochs == 20000);
  CHECK(random_search(t, 20199, 0).total_budget_epochs == 20000);
  std::set<ArchKey> keys;
  double best = 0;
  for (const auto& e : hundred.pool_final) {
    keys.insert(e.arch.key());
    best = std::max(best, t.final_val_acc(e.arch.key()));
  }
  CHECK(keys.size() == 100);
  CHECK(hundred.best_val_acc == best);
  CHECK_THROWS_AS(random_search(t, 199, 0), ConfigError);
  CHECK_THROWS_AS(random_search(t, 200 * 301, 0), ConfigError);
}

TEST_CASE("random search is deterministic") {
  auto t = fixtures::random_table(100, 10, 2);
  CHECK(result_to_json(random_search(t, 200, 3)).dump() == result_to_json(random_search(t, 200, 3)).dump());
}

TEST_CASE("prior-only pick") {
  auto t = fixtures::random_table(100, 10, 3);
  auto one = prior_only(t, 1, "p", 4);
  CHECK(one.total_budget_epochs == 0);
  CHECK(one.pool_final.size() == 1);
  auto all = prior_only(t, 100, "p", 4);
  const BenchRecord* top = &t.records()[0];
  for (const auto& r : t.records())
    if (r.prior_scores.at("p") > top->prior_scores.at("p")) top = &r;
  CHECK(all.best_arch == top->arch);
  CHECK(all.best_final_val_acc == t.final_val_acc(top->arch.key()));
  CHECK_THROWS_AS(prior_only(t, 0, "p", 0), ConfigError);
  CHECK_THROWS_AS(prior_only(t, 10, "missing", 0), BenchmarkError);
}

TEST_CASE("rank-es and rank-full budgets") {
  auto t = fixtures::random_table(150, 20, 4);
  SearchConfig c;
  c.max_pool = 100;
  c.initial_pool = 16;
  c.proposal_size = 10;
  c.prior_metric = "p";
  c.train.epochs = 2;
  c.train.max_pairs_per_epoch = 50;
  auto full = rank_full(c, t);
  CHECK(full.method == "rank-full");
  CHECK(full.total_budget_epochs == 100 * 20);
  CHECK(full.pool_final.size() == 100);
  auto es = rank_es(c, t, 5);
  CHECK(es.method == "rank-es");
  CHECK(es.total_budget_epochs == 100 * 5);
  for (const auto& e : es.pool_final) CHECK(e.trained_epochs == 5);
  CHECK(result_to_json(rank_es(c, t, 5)).dump() == result_to_json(es).dump());
  CHECK_THROWS_AS(rank_es(c, t, 0), ConfigError);
  CHECK_THROWS_AS(rank_es(c, t, 21), ConfigError);
}

TEST_CASE("equal-budget truncation") {
  auto dense = fixtures::random_table(10, 200, 5);
  CHECK(equal_budget_truncation(dense, 5550, 100) == 55);
  CHECK(equal_budget_truncation(dense, 99999, 100) == 200);
  CHECK_THROWS_AS(equal_budget_truncation(dense, 50, 100), ConfigError);

  std::vector<BenchRecord> recs;
  for (const auto& a : subsample_universe(spaces::nb101_like(), 5, 6)) {
    BenchRecord r;
    r.arch = a;
    r.val_acc = AccuracyCurve::sparse({{4, 0.5}, {12, 0.6}, {36, 0.7}, {108, 0.8}});
    r.test_acc = 0.8;
    r.prior_scores["p"] = 0;
    recs.push_back(r);
  }
  BenchmarkTable sparse(spaces::nb101_like(), 108, {"p"}, recs);
  CHECK(equal_budget_truncation(sparse, 8400, 100) == 36);
  CHECK(equal_budget_truncation(sparse, 1200, 100) == 12);
  CHECK_THROWS_AS(equal_budget_truncation(sparse, 300, 100), ConfigError);
}
