#include "ranknosh/search.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "ranknosh/errors.hpp"
#include "ranknosh/rng.hpp"

namespace ranknosh {

void SearchConfig::validate() const {
  if (initial_pool < 1) throw ConfigError("initial pool size must be >= 1");
  if (proposal_size < 1) throw ConfigError("proposal size must be >= 1");
  if (max_pool < initial_pool) {
    throw ConfigError("max pool size " + std::to_string(max_pool) + " is below the initial pool size " +
                      std::to_string(initial_pool));
  }
  if (reference_cap < 1) throw ConfigError("reference cap must be >= 1");
  schedule.validate(allow_full_ratio);
  train.validate();
}

void SearchConfig::validate_against(const BenchmarkTable& table) const {
  validate();
  schedule.validate_against(table, allow_full_ratio);
  const std::size_t universe = universe_size == 0 ? table.size() : universe_size;
  if (universe > table.size()) {
    throw ConfigError("universe size " + std::to_string(universe) + " exceeds the benchmark's " +
                      std::to_string(table.size()) + " records");
  }
  const auto headroom = static_cast<std::size_t>(max_pool + (max_pool > initial_pool ? proposal_size : 0));
  if (universe < headroom) {
    throw ConfigError("universe size " + std::to_string(universe) + " leaves no proposal headroom; need >= " +
                      std::to_string(headroom));
  }
}

std::vector<std::string> preset_names() {
  return {"c10-12ep", "c100-200ep", "imagenet16-200ep", "nb101-sparse", "darts-like"};
}

SearchConfig preset_config(const std::string& name) {
  SearchConfig c;
  auto set = [&c](std::vector<int> epochs, std::int64_t m) {
    c.schedule.move_ratios = default_move_ratios(static_cast<int>(epochs.size()));
    c.schedule.epochs = std::move(epochs);
    c.max_pool = m;
  };
  if (name == "c10-12ep") {
    set({1, 2, 3, 12}, 300);
  } else if (name == "c100-200ep" || name == "imagenet16-200ep") {
    set({10, 50, 100, 200}, 300);
  } else if (name == "nb101-sparse") {
    set({12, 36, 108}, 600);
  } else if (name == "darts-like") {
    set({10, 20, 30, 50}, 150);
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

PresetBench preset_bench(const std::string& name) {
  if (name == "c10-12ep") return {spaces::nb201_like(), 12, {}};
  if (name == "c100-200ep" || name == "imagenet16-200ep") return {spaces::nb201_like(), 200, {}};
  if (name == "nb101-sparse") return {spaces::nb101_like(), 108, {4, 12, 36, 108}};
  if (name == "darts-like") return {spaces::darts_like(), 50, {}};
  throw ConfigError("unknown preset '" + name + "'");
}

std::optional<std::int64_t> reference_budget(const SearchConfig& cfg) {
  static const std::vector<std::pair<std::string, std::int64_t>> quoted = {
      {"c10-12ep", 292}, {"c100-200ep", 5550}, {"nb101-sparse", 8400}, {"darts-like", 990}};
  for (const auto& [name, budget] : quoted) {
    const SearchConfig p = preset_config(name);
    if (p.max_pool == cfg.max_pool && p.initial_pool == cfg.initial_pool && p.proposal_size == cfg.proposal_size &&
        p.schedule.epochs == cfg.schedule.epochs && p.schedule.move_ratios == cfg.schedule.move_ratios) {
      return budget;
    }
  }
  return std::nullopt;
}

std::vector<std::int64_t> arrival_schedule(const SearchConfig& cfg) {
  cfg.validate();
  std::vector<std::int64_t> out{cfg.initial_pool};
  std::int64_t pool = cfg.initial_pool;
  while (pool < cfg.max_pool) {
    const std::int64_t k = std::min(cfg.proposal_size, cfg.max_pool - pool);
    out.push_back(k);
    pool += k;
  }
  return out;
}

std::int64_t closed_form_budget(const SearchConfig& cfg) {
  const Schedule& s = cfg.schedule;
  const auto N = static_cast<std::size_t>(s.levels());
  std::vector<std::int64_t> n(N + 1, 0);
  std::int64_t budget = 0;
  for (std::int64_t k : arrival_schedule(cfg)) {
    n[0] += k;
    for (std::size_t l = 0; l < N; ++l) {
      std::int64_t above = 0;
      for (std::size_t j = l + 1; j <= N; ++j) above += n[j];
      const int level = static_cast<int>(l);
      const std::int64_t c = promote_count(s, level, above + n[l], above, n[l]);
      budget += c * (s.epoch_at(level + 1) - s.epoch_at(level));
      n[l] -= c;
      n[l + 1] += c;
    }
  }
  return budget;
}

const PoolEntry& select_best(const Pyramid& pyramid) {
  const PoolEntry* best = nullptr;
  for (const PoolEntry* e : pyramid.trained()) {
    if (!best || *e->current_val_acc > *best->current_val_acc ||
        (*e->current_val_acc == *best->current_val_acc && e->key() < best->key())) {
      best = e;
    }
  }
  if (!best) throw ContractViolation("no trained entry to select from");
  return *best;
}

namespace {

double best_so_far(const Pyramid& p) { return *select_best(p).current_val_acc; }

}  // namespace

SearchResult run(const SearchConfig& cfg_in, const BenchmarkTable& table, const PriorScorer& scorer_in) {
  cfg_in.validate_against(table);
  SearchConfig cfg = cfg_in;
  cfg.ranker.num_ops = table.space().num_ops();
  PriorScorer scorer = scorer_in ? scorer_in : table_prior_scorer(table, cfg.prior_metric);

  // Candidate universe: a seeded subset of the benchmark records.
  const auto& records = table.records();
  std::vector<Architecture> universe;
  {
    const std::size_t m = cfg.universe_size == 0 ? records.size() : cfg.universe_size;
    Rng rng(derive_seed(cfg.seed, stream::kUniverse));
    auto idx = m == records.size() ? std::vector<std::size_t>{} : rng.sample_indices(records.size(), m);
    if (idx.empty()) {
      for (const auto& r : records) universe.push_back(r.arch);
    } else {
      for (auto i : idx) universe.push_back(records[i].arch);
    }
  }

  Pyramid pyramid(cfg.schedule);
  BudgetLedger ledger;
  KeySet pool_keys;
  SearchResult result;

  const auto arrivals = arrival_schedule(cfg);
  {
    Rng rng(derive_seed(cfg.seed, stream::kInitialPool));
    for (auto i : rng.sample_indices(universe.size(), static_cast<std::size_t>(arrivals[0]))) {
      pyramid.insert(universe[i], scorer(universe[i]), 0);
      pool_keys.insert(universe[i].key());
    }
  }
  nosh_pass(pyramid, ledger, table, arrivals[0]);
  result.per_round_log.push_back(
      {0, static_cast<std::int64_t>(pyramid.size()), ledger.total_epochs(), best_so_far(pyramid), 0, 0.0});

  for (std::size_t r = 1; r < arrivals.size(); ++r) {
    const int round = static_cast<int>(r);
    const auto pairs = generate_pairs(pairwise_context(pyramid));
    if (pairs.empty()) throw NumericError("round " + std::to_string(round) + ": every pool pair is tied");
    ArchLookup lookup;
    for (int l = 0; l <= pyramid.top_level(); ++l) {
      for (const auto& e : pyramid.level(l)) lookup.emplace(e.key(), e.arch);
    }
    RankerModel model(cfg.ranker, derive_seed(cfg.seed, stream::kRankerInit, r));
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, stream::kRankerShuffle, r);
    TrainResult tr = train(model, pairs, tc, lookup);

    // Only unseen candidates can be proposed, so pool members are not scored.
    std::vector<Architecture> fresh;
    fresh.reserve(universe.size());
    for (const auto& a : universe) {
      if (!pool_keys.contains(a.key())) fresh.push_back(a);
    }
    const auto reference = choose_reference(pyramid, cfg.reference_cap, derive_seed(cfg.seed, stream::kReference, r));
    const auto ranking = global_rank(model, fresh, reference);
    const auto k = static_cast<std::size_t>(arrivals[r]);
    for (auto& a : propose(ranking, pool_keys, k, derive_seed(cfg.seed, stream::kProposal, r))) {
      pool_keys.insert(a.key());
      const double prior = scorer(a);
      pyramid.insert(std::move(a), prior, round);
    }
    nosh_pass(pyramid, ledger, table, arrivals[r]);
    result.per_round_log.push_back({round, static_cast<std::int64_t>(pyramid.size()), ledger.total_epochs(),
                                    best_so_far(pyramid), pairs.size(), tr.loss_trace.back()});
    result.loss_traces.push_back(std::move(tr.loss_trace));
  }

  const std::int64_t expected = closed_form_budget(cfg);
  if (ledger.total_epochs() != expected) {
    throw ContractViolation("ledger total " + std::to_string(ledger.total_epochs()) +
                            " differs from the closed-form budget " + std::to_string(expected));
  }
  pyramid.check_invariants();

  const PoolEntry& best = select_best(pyramid);
  result.method = "rank-nosh";
  result.best_arch = best.arch;
  result.best_val_acc = *best.current_val_acc;
  result.best_test_acc = table.at(best.key()).test_acc;
  result.best_final_val_acc = table.final_val_acc(best.key());
  result.total_budget_epochs = ledger.total_epochs();
  result.rounds = static_cast<int>(arrivals.size()) - 1;
  for (int l = 0; l <= pyramid.top_level(); ++l) {
    auto lvl = pyramid.level(l);
    std::sort(lvl.begin(), lvl.end(), [](const PoolEntry& a, const PoolEntry& b) { return a.key() < b.key(); });
    result.pool_final.insert(result.pool_final.end(), lvl.begin(), lvl.end());
  }
  return result;
}

}  // namespace ranknosh
