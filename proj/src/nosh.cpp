#include "ranknosh/nosh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "ranknosh/errors.hpp"
#include "ranknosh/json_io.hpp"

namespace ranknosh {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Ratio

Ratio::Ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num <= 0 || num > den) {
    throw std::invalid_argument("ratio " + std::to_string(num) + "/" + std::to_string(den) + " is not in (0, 1]");
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Ratio Ratio::parse(const std::string& text) {
  auto digits = [&](const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw std::invalid_argument("cannot parse ratio '" + text + "'");
    }
    if (s.size() > 12) throw std::invalid_argument("ratio '" + text + "' has too many digits");
    return std::stoll(s);
  };
  if (auto slash = text.find('/'); slash != std::string::npos) {
    return Ratio(digits(text.substr(0, slash)), digits(text.substr(slash + 1)));
  }
  if (auto dot = text.find('.'); dot != std::string::npos) {
    const std::string whole = text.substr(0, dot);
    const std::string frac = text.substr(dot + 1);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t w = whole.empty() ? 0 : digits(whole);
    return Ratio(w * den + digits(frac), den);
  }
  return Ratio(digits(text), 1);
}

std::int64_t Ratio::ceil_mul(std::int64_t n) const {
  if (n < 0) throw std::invalid_argument("Ratio::ceil_mul: negative count");
  return (n * num_ + den_ - 1) / den_;
}

std::string Ratio::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

// ---------------------------------------------------------------------------
// Schedule

void Schedule::validate(bool allow_full_ratio) const {
  if (epochs.empty()) throw ConfigError("schedule: needs at least one level");
  if (move_ratios.size() != epochs.size()) {
    throw ConfigError("schedule: " + std::to_string(epochs.size()) + " levels need exactly that many move ratios (got " +
                      std::to_string(move_ratios.size()) + ")");
  }
  int prev = 0;
  for (int e : epochs) {
    if (e <= prev) throw ConfigError("schedule: epochs must be positive and strictly increasing");
    prev = e;
  }
  if (!allow_full_ratio) {
    for (const auto& r : move_ratios) {
      if (r.num() == r.den()) throw ConfigError("schedule: move ratios must be < 1");
    }
  }
}

void Schedule::validate_against(const BenchmarkTable& table, bool allow_full_ratio) const {
  validate(allow_full_ratio);
  if (!allow_full_ratio && epochs.back() != table.max_epoch()) {
    throw ConfigError("schedule: final epoch " + std::to_string(epochs.back()) + " must equal the benchmark max_epoch " +
                      std::to_string(table.max_epoch()));
  }
  if (epochs.back() > table.max_epoch()) throw ConfigError("schedule: epochs exceed the benchmark max_epoch");
  for (int e : epochs) {
    if (!table.has_common_epoch(e)) {
      throw ConfigError("schedule: epoch " + std::to_string(e) + " is not listed by the benchmark");
    }
  }
}

std::vector<Ratio> default_move_ratios(int levels) {
  std::vector<Ratio> r;
  for (int l = 0; l < levels; ++l) r.push_back(l == 0 ? Ratio(1, 3) : Ratio(1, 2));
  return r;
}

// ---------------------------------------------------------------------------
// Pyramid

Pyramid::Pyramid(Schedule schedule) : schedule_(std::move(schedule)) {
  schedule_.validate(true);
  levels_.resize(static_cast<std::size_t>(schedule_.levels() + 1));
}

std::size_t Pyramid::size() const {
  std::size_t n = 0;
  for (const auto& l : levels_) n += l.size();
  return n;
}

std::int64_t Pyramid::count_at_or_above(int l) const {
  std::int64_t n = 0;
  for (std::size_t i = static_cast<std::size_t>(l); i < levels_.size(); ++i) n += static_cast<std::int64_t>(levels_[i].size());
  return n;
}

bool Pyramid::contains(const ArchKey& key) const {
  for (const auto& l : levels_) {
    for (const auto& e : l) {
      if (e.key() == key) return true;
    }
  }
  return false;
}

void Pyramid::insert(Architecture arch, double prior_score, int arrival_round) {
  if (contains(arch.key())) throw ContractViolation("pyramid: " + arch.key().hex() + " is already in the pool");
  PoolEntry e;
  e.arch = std::move(arch);
  e.prior_score = prior_score;
  e.arrival_round = arrival_round;
  levels_[0].push_back(std::move(e));
}

std::vector<const PoolEntry*> Pyramid::trained() const {
  std::vector<const PoolEntry*> out;
  for (std::size_t l = 1; l < levels_.size(); ++l) {
    std::vector<const PoolEntry*> lvl;
    for (const auto& e : levels_[l]) lvl.push_back(&e);
    std::sort(lvl.begin(), lvl.end(), [](const PoolEntry* a, const PoolEntry* b) { return a->key() < b->key(); });
    out.insert(out.end(), lvl.begin(), lvl.end());
  }
  return out;
}

void Pyramid::check_invariants() const {
  std::unordered_set<ArchKey, ArchKeyHash> seen;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const int level = static_cast<int>(l);
    for (const auto& e : levels_[l]) {
      if (!seen.insert(e.key()).second) throw ContractViolation("pyramid: " + e.key().hex() + " appears twice");
      if (e.level != level) throw ContractViolation("pyramid: entry level field disagrees with its level");
      if (e.trained_epochs != schedule_.epoch_at(level)) {
        throw ContractViolation("pyramid: level " + std::to_string(level) + " entry trained " +
                                std::to_string(e.trained_epochs) + " epochs");
      }
      if (e.current_val_acc.has_value() != (level >= 1)) {
        throw ContractViolation("pyramid: accuracy presence disagrees with level");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Promotion

std::int64_t promotion_target(const Schedule& schedule, int level, std::int64_t at_or_above) {
  return schedule.move_ratios[static_cast<std::size_t>(level)].ceil_mul(at_or_above);
}

std::int64_t promote_count(const Schedule& schedule, int level, std::int64_t at_or_above, std::int64_t above,
                           std::int64_t resident) {
  const std::int64_t shortfall = promotion_target(schedule, level, at_or_above) - above;
  return std::clamp<std::int64_t>(shortfall, 0, resident);
}

void nosh_pass(Pyramid& pyramid, BudgetLedger& ledger, const BenchmarkTable& oracle, std::int64_t k) {
  auto& levels = pyramid.levels_;
  const Schedule& sched = pyramid.schedule_;
  if (k < 0 || k > static_cast<std::int64_t>(levels[0].size())) {
    throw ContractViolation("nosh_pass: k=" + std::to_string(k) + " exceeds the level-0 population " +
                            std::to_string(levels[0].size()));
  }
  for (int l = 0; l < sched.levels(); ++l) {
    auto& here = levels[static_cast<std::size_t>(l)];
    const std::int64_t n = promote_count(sched, l, pyramid.count_at_or_above(l), pyramid.count_at_or_above(l + 1),
                                         static_cast<std::int64_t>(here.size()));
    if (n == 0) continue;
    auto score = [l](const PoolEntry& e) { return l == 0 ? e.prior_score : *e.current_val_acc; };
    std::sort(here.begin(), here.end(), [&](const PoolEntry& a, const PoolEntry& b) {
      const double sa = score(a);
      const double sb = score(b);
      if (sa != sb) return sa > sb;
      return a.key() < b.key();
    });
    const int from = sched.epoch_at(l);
    const int to = sched.epoch_at(l + 1);
    auto& next = levels[static_cast<std::size_t>(l + 1)];
    for (std::int64_t i = 0; i < n; ++i) {
      PoolEntry e = std::move(here[static_cast<std::size_t>(i)]);
      const double acc = oracle.val_acc(e.arch, to);
      ledger.charge(e.key(), from, to);
      e.level = l + 1;
      e.trained_epochs = to;
      e.current_val_acc = acc;
      next.push_back(std::move(e));
    }
    here.erase(here.begin(), here.begin() + n);
  }
}

std::vector<ContextEntry> pairwise_context(const Pyramid& pyramid) {
  std::vector<ContextEntry> out;
  out.reserve(pyramid.size());
  for (int l = 0; l <= pyramid.top_level(); ++l) {
    const std::size_t start = out.size();
    for (const auto& e : pyramid.level(l)) {
      out.push_back({&e, l, l == 0 ? e.prior_score : *e.current_val_acc});
    }
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end(),
              [](const ContextEntry& a, const ContextEntry& b) { return a.entry->key() < b.entry->key(); });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint

void write_checkpoint(const Pyramid& pyramid, const BudgetLedger& ledger, std::ostream& out) {
  const auto& s = pyramid.schedule();
  json header;
  header["format"] = "ranknosh-checkpoint";
  header["version"] = 1;
  header["epochs"] = s.epochs;
  std::vector<std::string> ratios;
  for (const auto& r : s.move_ratios) ratios.push_back(r.str());
  header["move_ratios"] = ratios;
  int num_ops = 0;
  for (int l = 0; l <= pyramid.top_level() && num_ops == 0; ++l) {
    if (!pyramid.level(l).empty()) num_ops = pyramid.level(l).front().arch.num_ops();
  }
  header["num_ops"] = num_ops;
  header["entries"] = pyramid.size();
  header["charges"] = ledger.charges().size();
  out << header.dump() << '\n';
  for (const auto& c : pairwise_context(pyramid)) {
    const auto& e = *c.entry;
    json j = arch_to_json(e.arch);
    j["kind"] = "entry";
    j["level"] = e.level;
    j["trained_epochs"] = e.trained_epochs;
    if (e.current_val_acc) j["val_acc"] = *e.current_val_acc;
    j["prior"] = e.prior_score;
    j["arrival_round"] = e.arrival_round;
    out << j.dump() << '\n';
  }
  for (const auto& c : ledger.charges()) {
    json j;
    j["kind"] = "charge";
    j["key"] = c.key.hex();
    j["from"] = c.from_epoch;
    j["to"] = c.to_epoch;
    out << j.dump() << '\n';
  }
}

Pyramid read_checkpoint(std::istream& in, BudgetLedger& ledger) {
  std::string line;
  if (!std::getline(in, line)) throw ContractViolation("checkpoint: empty input");
  try {
    json header = json::parse(line);
    if (header.at("format").get<std::string>() != "ranknosh-checkpoint") {
      throw ContractViolation("checkpoint: wrong format tag");
    }
    Schedule s;
    s.epochs = header.at("epochs").get<std::vector<int>>();
    for (const auto& r : header.at("move_ratios")) s.move_ratios.push_back(Ratio::parse(r.get<std::string>()));
    const int num_ops = header.at("num_ops").get<int>();
    Pyramid p(std::move(s));
    BudgetLedger restored;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "entry") {
        PoolEntry e;
        e.arch = arch_from_json(j, num_ops);
        e.level = j.at("level").get<int>();
        e.trained_epochs = j.at("trained_epochs").get<int>();
        if (j.contains("val_acc")) e.current_val_acc = j.at("val_acc").get<double>();
        e.prior_score = j.at("prior").get<double>();
        e.arrival_round = j.at("arrival_round").get<int>();
        if (e.level < 0 || e.level > p.top_level()) throw ContractViolation("checkpoint: level out of range");
        p.levels_[static_cast<std::size_t>(e.level)].push_back(std::move(e));
      } else if (kind == "charge") {
        restored.charge(ArchKey::from_hex(j.at("key").get<std::string>()), j.at("from").get<int>(), j.at("to").get<int>());
      } else {
        throw ContractViolation("checkpoint: unknown line kind '" + kind + "'");
      }
    }
    p.check_invariants();
    ledger = std::move(restored);
    return p;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("checkpoint: malformed input: ") + e.what());
  }
}

}  // namespace ranknosh
