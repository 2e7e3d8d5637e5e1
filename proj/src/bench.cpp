#include "ranknosh/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ranknosh/analysis.hpp"
#include "ranknosh/errors.hpp"
#include "ranknosh/json_io.hpp"
#include "ranknosh/rng.hpp"

namespace ranknosh {

using nlohmann::json;

// ---------------------------------------------------------------------------
// AccuracyCurve

AccuracyCurve AccuracyCurve::dense(std::vector<double> values) {
  AccuracyCurve c;
  c.dense_ = true;
  c.values_ = std::move(values);
  return c;
}

AccuracyCurve AccuracyCurve::sparse(std::map<int, double> points) {
  AccuracyCurve c;
  c.dense_ = false;
  c.points_ = std::move(points);
  return c;
}

int AccuracyCurve::last_epoch() const {
  if (dense_) return static_cast<int>(values_.size());
  return points_.empty() ? 0 : points_.rbegin()->first;
}

bool AccuracyCurve::has_epoch(int epoch) const {
  if (dense_) return epoch >= 1 && epoch <= static_cast<int>(values_.size());
  return points_.count(epoch) != 0;
}

double AccuracyCurve::at(int epoch) const {
  if (dense_) {
    if (epoch < 1 || epoch > static_cast<int>(values_.size())) {
      throw BenchmarkError("epoch " + std::to_string(epoch) + " outside [1, " +
                           std::to_string(values_.size()) + "]");
    }
    return values_[static_cast<std::size_t>(epoch - 1)];
  }
  auto it = points_.find(epoch);
  if (it == points_.end()) throw BenchmarkError("epoch " + std::to_string(epoch) + " is not listed in a sparse curve");
  return it->second;
}

std::vector<int> AccuracyCurve::epochs() const {
  std::vector<int> out;
  if (dense_) {
    out.resize(values_.size());
    std::iota(out.begin(), out.end(), 1);
  } else {
    for (const auto& [e, _] : points_) out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// BenchmarkTable

namespace {

bool is_fraction(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void validate_record(const BenchRecord& r, const SearchSpaceSpec& space, int max_epoch,
                     const std::vector<std::string>& metrics) {
  if (!is_member(space, r.arch)) throw BenchmarkError("architecture is not a member of space '" + space.name + "'");
  const auto& c = r.val_acc;
  if (c.is_dense()) {
    if (static_cast<int>(c.dense_values().size()) != max_epoch) {
      throw BenchmarkError("curve has " + std::to_string(c.dense_values().size()) + " entries, expected max_epoch=" +
                           std::to_string(max_epoch));
    }
    for (double v : c.dense_values()) {
      if (!is_fraction(v)) throw BenchmarkError("curve accuracy outside [0, 1]");
    }
  } else {
    if (c.sparse_points().empty() || c.last_epoch() != max_epoch) {
      throw BenchmarkError("sparse curve must list max_epoch=" + std::to_string(max_epoch));
    }
    for (const auto& [e, v] : c.sparse_points()) {
      if (e < 1 || e > max_epoch) throw BenchmarkError("sparse curve epoch " + std::to_string(e) + " out of range");
      if (!is_fraction(v)) throw BenchmarkError("curve accuracy outside [0, 1]");
    }
  }
  if (!is_fraction(r.test_acc)) throw BenchmarkError("test accuracy outside [0, 1]");
  for (const auto& [name, v] : r.prior_scores) {
    if (std::find(metrics.begin(), metrics.end(), name) == metrics.end()) {
      throw BenchmarkError("prior metric '" + name + "' is not declared in the header");
    }
    if (!std::isfinite(v)) throw BenchmarkError("prior score '" + name + "' is not finite");
  }
}

}  // namespace

BenchmarkTable::BenchmarkTable(SearchSpaceSpec space, int max_epoch, std::vector<std::string> prior_metrics,
                               std::vector<BenchRecord> records, std::map<std::string, std::string> notes)
    : space_(std::move(space)),
      max_epoch_(max_epoch),
      prior_metrics_(std::move(prior_metrics)),
      records_(std::move(records)),
      notes_(std::move(notes)) {
  space_.validate();
  if (max_epoch_ < 1) throw BenchmarkError("max_epoch must be positive");
  if (records_.empty()) throw BenchmarkError("benchmark has no records");
  index_.reserve(records_.size());
  sparse_ = !records_.front().val_acc.is_dense();
  std::set<int> common;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    try {
      validate_record(r, space_, max_epoch_, prior_metrics_);
      if (r.val_acc.is_dense() == sparse_) throw BenchmarkError("mixes dense and sparse curves");
    } catch (const BenchmarkError& e) {
      throw BenchmarkError("record " + std::to_string(i) + " (" + r.arch.key().hex() + "): " + e.what());
    }
    if (!index_.emplace(r.arch.key(), i).second) {
      throw BenchmarkError("record " + std::to_string(i) + " (" + r.arch.key().hex() + "): duplicate architecture");
    }
    if (i == 0) {
      const auto e = r.val_acc.epochs();
      common.insert(e.begin(), e.end());
    } else if (sparse_) {
      std::set<int> keep;
      for (const auto& [e, _] : r.val_acc.sparse_points()) {
        if (common.count(e)) keep.insert(e);
      }
      common = std::move(keep);
    }
  }
  common_epochs_.assign(common.begin(), common.end());
}

bool BenchmarkTable::has_common_epoch(int epoch) const {
  return std::binary_search(common_epochs_.begin(), common_epochs_.end(), epoch);
}

const BenchRecord* BenchmarkTable::find(const ArchKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const BenchRecord& BenchmarkTable::at(const ArchKey& key) const {
  if (const auto* r = find(key)) return *r;
  throw BenchmarkError("architecture " + key.hex() + " is not in the benchmark");
}

double BenchmarkTable::val_acc(const Architecture& arch, int epoch) const {
  if (epoch < 1 || epoch > max_epoch_) {
    throw BenchmarkError("epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(max_epoch_) + "]");
  }
  return at(arch.key()).val_acc.at(epoch);
}

double BenchmarkTable::final_val_acc(const ArchKey& key) const { return at(key).val_acc.at(max_epoch_); }

double BenchmarkTable::prior_score(const ArchKey& key, const std::string& metric) const {
  const auto& r = at(key);
  auto it = r.prior_scores.find(metric);
  if (it == r.prior_scores.end()) {
    throw BenchmarkError("architecture " + key.hex() + " has no prior score '" + metric + "'");
  }
  return it->second;
}

PriorScorer table_prior_scorer(const BenchmarkTable& table, const std::string& metric) {
  const auto& m = table.prior_metrics();
  if (std::find(m.begin(), m.end(), metric) == m.end()) {
    throw BenchmarkError("benchmark does not provide prior metric '" + metric + "'");
  }
  return [&table, metric](const Architecture& a) { return table.prior_score(a.key(), metric); };
}

// ---------------------------------------------------------------------------
// File format

void write_benchmark(const BenchmarkTable& table, std::ostream& out) {
  json header;
  header["format"] = "ranknosh-bench";
  header["version"] = kBenchFormatVersion;
  header["space"] = space_to_json(table.space());
  header["max_epoch"] = table.max_epoch();
  header["curve_kind"] = table.is_sparse() ? "sparse" : "dense";
  header["prior_metrics"] = table.prior_metrics();
  header["notes"] = table.notes();
  out << header.dump() << '\n';
  for (const auto& r : table.records()) {
    json j = arch_to_json(r.arch);
    if (r.val_acc.is_dense()) {
      j["val_acc"] = r.val_acc.dense_values();
    } else {
      json pts = json::array();
      for (const auto& [e, v] : r.val_acc.sparse_points()) pts.push_back({e, v});
      j["val_acc_sparse"] = pts;
    }
    j["test_acc"] = r.test_acc;
    j["prior"] = r.prior_scores;
    out << j.dump() << '\n';
  }
}

BenchmarkTable parse_benchmark(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw BenchmarkError(source_name + ": empty benchmark file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw BenchmarkError(source_name + ": malformed header: " + e.what());
  }
  SearchSpaceSpec space;
  int max_epoch = 0;
  std::vector<std::string> metrics;
  std::map<std::string, std::string> notes;
  bool sparse = false;
  try {
    if (header.at("format").get<std::string>() != "ranknosh-bench") throw BenchmarkError("not a ranknosh-bench file");
    const int version = header.at("version").get<int>();
    if (version != kBenchFormatVersion) {
      throw BenchmarkError("unsupported format version " + std::to_string(version));
    }
    space = space_from_json(header.at("space"));
    max_epoch = header.at("max_epoch").get<int>();
    metrics = header.at("prior_metrics").get<std::vector<std::string>>();
    if (header.contains("notes")) notes = header.at("notes").get<std::map<std::string, std::string>>();
    sparse = header.at("curve_kind").get<std::string>() == "sparse";
  } catch (const json::exception& e) {
    throw BenchmarkError(source_name + ": malformed header: " + e.what());
  } catch (const SpaceError& e) {
    throw BenchmarkError(source_name + ": " + e.what());
  } catch (const BenchmarkError& e) {
    throw BenchmarkError(source_name + ": " + e.what());
  }

  std::vector<BenchRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no) + ": record " + std::to_string(records.size());
    BenchRecord r;
    try {
      json j = json::parse(line);
      r.arch = arch_from_json(j, space.num_ops());
      if (sparse) {
        std::map<int, double> pts;
        for (const auto& p : j.at("val_acc_sparse")) {
          if (!pts.emplace(p.at(0).get<int>(), p.at(1).get<double>()).second) {
            throw BenchmarkError("repeated epoch in sparse curve");
          }
        }
        r.val_acc = AccuracyCurve::sparse(std::move(pts));
      } else {
        r.val_acc = AccuracyCurve::dense(j.at("val_acc").get<std::vector<double>>());
      }
      r.test_acc = j.at("test_acc").get<double>();
      if (j.contains("prior")) r.prior_scores = j.at("prior").get<std::map<std::string, double>>();
      validate_record(r, space, max_epoch, metrics);
    } catch (const json::exception& e) {
      throw BenchmarkError(where + ": malformed record: " + e.what());
    } catch (const SpaceError& e) {
      throw BenchmarkError(where + ": " + e.what());
    } catch (const BenchmarkError& e) {
      throw BenchmarkError(where + " (" + r.arch.key().hex() + "): " + e.what());
    }
    records.push_back(std::move(r));
  }
  try {
    return BenchmarkTable(std::move(space), max_epoch, std::move(metrics), std::move(records), std::move(notes));
  } catch (const BenchmarkError& e) {
    throw BenchmarkError(source_name + ": " + e.what());
  }
}

BenchmarkTable load_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BenchmarkError("cannot open benchmark file '" + path.string() + "'");
  return parse_benchmark(in, path.string());
}

void save_benchmark(const BenchmarkTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw BenchmarkError("cannot write benchmark file '" + path.string() + "'");
  write_benchmark(table, out);
  if (!out) throw BenchmarkError("write failed for '" + path.string() + "'");
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BenchmarkError("cannot open '" + path.string() + "' for checksum");
  __extension__ typedef unsigned __int128 u128;
  u128 h = (static_cast<u128>(0x6c62272e07bb0142ULL) << 64) | 0x62b821756295c58dULL;
  const u128 prime = (static_cast<u128>(0x0000000001000000ULL) << 64) | 0x13bULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= prime;
    }
  }
  return ArchKey(static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h)).hex();
}

// ---------------------------------------------------------------------------
// BudgetLedger

void BudgetLedger::charge(const ArchKey& key, int from_epoch, int to_epoch) {
  if (to_epoch <= from_epoch || from_epoch < 0) {
    throw ContractViolation("ledger: empty or negative interval [" + std::to_string(from_epoch) + ", " +
                            std::to_string(to_epoch) + ") for " + key.hex());
  }
  const int current = frontier(key);
  if (from_epoch != current) {
    throw ContractViolation("ledger: " + key.hex() + " charged from epoch " + std::to_string(from_epoch) +
                            " but its frontier is " + std::to_string(current));
  }
  charges_.push_back({key, from_epoch, to_epoch});
  frontier_[key] = to_epoch;
  total_ += to_epoch - from_epoch;
}

int BudgetLedger::frontier(const ArchKey& key) const {
  auto it = frontier_.find(key);
  return it == frontier_.end() ? 0 : it->second;
}

std::int64_t BudgetLedger::recompute_total() const {
  std::int64_t t = 0;
  for (const auto& c : charges_) t += c.to_epoch - c.from_epoch;
  return t;
}

// ---------------------------------------------------------------------------
// Synthetic generator
//
// final accuracy: a(x) = 0.55 + 0.40 * logistic(1.5 z(x)), with z the
//   standardized latent quality q(x) = mean op weight (+ wiring term for
//   free_dag spaces) + Gaussian noise.
// curve: acc(e) = a(x) * (1 - exp(-e/tau)) / (1 - exp(-E/tau)) + noise * eps_e,
//   tau(x) = (E/8) * exp(s * u(x)), u ~ N(0, 1).
// s is found by bisection so that Spearman(acc(early_epoch), acc(E)) over the
// generated table matches rank_stability (all other draws held fixed).

int early_epoch(int max_epoch) { return (max_epoch + 19) / 20; }

namespace {

struct Draws {
  std::vector<double> final_acc;
  std::vector<double> tau_z;
  std::vector<std::vector<double>> eps;  // per-arch, per-epoch noise
};

std::vector<double> curve_for(double final_acc, double tau, double noise, int max_epoch,
                              const std::vector<double>& eps) {
  std::vector<double> out(static_cast<std::size_t>(max_epoch));
  const double denom = 1.0 - std::exp(-static_cast<double>(max_epoch) / tau);
  for (int e = 1; e <= max_epoch; ++e) {
    const double frac = (1.0 - std::exp(-static_cast<double>(e) / tau)) / denom;
    const double v = final_acc * frac + noise * eps[static_cast<std::size_t>(e - 1)];
    out[static_cast<std::size_t>(e - 1)] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

double measured_stability(const Draws& d, double spread, double noise, int max_epoch) {
  const double tau0 = std::max(0.5, max_epoch / 8.0);
  const int early = early_epoch(max_epoch);
  std::vector<double> a;
  std::vector<double> b;
  a.reserve(d.final_acc.size());
  b.reserve(d.final_acc.size());
  for (std::size_t i = 0; i < d.final_acc.size(); ++i) {
    const double tau = tau0 * std::exp(spread * d.tau_z[i]);
    const double denom = 1.0 - std::exp(-static_cast<double>(max_epoch) / tau);
    auto at = [&](int e) {
      const double frac = (1.0 - std::exp(-static_cast<double>(e) / tau)) / denom;
      return std::clamp(d.final_acc[i] * frac + noise * d.eps[i][static_cast<std::size_t>(e - 1)], 0.0, 1.0);
    };
    a.push_back(at(early));
    b.push_back(at(max_epoch));
  }
  return spearman(a, b);
}

}  // namespace

BenchmarkTable generate_synthetic(const SearchSpaceSpec& space, std::size_t n, double rank_stability, double noise,
                                  int max_epoch, std::uint64_t seed, const SyntheticOptions& options) {
  if (n < 2) throw std::invalid_argument("generate_synthetic: n must be >= 2");
  if (!(rank_stability > 0.0 && rank_stability <= 1.0)) {
    throw std::invalid_argument("generate_synthetic: rank_stability must be in (0, 1]");
  }
  if (!(noise >= 0.0)) throw std::invalid_argument("generate_synthetic: noise must be >= 0");
  if (max_epoch < 1) throw std::invalid_argument("generate_synthetic: max_epoch must be positive");

  auto archs = subsample_universe(space, n, derive_seed(seed, stream::kSynthetic, 0));
  Rng rng(derive_seed(seed, stream::kSynthetic, 1));

  std::vector<double> op_weight(static_cast<std::size_t>(space.num_ops()), 0.0);
  for (double& w : op_weight) w = rng.uniform01();
  const double wiring_weight = rng.uniform(-0.3, 0.3);
  const int slots = space.max_edges.value_or(space.num_nodes * (space.num_nodes - 1) / 2);

  std::vector<double> det(archs.size());
  for (std::size_t i = 0; i < archs.size(); ++i) {
    const auto& a = archs[i];
    double sum = 0.0;
    int free_nodes = 0;
    for (int v = 0; v < a.num_nodes(); ++v) {
      if (space.pinned_op(v)) continue;
      sum += op_weight[static_cast<std::size_t>(a.op(v))];
      ++free_nodes;
    }
    det[i] = free_nodes > 0 ? sum / free_nodes : 0.0;
    if (space.structure == DagStructure::kFree && slots > 0) {
      det[i] += wiring_weight * static_cast<double>(a.num_edges()) / slots;
    }
  }
  const auto det_stats = mean_std(det);
  const double det_sd = det_stats.std > 0.0 ? det_stats.std : 1.0;

  std::vector<double> q(archs.size());
  for (std::size_t i = 0; i < archs.size(); ++i) q[i] = det[i] + options.quality_noise * det_sd * rng.normal();
  const auto q_stats = mean_std(q);
  const double q_sd = q_stats.std > 0.0 ? q_stats.std : 1.0;

  Draws d;
  d.final_acc.resize(archs.size());
  d.tau_z.resize(archs.size());
  d.eps.resize(archs.size());
  std::vector<double> z(archs.size());
  for (std::size_t i = 0; i < archs.size(); ++i) {
    z[i] = (q[i] - q_stats.mean) / q_sd;
    d.final_acc[i] = 0.55 + 0.40 / (1.0 + std::exp(-1.5 * z[i]));
    d.tau_z[i] = rng.normal();
    d.eps[i].resize(static_cast<std::size_t>(max_epoch));
    for (double& x : d.eps[i]) x = rng.normal();
  }

  // Calibrate the time-constant spread.
  double spread = 0.0;
  double realized = measured_stability(d, 0.0, noise, max_epoch);
  if (rank_stability < realized) {
    double lo = 0.0;
    double hi = 1.0;
    while (hi < 20.0 && measured_stability(d, hi, noise, max_epoch) > rank_stability) hi *= 2.0;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (measured_stability(d, mid, noise, max_epoch) > rank_stability) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    spread = 0.5 * (lo + hi);
    realized = measured_stability(d, spread, noise, max_epoch);
  }

  const double tau0 = std::max(0.5, max_epoch / 8.0);
  std::vector<BenchRecord> records;
  records.reserve(archs.size());
  for (std::size_t i = 0; i < archs.size(); ++i) {
    BenchRecord r;
    r.arch = archs[i];
    auto curve = curve_for(d.final_acc[i], tau0 * std::exp(spread * d.tau_z[i]), noise, max_epoch, d.eps[i]);
    if (options.sparse_epochs.empty()) {
      r.val_acc = AccuracyCurve::dense(std::move(curve));
    } else {
      std::map<int, double> pts;
      for (int e : options.sparse_epochs) {
        if (e < 1 || e > max_epoch) throw std::invalid_argument("generate_synthetic: sparse epoch out of range");
        pts[e] = curve[static_cast<std::size_t>(e - 1)];
      }
      r.val_acc = AccuracyCurve::sparse(std::move(pts));
    }
    r.test_acc = std::clamp(d.final_acc[i] - 0.002 + 0.003 * rng.normal(), 0.0, 1.0);
    r.prior_scores["mag_synth"] = z[i] + options.prior_noise * rng.normal();
    records.push_back(std::move(r));
  }

  std::map<std::string, std::string> notes{
      {"generator", "saturating-exponential"},
      {"seed", std::to_string(seed)},
      {"rank_stability_target", format_double(rank_stability)},
      {"rank_stability_realized", format_double(realized)},
      {"rank_stability_epoch", std::to_string(early_epoch(max_epoch))},
      {"tau_log_spread", format_double(spread)},
      {"curve_noise", format_double(noise)},
      {"quality_noise", format_double(options.quality_noise)},
      {"prior_noise", format_double(options.prior_noise)},
  };
  return BenchmarkTable(space, max_epoch, {"mag_synth"}, std::move(records), std::move(notes));
}

}  // namespace ranknosh
