#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ranknosh/arch_space.hpp"

namespace ranknosh {

// Validation accuracy as a function of trained epochs.
//
// Dense curves list every epoch 1..max_epoch; sparse curves (NAS-Bench-101
// style) list a subset and refuse lookups at unlisted epochs.
class AccuracyCurve {
 public:
  AccuracyCurve() = default;
  static AccuracyCurve dense(std::vector<double> values);
  static AccuracyCurve sparse(std::map<int, double> points);

  bool is_dense() const { return dense_; }
  // Largest listed epoch.
  int last_epoch() const;
  bool has_epoch(int epoch) const;
  // Throws BenchmarkError on an unlisted epoch.
  double at(int epoch) const;
  // Listed epochs, ascending.
  std::vector<int> epochs() const;
  const std::vector<double>& dense_values() const { return values_; }
  const std::map<int, double>& sparse_points() const { return points_; }

  friend bool operator==(const AccuracyCurve&, const AccuracyCurve&) = default;

 private:
  bool dense_ = true;
  std::vector<double> values_;     // dense: entry e-1 is the accuracy after e epochs
  std::map<int, double> points_;   // sparse
};

struct BenchRecord {
  Architecture arch;
  AccuracyCurve val_acc;
  double test_acc = 0.0;
  std::map<std::string, double> prior_scores;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

// Read-only tabular benchmark: the training oracle.
class BenchmarkTable {
 public:
  BenchmarkTable(SearchSpaceSpec space, int max_epoch, std::vector<std::string> prior_metrics,
                 std::vector<BenchRecord> records, std::map<std::string, std::string> notes = {});

  const SearchSpaceSpec& space() const { return space_; }
  int max_epoch() const { return max_epoch_; }
  const std::vector<std::string>& prior_metrics() const { return prior_metrics_; }
  const std::vector<BenchRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  // Free-form provenance (generator parameters, converter choices).
  const std::map<std::string, std::string>& notes() const { return notes_; }
  bool is_sparse() const { return sparse_; }
  // Epochs listed by every record (1..max_epoch for dense tables).
  const std::vector<int>& common_epochs() const { return common_epochs_; }
  bool has_common_epoch(int epoch) const;

  const BenchRecord* find(const ArchKey& key) const;
  // Throws BenchmarkError when the architecture is absent.
  const BenchRecord& at(const ArchKey& key) const;
  bool contains(const ArchKey& key) const { return find(key) != nullptr; }

  // The training oracle: accuracy after `epoch` epochs.
  double val_acc(const Architecture& arch, int epoch) const;
  double final_val_acc(const ArchKey& key) const;
  double prior_score(const ArchKey& key, const std::string& metric) const;

  friend bool operator==(const BenchmarkTable& a, const BenchmarkTable& b) {
    return a.space_ == b.space_ && a.max_epoch_ == b.max_epoch_ &&
           a.prior_metrics_ == b.prior_metrics_ && a.records_ == b.records_ && a.notes_ == b.notes_;
  }

 private:
  SearchSpaceSpec space_;
  int max_epoch_;
  std::vector<std::string> prior_metrics_;
  std::vector<BenchRecord> records_;
  std::map<std::string, std::string> notes_;
  std::unordered_map<ArchKey, std::size_t, ArchKeyHash> index_;
  bool sparse_ = false;
  std::vector<int> common_epochs_;
};

inline constexpr int kBenchFormatVersion = 1;

// JSON Lines: header line, then one record per line. See docs/formats.md.
BenchmarkTable load_benchmark(const std::filesystem::path& path);
void save_benchmark(const BenchmarkTable& table, const std::filesystem::path& path);
BenchmarkTable parse_benchmark(std::istream& in, const std::string& source_name = "<stream>");
void write_benchmark(const BenchmarkTable& table, std::ostream& out);

// 128-bit FNV-1a of a file's bytes, as 32 hex digits.
std::string file_checksum(const std::filesystem::path& path);

// Append-only record of training charges. An architecture's charges must
// tile [0, frontier) without gaps or overlap.
class BudgetLedger {
 public:
  struct Charge {
    ArchKey key;
    int from_epoch;
    int to_epoch;
  };

  // Throws ContractViolation unless to > from and from equals the current
  // frontier of `key` (0 when never charged).
  void charge(const ArchKey& key, int from_epoch, int to_epoch);

  std::int64_t total_epochs() const { return total_; }
  int frontier(const ArchKey& key) const;
  const std::vector<Charge>& charges() const { return charges_; }
  std::size_t trained_count() const { return frontier_.size(); }
  // Sum of interval lengths, recomputed from the charge list.
  std::int64_t recompute_total() const;

 private:
  std::vector<Charge> charges_;
  std::unordered_map<ArchKey, int, ArchKeyHash> frontier_;
  std::int64_t total_ = 0;
};

// Train-free score of an architecture; a seam for scorers that instantiate
// networks. The engine treats it as a black box.
using PriorScorer = std::function<double(const Architecture&)>;

// Scorer reading `metric` from the benchmark's stored prior scores.
PriorScorer table_prior_scorer(const BenchmarkTable& table, const std::string& metric);

struct SyntheticOptions {
  // Spread of the per-architecture quality noise, relative to the spread of
  // the op-count component.
  double quality_noise = 0.25;
  // Noise of the "mag_synth" prior, relative to the standardized quality.
  double prior_noise = 0.85;
  // Sparse output: only these epochs are kept (must include max_epoch).
  std::vector<int> sparse_epochs;
};

// Synthetic benchmark with saturating-exponential learning curves.
// See the README section "Synthetic benchmarks" for the calibration procedure.
BenchmarkTable generate_synthetic(const SearchSpaceSpec& space, std::size_t n, double rank_stability,
                                  double noise, int max_epoch, std::uint64_t seed,
                                  const SyntheticOptions& options = {});

// Epoch at which rank_stability is measured: ceil(max_epoch / 20).
int early_epoch(int max_epoch);

}  // namespace ranknosh
