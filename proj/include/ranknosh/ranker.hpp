#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "ranknosh/arch_space.hpp"
#include "ranknosh/errors.hpp"
#include "ranknosh/nosh.hpp"

namespace ranknosh {

// y = 1 means `a` is worse than `b`.
struct PairLabel {
  ArchKey a;
  ArchKey b;
  int y = 0;
};

// Pairwise labels for every unordered pair of the snapshot: more trained
// epochs wins; at equal epochs the level's score decides (validation accuracy
// at level >= 1, prior score at level 0). Exact ties are skipped. One
// orientation per pair, in snapshot order.
std::vector<PairLabel> generate_pairs(const std::vector<ContextEntry>& context);

struct RankerConfig {
  int num_ops = 0;
  int layers = 5;
  int embedding_dim = 16;
  int hidden_dim = 64;
  // Head logits computed as g(f(a), f(b)) - g(f(b), f(a)), so that
  // forward(a, b) + forward(b, a) = 1 exactly.
  bool antisymmetric = true;
  double init_scale = 0.1;

  friend bool operator==(const RankerConfig&, const RankerConfig&) = default;
};

// Siamese GIN ranker.
//
// Encoder: `layers` rounds of h' = MLP((1 + eps) h_v + sum_{u ~ v} h_u) over
// the undirected cell graph (A + A^T), MLP = Linear-ReLU-Linear with a ReLU
// after every round but the last; embedding = mean over nodes. Both towers
// share parameters. Head: Linear(2d -> hidden)-ReLU-Linear(hidden -> 2) on the
// concatenated embeddings; class 0 = "a beats b".
class RankerModel {
 public:
  RankerModel() = default;
  // Parameters drawn uniformly from [-init_scale, init_scale].
  RankerModel(RankerConfig config, std::uint64_t seed);

  const RankerConfig& config() const { return config_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  std::vector<double> embed(const Architecture& arch) const;
  // Probability that a beats b; throws NumericError on non-finite values.
  double forward(const Architecture& a, const Architecture& b) const;

  nlohmann::json to_json() const;
  static RankerModel from_json(const nlohmann::json& j);

  // Parameter diagnostics for error messages.
  std::string describe_params() const;

  struct Layout;

 private:
  RankerConfig config_;
  std::vector<double> params_;
};

struct TrainConfig {
  int batch_size = 10;
  int epochs = 100;
  double lr_init = 0.01;
  double lr_final = 1e-5;
  std::uint64_t seed = 0;
  // 0 = every pair each epoch; otherwise a fresh seeded subset of this size
  // per epoch.
  std::size_t max_pairs_per_epoch = 0;

  void validate() const;
};

class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, std::vector<double> trace)
      : NumericError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

using ArchLookup = std::unordered_map<ArchKey, Architecture, ArchKeyHash>;

struct TrainResult {
  std::vector<double> loss_trace;  // mean pairwise BCE per epoch
};

// Pairwise binary cross-entropy over the 2-way softmax, Adam, cosine decay
// from lr_init to lr_final over all steps. Pairs are shuffled each epoch and
// randomly mirrored (a, b, y) -> (b, a, 1 - y).
TrainResult train(RankerModel& model, std::span<const PairLabel> pairs, const TrainConfig& cfg,
                  const ArchLookup& lookup);

// Mean loss over `pairs` and, when grad is non-null, its gradient with
// respect to every parameter (resized to num_params()).
double batch_loss(const RankerModel& model, std::span<const PairLabel> pairs, const ArchLookup& lookup,
                  std::vector<double>* grad);

struct RankedCandidate {
  Architecture arch;
  double score = 0.0;
};

// Universe sorted by mean win probability against `reference`, descending,
// ties by canonical key.
std::vector<RankedCandidate> global_rank(const RankerModel& model, std::span<const Architecture> universe,
                                         std::span<const Architecture> reference);

// Trained pool entries, subsampled to `cap` with a seeded draw when larger.
std::vector<Architecture> choose_reference(const Pyramid& pyramid, std::size_t cap, std::uint64_t seed);

using KeySet = std::unordered_set<ArchKey, ArchKeyHash>;

// k fresh proposals: the top ceil(k/2) non-pool candidates plus a uniform
// draw of the rest from ranks (ceil(k/2), 2k] of the non-pool remainder.
// Throws std::runtime_error when fewer than k fresh candidates exist.
std::vector<Architecture> propose(std::span<const RankedCandidate> ranking, const KeySet& pool_keys, std::size_t k,
                                  std::uint64_t seed);

}  // namespace ranknosh
