#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ranknosh {

class Rng;

// Content-derived identity of an encoded architecture: 128-bit FNV-1a over the
// canonical byte serialization of (ops, adjacency). Stable across processes.
class ArchKey {
 public:
  constexpr ArchKey() = default;
  constexpr ArchKey(std::uint64_t hi, std::uint64_t lo) : hi_(hi), lo_(lo) {}

  std::uint64_t hi() const { return hi_; }
  std::uint64_t lo() const { return lo_; }

  // 32 lowercase hex digits.
  std::string hex() const;
  static ArchKey from_hex(const std::string& text);

  friend constexpr auto operator<=>(const ArchKey&, const ArchKey&) = default;

 private:
  std::uint64_t hi_ = 0;
  std::uint64_t lo_ = 0;
};

struct ArchKeyHash {
  std::size_t operator()(const ArchKey& k) const noexcept {
    return static_cast<std::size_t>(k.lo() ^ (k.hi() * 0x9e3779b97f4a7c15ULL));
  }
};

using Edge = std::pair<int, int>;

enum class DagStructure { kFixed, kFree };

// Description of a node-encoded cell search space.
//
// Every architecture has num_nodes nodes in a fixed topological order; node v
// carries one operation from op_vocabulary. Nodes listed in pinned_ops always
// carry that operation (input/output markers), and pinned operations are not
// offered to free nodes. fixed_dag spaces share one wiring (fixed_edges);
// free_dag spaces allow any strictly-upper-triangular wiring with at most
// max_edges edges.
struct SearchSpaceSpec {
  std::string name;
  int num_nodes = 0;
  std::vector<std::string> op_vocabulary;
  DagStructure structure = DagStructure::kFixed;
  std::optional<int> max_edges;
  std::vector<Edge> fixed_edges;
  std::vector<std::optional<int>> pinned_ops;  // empty, or one slot per node

  // Throws SpaceError when an invariant is broken.
  void validate() const;

  int num_ops() const { return static_cast<int>(op_vocabulary.size()); }
  std::optional<int> pinned_op(int node) const;
  // Operation indices a free node may take.
  std::vector<int> free_ops() const;
  // Exact count of legal encodings, or nullopt if it does not fit in 63 bits.
  std::optional<std::uint64_t> legal_count() const;
  int op_index(const std::string& name) const;

  friend bool operator==(const SearchSpaceSpec&, const SearchSpaceSpec&) = default;
};

// An encoded cell: operation index per node plus a strictly upper-triangular
// adjacency. Immutable after construction.
class Architecture {
 public:
  static constexpr int kMaxNodes = 64;

  Architecture() = default;
  // Throws SpaceError on out-of-range ops, edges that are not src < dst,
  // or duplicate edges.
  Architecture(std::vector<int> ops, std::vector<Edge> edges, int num_ops);

  int num_nodes() const { return static_cast<int>(ops_.size()); }
  int num_ops() const { return num_ops_; }
  std::span<const int> ops() const { return ops_; }
  int op(int node) const { return ops_[static_cast<std::size_t>(node)]; }
  // Sorted ascending by (src, dst).
  std::span<const Edge> edges() const { return edges_; }
  std::size_t num_edges() const { return edges_.size(); }
  bool has_edge(int src, int dst) const;
  const ArchKey& key() const { return key_; }

  // Row-major |V| x |O| one-hot operation matrix.
  std::vector<std::uint8_t> op_matrix() const;
  // Row-major |V| x |V| adjacency matrix.
  std::vector<std::uint8_t> adjacency_matrix() const;

  friend bool operator==(const Architecture& a, const Architecture& b) {
    return a.num_ops_ == b.num_ops_ && a.ops_ == b.ops_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<int> ops_;
  std::vector<Edge> edges_;
  int num_ops_ = 0;
  ArchKey key_;
};

// Canonical identity token of an architecture (see ArchKey).
ArchKey canonical_key(const Architecture& arch);

// True when arch is a legal member of space.
bool is_member(const SearchSpaceSpec& space, const Architecture& arch);

// n architectures drawn uniformly over the space's legal encodings.
// Duplicates are allowed. Throws SpaceError if the space has no legal member
// or free_dag rejection sampling exceeds kMaxRejections.
inline constexpr int kMaxRejections = 100000;
std::vector<Architecture> sample(const SearchSpaceSpec& space, std::size_t n, std::uint64_t seed);
Architecture sample_one(const SearchSpaceSpec& space, Rng& rng);

using CandidateUniverse = std::vector<Architecture>;

// Up to m distinct architectures. When the space holds at most m legal
// encodings, all of them are returned (in a seeded shuffled order).
CandidateUniverse subsample_universe(const SearchSpaceSpec& space, std::size_t m, std::uint64_t seed);

// Every legal encoding; only for small spaces (throws SpaceError above 10^6).
std::vector<Architecture> enumerate(const SearchSpaceSpec& space);

// Preset spaces used by the synthetic generator and the CLI.
namespace spaces {
// NAS-Bench-201 cell after the edge-to-node transform: input, six op nodes
// (one per original edge), output.
SearchSpaceSpec nb201_like();
// NAS-Bench-101 cell: 7 nodes, input/output pinned, at most 9 edges.
SearchSpaceSpec nb101_like();
// DARTS-like cell with eight op nodes on a fixed wiring (see README).
SearchSpaceSpec darts_like();
// Tiny free_dag space used by gradient checks: 3 nodes, 3 ops.
SearchSpaceSpec toy3();
SearchSpaceSpec by_name(const std::string& name);
}  // namespace spaces

}  // namespace ranknosh
