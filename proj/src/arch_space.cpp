#include "ranknosh/arch_space.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "ranknosh/errors.hpp"
#include "ranknosh/rng.hpp"

namespace ranknosh {

namespace {

__extension__ typedef unsigned __int128 u128;

constexpr u128 kFnvOffset =
    (static_cast<u128>(0x6c62272e07bb0142ULL) << 64) | 0x62b821756295c58dULL;
constexpr u128 kFnvPrime = (static_cast<u128>(0x0000000001000000ULL) << 64) | 0x000000000000013bULL;

void put_u16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

ArchKey hash_arch(const std::vector<int>& ops, const std::vector<Edge>& edges, int num_ops) {
  // Canonical bytes: num_ops, num_nodes, op per node (u16 LE), then the
  // row-major strict upper triangle of A packed LSB-first.
  std::vector<std::uint8_t> bytes;
  put_u16(bytes, num_ops);
  put_u16(bytes, static_cast<int>(ops.size()));
  for (int op : ops) put_u16(bytes, op);
  const int n = static_cast<int>(ops.size());
  std::uint8_t acc = 0;
  int bit = 0;
  auto e = edges.begin();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      bool set = e != edges.end() && e->first == i && e->second == j;
      if (set) ++e;
      if (set) acc = static_cast<std::uint8_t>(acc | (1u << bit));
      if (++bit == 8) {
        bytes.push_back(acc);
        acc = 0;
        bit = 0;
      }
    }
  }
  if (bit != 0) bytes.push_back(acc);

  u128 h = kFnvOffset;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return ArchKey(static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h));
}

}  // namespace

std::string ArchKey::hex() const {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(hi_),
                static_cast<unsigned long long>(lo_));
  return std::string(buf, 32);
}

ArchKey ArchKey::from_hex(const std::string& text) {
  if (text.size() != 32) throw std::invalid_argument("ArchKey::from_hex: expected 32 hex digits");
  auto parse = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (std::size_t i = off; i < off + 16; ++i) {
      char c = text[i];
      int d = (c >= '0' && c <= '9')   ? c - '0'
              : (c >= 'a' && c <= 'f') ? c - 'a' + 10
              : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                       : -1;
      if (d < 0) throw std::invalid_argument("ArchKey::from_hex: bad digit");
      v = (v << 4) | static_cast<std::uint64_t>(d);
    }
    return v;
  };
  return ArchKey(parse(0), parse(16));
}

Architecture::Architecture(std::vector<int> ops, std::vector<Edge> edges, int num_ops)
    : ops_(std::move(ops)), edges_(std::move(edges)), num_ops_(num_ops) {
  const int n = num_nodes();
  if (n < 1 || n > kMaxNodes) throw SpaceError("architecture: node count out of range");
  for (int op : ops_) {
    if (op < 0 || op >= num_ops_) throw SpaceError("architecture: operation index out of range");
  }
  std::sort(edges_.begin(), edges_.end());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto [s, d] = edges_[i];
    if (s < 0 || d >= n || s >= d) {
      throw SpaceError("architecture: edge (" + std::to_string(s) + "," + std::to_string(d) +
                       ") is not strictly upper-triangular");
    }
    if (i > 0 && edges_[i - 1] == edges_[i]) throw SpaceError("architecture: duplicate edge");
  }
  key_ = hash_arch(ops_, edges_, num_ops_);
}

bool Architecture::has_edge(int src, int dst) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{src, dst});
}

std::vector<std::uint8_t> Architecture::op_matrix() const {
  std::vector<std::uint8_t> h(static_cast<std::size_t>(num_nodes() * num_ops_), 0);
  for (int v = 0; v < num_nodes(); ++v) h[static_cast<std::size_t>(v * num_ops_ + op(v))] = 1;
  return h;
}

std::vector<std::uint8_t> Architecture::adjacency_matrix() const {
  const auto n = static_cast<std::size_t>(num_nodes());
  std::vector<std::uint8_t> a(n * n, 0);
  for (auto [s, d] : edges_) a[static_cast<std::size_t>(s) * n + static_cast<std::size_t>(d)] = 1;
  return a;
}

ArchKey canonical_key(const Architecture& arch) { return arch.key(); }

// ---------------------------------------------------------------------------
// SearchSpaceSpec

void SearchSpaceSpec::validate() const {
  if (num_nodes < 2 || num_nodes > Architecture::kMaxNodes) {
    throw SpaceError("space '" + name + "': num_nodes must be in [2, 64]");
  }
  if (op_vocabulary.size() < 2) throw SpaceError("space '" + name + "': need at least 2 operations");
  std::set<std::string> seen(op_vocabulary.begin(), op_vocabulary.end());
  if (seen.size() != op_vocabulary.size()) {
    throw SpaceError("space '" + name + "': duplicate operation names");
  }
  if (max_edges && *max_edges < 0) throw SpaceError("space '" + name + "': negative max_edges");
  if (!pinned_ops.empty() && static_cast<int>(pinned_ops.size()) != num_nodes) {
    throw SpaceError("space '" + name + "': pinned_ops must have one slot per node");
  }
  for (const auto& p : pinned_ops) {
    if (p && (*p < 0 || *p >= num_ops())) throw SpaceError("space '" + name + "': pinned op out of range");
  }
  if (structure == DagStructure::kFixed) {
    for (auto [s, d] : fixed_edges) {
      if (s < 0 || d >= num_nodes || s >= d) {
        throw SpaceError("space '" + name + "': fixed edge is not strictly upper-triangular");
      }
    }
  } else if (!fixed_edges.empty()) {
    throw SpaceError("space '" + name + "': free_dag spaces take no fixed_edges");
  }
}

std::optional<int> SearchSpaceSpec::pinned_op(int node) const {
  if (pinned_ops.empty()) return std::nullopt;
  return pinned_ops[static_cast<std::size_t>(node)];
}

std::vector<int> SearchSpaceSpec::free_ops() const {
  std::vector<bool> pinned(op_vocabulary.size(), false);
  for (const auto& p : pinned_ops) {
    if (p) pinned[static_cast<std::size_t>(*p)] = true;
  }
  std::vector<int> out;
  for (int o = 0; o < num_ops(); ++o) {
    if (!pinned[static_cast<std::size_t>(o)]) out.push_back(o);
  }
  return out;
}

int SearchSpaceSpec::op_index(const std::string& op_name) const {
  auto it = std::find(op_vocabulary.begin(), op_vocabulary.end(), op_name);
  if (it == op_vocabulary.end()) throw SpaceError("space '" + name + "': unknown operation '" + op_name + "'");
  return static_cast<int>(it - op_vocabulary.begin());
}

namespace {

int num_free_nodes(const SearchSpaceSpec& s) {
  int n = 0;
  for (int v = 0; v < s.num_nodes; ++v) {
    if (!s.pinned_op(v)) ++n;
  }
  return n;
}

int upper_slots(int n) { return n * (n - 1) / 2; }

constexpr u128 kCountLimit = static_cast<u128>(1) << 63;

// Number of legal adjacency patterns, saturated at kCountLimit.
u128 adjacency_count(const SearchSpaceSpec& s) {
  if (s.structure == DagStructure::kFixed) {
    if (s.max_edges && static_cast<int>(s.fixed_edges.size()) > *s.max_edges) return 0;
    return 1;
  }
  const int p = upper_slots(s.num_nodes);
  const int kmax = s.max_edges ? std::min(*s.max_edges, p) : p;
  u128 total = 0;
  u128 binom = 1;  // C(p, k)
  for (int k = 0; k <= kmax; ++k) {
    total += binom;
    if (total >= kCountLimit) return kCountLimit;
    binom = binom * static_cast<u128>(p - k) / static_cast<u128>(k + 1);
    if (binom >= kCountLimit) binom = kCountLimit;
  }
  return total;
}

}  // namespace

std::optional<std::uint64_t> SearchSpaceSpec::legal_count() const {
  validate();
  u128 total = adjacency_count(*this);
  const auto choices = static_cast<u128>(free_ops().size());
  for (int i = 0, k = num_free_nodes(*this); i < k; ++i) {
    total *= choices;
    if (total >= kCountLimit) return std::nullopt;
  }
  return static_cast<std::uint64_t>(total);
}

bool is_member(const SearchSpaceSpec& space, const Architecture& arch) {
  if (arch.num_nodes() != space.num_nodes || arch.num_ops() != space.num_ops()) return false;
  const auto free = space.free_ops();
  for (int v = 0; v < arch.num_nodes(); ++v) {
    if (auto p = space.pinned_op(v)) {
      if (arch.op(v) != *p) return false;
    } else if (!std::binary_search(free.begin(), free.end(), arch.op(v))) {
      return false;
    }
  }
  if (space.max_edges && static_cast<int>(arch.num_edges()) > *space.max_edges) return false;
  if (space.structure == DagStructure::kFixed) {
    auto fixed = space.fixed_edges;
    std::sort(fixed.begin(), fixed.end());
    if (!std::equal(fixed.begin(), fixed.end(), arch.edges().begin(), arch.edges().end())) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sampling

Architecture sample_one(const SearchSpaceSpec& space, Rng& rng) {
  const auto free = space.free_ops();
  if (num_free_nodes(space) > 0 && free.empty()) {
    throw SpaceError("space '" + space.name + "' has no legal architectures (no free operations)");
  }
  if (adjacency_count(space) == 0) {
    throw SpaceError("space '" + space.name + "' has no legal architectures (edge budget)");
  }
  std::vector<int> ops(static_cast<std::size_t>(space.num_nodes));
  for (int v = 0; v < space.num_nodes; ++v) {
    auto p = space.pinned_op(v);
    ops[static_cast<std::size_t>(v)] = p ? *p : free[rng.uniform_index(free.size())];
  }
  if (space.structure == DagStructure::kFixed) {
    return Architecture(std::move(ops), space.fixed_edges, space.num_ops());
  }
  // Fair coin per upper-triangular slot, rejected when over the edge budget:
  // uniform over every legal pattern.
  const int n = space.num_nodes;
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    std::vector<Edge> edges;
    std::uint64_t bits = 0;
    int left = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (left == 0) {
          bits = rng.next_u64();
          left = 64;
        }
        if (bits & 1u) edges.emplace_back(i, j);
        bits >>= 1;
        --left;
      }
    }
    if (!space.max_edges || static_cast<int>(edges.size()) <= *space.max_edges) {
      return Architecture(std::move(ops), std::move(edges), space.num_ops());
    }
  }
  throw SpaceError("space '" + space.name + "': rejection sampling exceeded " +
                   std::to_string(kMaxRejections) + " attempts");
}

std::vector<Architecture> sample(const SearchSpaceSpec& space, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  space.validate();
  Rng rng(seed);
  std::vector<Architecture> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(space, rng));
  return out;
}

std::vector<Architecture> enumerate(const SearchSpaceSpec& space) {
  auto count = space.legal_count();
  if (!count || *count > 1000000) throw SpaceError("enumerate: space '" + space.name + "' is too large");
  const auto free = space.free_ops();
  std::vector<int> free_nodes;
  for (int v = 0; v < space.num_nodes; ++v) {
    if (!space.pinned_op(v)) free_nodes.push_back(v);
  }

  std::vector<std::vector<Edge>> wirings;
  if (space.structure == DagStructure::kFixed) {
    if (adjacency_count(space) > 0) wirings.push_back(space.fixed_edges);
  } else {
    std::vector<Edge> slots;
    for (int i = 0; i < space.num_nodes; ++i) {
      for (int j = i + 1; j < space.num_nodes; ++j) slots.emplace_back(i, j);
    }
    if (slots.size() > 24) throw SpaceError("enumerate: too many adjacency slots");
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots.size()); ++mask) {
      std::vector<Edge> edges;
      for (std::size_t b = 0; b < slots.size(); ++b) {
        if (mask & (std::uint64_t{1} << b)) edges.push_back(slots[b]);
      }
      if (!space.max_edges || static_cast<int>(edges.size()) <= *space.max_edges) {
        wirings.push_back(std::move(edges));
      }
    }
  }

  std::vector<Architecture> out;
  out.reserve(static_cast<std::size_t>(*count));
  std::vector<int> ops(static_cast<std::size_t>(space.num_nodes));
  for (int v = 0; v < space.num_nodes; ++v) {
    if (auto p = space.pinned_op(v)) ops[static_cast<std::size_t>(v)] = *p;
  }
  if (!free_nodes.empty() && free.empty()) return out;
  std::vector<std::size_t> digit(free_nodes.size(), 0);
  for (const auto& wiring : wirings) {
    std::fill(digit.begin(), digit.end(), 0);
    while (true) {
      for (std::size_t i = 0; i < free_nodes.size(); ++i) {
        ops[static_cast<std::size_t>(free_nodes[i])] = free[digit[i]];
      }
      out.emplace_back(ops, wiring, space.num_ops());
      std::size_t i = 0;
      while (i < digit.size() && ++digit[i] == free.size()) digit[i++] = 0;
      if (i == digit.size()) break;
    }
  }
  return out;
}

CandidateUniverse subsample_universe(const SearchSpaceSpec& space, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("subsample_universe: m must be >= 1");
  space.validate();
  Rng rng(seed);
  auto count = space.legal_count();
  if (count && *count <= m) {
    auto all = enumerate(space);
    rng.shuffle(all);
    return all;
  }
  CandidateUniverse out;
  out.reserve(m);
  std::unordered_set<ArchKey, ArchKeyHash> seen;
  seen.reserve(m * 2);
  while (out.size() < m) {
    Architecture a = sample_one(space, rng);
    if (seen.insert(a.key()).second) out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presets

namespace spaces {

SearchSpaceSpec nb201_like() {
  SearchSpaceSpec s;
  s.name = "nb201";
  s.num_nodes = 8;
  s.op_vocabulary = {"input",        "output",       "nor_conv_3x3", "nor_conv_1x1",
                     "avg_pool_3x3", "skip_connect", "none"};
  s.structure = DagStructure::kFixed;
  // Node order: input, e(0,1), e(0,2), e(1,2), e(0,3), e(1,3), e(2,3), output.
  s.fixed_edges = {{0, 1}, {0, 2}, {0, 4}, {1, 3}, {1, 5}, {2, 6}, {3, 6}, {4, 7}, {5, 7}, {6, 7}};
  s.pinned_ops.assign(8, std::nullopt);
  s.pinned_ops[0] = 0;
  s.pinned_ops[7] = 1;
  return s;
}

SearchSpaceSpec nb101_like() {
  SearchSpaceSpec s;
  s.name = "nb101";
  s.num_nodes = 7;
  s.op_vocabulary = {"input", "output", "conv3x3-bn-relu", "conv1x1-bn-relu", "maxpool3x3"};
  s.structure = DagStructure::kFree;
  s.max_edges = 9;
  s.pinned_ops.assign(7, std::nullopt);
  s.pinned_ops[0] = 0;
  s.pinned_ops[6] = 1;
  return s;
}

SearchSpaceSpec darts_like() {
  SearchSpaceSpec s;
  s.name = "darts";
  s.num_nodes = 11;
  s.op_vocabulary = {"c_k-2",        "c_k-1",        "output",       "sep_conv_3x3",
                     "sep_conv_5x5", "dil_conv_3x3", "dil_conv_5x5", "max_pool_3x3",
                     "avg_pool_3x3", "skip_connect"};
  s.structure = DagStructure::kFixed;
  // Op nodes 2..9, two per intermediate DARTS node I0..I3. I0 reads the two
  // cell inputs; I_j reads I_{j-1} and I_{j-2} (cell inputs standing in).
  s.fixed_edges = {{0, 2}, {1, 3},                  // I0
                   {1, 4}, {2, 5}, {3, 5},          // I1 <- c_k-1, I0
                   {2, 6}, {3, 6}, {4, 7}, {5, 7},  // I2 <- I0, I1
                   {4, 8}, {5, 8}, {6, 9}, {7, 9},  // I3 <- I1, I2
                   {2, 10}, {3, 10}, {4, 10}, {5, 10}, {6, 10}, {7, 10}, {8, 10}, {9, 10}};
  s.pinned_ops.assign(11, std::nullopt);
  s.pinned_ops[0] = 0;
  s.pinned_ops[1] = 1;
  s.pinned_ops[10] = 2;
  return s;
}

SearchSpaceSpec toy3() {
  SearchSpaceSpec s;
  s.name = "toy3";
  s.num_nodes = 3;
  s.op_vocabulary = {"a", "b", "c"};
  s.structure = DagStructure::kFree;
  return s;
}

SearchSpaceSpec by_name(const std::string& name) {
  if (name == "nb201") return nb201_like();
  if (name == "nb101") return nb101_like();
  if (name == "darts") return darts_like();
  if (name == "toy3") return toy3();
  throw SpaceError("unknown space preset '" + name + "' (expected nb201, nb101, darts, toy3)");
}

}  // namespace spaces

}  // namespace ranknosh
