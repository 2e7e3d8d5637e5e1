#include "ranknosh/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ranknosh/rng.hpp"

namespace ranknosh {

std::vector<PairLabel> generate_pairs(const std::vector<ContextEntry>& context) {
  std::vector<PairLabel> out;
  for (std::size_t i = 0; i < context.size(); ++i) {
    const ContextEntry& a = context[i];
    for (std::size_t j = i + 1; j < context.size(); ++j) {
      const ContextEntry& b = context[j];
      int ea = a.entry->trained_epochs;
      int eb = b.entry->trained_epochs;
      int y;
      if (ea != eb) {
        y = ea < eb ? 1 : 0;
      } else if (a.score_used != b.score_used) {
        y = a.score_used < b.score_used ? 1 : 0;
      } else {
        continue;
      }
      out.push_back({a.entry->key(), b.entry->key(), y});
    }
  }
  return out;
}

// Flat parameter offsets.
struct RankerModel::Layout {
  struct Layer {
    int in = 0;
    std::size_t eps = 0, w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  };
  std::vector<Layer> layers;
  std::size_t h1 = 0, c1 = 0, h2 = 0, c2 = 0, total = 0;

  explicit Layout(const RankerConfig& c) {
    std::size_t at = 0;
    const auto d = static_cast<std::size_t>(c.embedding_dim);
    for (int l = 0; l < c.layers; ++l) {
      Layer L;
      L.in = l == 0 ? c.num_ops : c.embedding_dim;
      const auto in = static_cast<std::size_t>(L.in);
      L.eps = at;
      at += 1;
      L.w1 = at;
      at += d * in;
      L.b1 = at;
      at += d;
      L.w2 = at;
      at += d * d;
      L.b2 = at;
      at += d;
      layers.push_back(L);
    }
    const auto hid = static_cast<std::size_t>(c.hidden_dim);
    h1 = at;
    at += hid * 2 * d;
    c1 = at;
    at += hid;
    h2 = at;
    at += 2 * hid;
    c2 = at;
    at += 2;
    total = at;
  }
};

namespace {

void check_config(const RankerConfig& c) {
  if (c.num_ops < 1 || c.layers < 1 || c.embedding_dim < 1 || c.hidden_dim < 1 || !(c.init_scale > 0.0)) {
    throw std::invalid_argument("ranker config: num_ops, layers, embedding_dim, hidden_dim and init_scale must be positive");
  }
}

// Node features and undirected neighbour lists of one cell.
struct Graph {
  int n = 0;
  std::vector<int> ops;
  std::vector<std::vector<int>> nbrs;

  Graph(const Architecture& arch, int num_ops) : n(arch.num_nodes()) {
    if (arch.num_ops() != num_ops) {
      throw std::invalid_argument("architecture op vocabulary size does not match the ranker");
    }
    ops.assign(arch.ops().begin(), arch.ops().end());
    nbrs.resize(static_cast<std::size_t>(n));
    for (const auto& [s, t] : arch.edges()) {
      nbrs[static_cast<std::size_t>(s)].push_back(t);
      nbrs[static_cast<std::size_t>(t)].push_back(s);
    }
  }
};

// Per-layer activations kept for the backward pass.
struct Trace {
  std::vector<std::vector<double>> x;  // x[l]: input of layer l, n * in
  std::vector<std::vector<double>> s, z1, z2;
  std::vector<double> emb;
};

using Layout = RankerModel::Layout;

void encode(const RankerConfig& cfg, const Layout& lay, const double* p, const Graph& g, Trace& tr) {
  const int d = cfg.embedding_dim;
  const int n = g.n;
  const auto L = lay.layers.size();
  tr.x.resize(L + 1);
  tr.s.resize(L);
  tr.z1.resize(L);
  tr.z2.resize(L);
  auto& x0 = tr.x[0];
  x0.assign(static_cast<std::size_t>(n * cfg.num_ops), 0.0);
  for (int v = 0; v < n; ++v) x0[static_cast<std::size_t>(v * cfg.num_ops + g.ops[static_cast<std::size_t>(v)])] = 1.0;

  for (std::size_t l = 0; l < L; ++l) {
    const auto& ly = lay.layers[l];
    const int in = ly.in;
    const auto& x = tr.x[l];
    auto& s = tr.s[l];
    auto& z1 = tr.z1[l];
    auto& z2 = tr.z2[l];
    auto& out = tr.x[l + 1];
    s.assign(static_cast<std::size_t>(n * in), 0.0);
    const double self = 1.0 + p[ly.eps];
    for (int v = 0; v < n; ++v) {
      double* sv = &s[static_cast<std::size_t>(v * in)];
      const double* xv = &x[static_cast<std::size_t>(v * in)];
      for (int k = 0; k < in; ++k) sv[k] = self * xv[k];
      for (int u : g.nbrs[static_cast<std::size_t>(v)]) {
        const double* xu = &x[static_cast<std::size_t>(u * in)];
        for (int k = 0; k < in; ++k) sv[k] += xu[k];
      }
    }
    z1.assign(static_cast<std::size_t>(n * d), 0.0);
    z2.assign(static_cast<std::size_t>(n * d), 0.0);
    out.assign(static_cast<std::size_t>(n * d), 0.0);
    const bool last = l + 1 == L;
    for (int v = 0; v < n; ++v) {
      const double* sv = &s[static_cast<std::size_t>(v * in)];
      double* z1v = &z1[static_cast<std::size_t>(v * d)];
      for (int i = 0; i < d; ++i) {
        const double* w = p + ly.w1 + static_cast<std::size_t>(i * in);
        double acc = p[ly.b1 + static_cast<std::size_t>(i)];
        for (int k = 0; k < in; ++k) acc += w[k] * sv[k];
        z1v[i] = acc;
      }
      double* z2v = &z2[static_cast<std::size_t>(v * d)];
      double* ov = &out[static_cast<std::size_t>(v * d)];
      for (int i = 0; i < d; ++i) {
        const double* w = p + ly.w2 + static_cast<std::size_t>(i * d);
        double acc = p[ly.b2 + static_cast<std::size_t>(i)];
        for (int k = 0; k < d; ++k) acc += w[k] * std::max(z1v[k], 0.0);
        z2v[i] = acc;
        ov[i] = last ? acc : std::max(acc, 0.0);
      }
    }
  }
  tr.emb.assign(static_cast<std::size_t>(d), 0.0);
  const auto& xl = tr.x[L];
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < d; ++i) tr.emb[static_cast<std::size_t>(i)] += xl[static_cast<std::size_t>(v * d + i)];
  for (auto& e : tr.emb) e /= n;
}

void encode_backward(const RankerConfig& cfg, const Layout& lay, const double* p, const Graph& g, const Trace& tr,
                     const std::vector<double>& demb, double* grad) {
  const int d = cfg.embedding_dim;
  const int n = g.n;
  const auto L = lay.layers.size();
  thread_local std::vector<double> dx, ds, dxin, dz2, dz1;
  dx.assign(static_cast<std::size_t>(n * d), 0.0);
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < d; ++i) dx[static_cast<std::size_t>(v * d + i)] = demb[static_cast<std::size_t>(i)] / n;

  dz2.assign(static_cast<std::size_t>(d), 0.0);
  dz1.assign(static_cast<std::size_t>(d), 0.0);
  for (std::size_t li = L; li-- > 0;) {
    const auto& ly = lay.layers[li];
    const int in = ly.in;
    const bool last = li + 1 == L;
    const auto& s = tr.s[li];
    const auto& z1 = tr.z1[li];
    const auto& z2 = tr.z2[li];
    const auto& x = tr.x[li];
    ds.assign(static_cast<std::size_t>(n * in), 0.0);
    for (int v = 0; v < n; ++v) {
      const double* z1v = &z1[static_cast<std::size_t>(v * d)];
      const double* z2v = &z2[static_cast<std::size_t>(v * d)];
      const double* sv = &s[static_cast<std::size_t>(v * in)];
      for (int i = 0; i < d; ++i) {
        double g2 = dx[static_cast<std::size_t>(v * d + i)];
        dz2[static_cast<std::size_t>(i)] = (last || z2v[i] > 0.0) ? g2 : 0.0;
      }
      std::fill(dz1.begin(), dz1.end(), 0.0);
      for (int i = 0; i < d; ++i) {
        const double gi = dz2[static_cast<std::size_t>(i)];
        if (gi == 0.0) continue;
        grad[ly.b2 + static_cast<std::size_t>(i)] += gi;
        const double* w = p + ly.w2 + static_cast<std::size_t>(i * d);
        double* gw = grad + ly.w2 + static_cast<std::size_t>(i * d);
        for (int k = 0; k < d; ++k) {
          gw[k] += gi * std::max(z1v[k], 0.0);
          dz1[static_cast<std::size_t>(k)] += gi * w[k];
        }
      }
      for (int k = 0; k < d; ++k)
        if (z1v[k] <= 0.0) dz1[static_cast<std::size_t>(k)] = 0.0;
      double* dsv = &ds[static_cast<std::size_t>(v * in)];
      for (int i = 0; i < d; ++i) {
        const double gi = dz1[static_cast<std::size_t>(i)];
        if (gi == 0.0) continue;
        grad[ly.b1 + static_cast<std::size_t>(i)] += gi;
        const double* w = p + ly.w1 + static_cast<std::size_t>(i * in);
        double* gw = grad + ly.w1 + static_cast<std::size_t>(i * in);
        for (int k = 0; k < in; ++k) {
          gw[k] += gi * sv[k];
          dsv[k] += gi * w[k];
        }
      }
    }
    double deps = 0.0;
    for (std::size_t k = 0; k < ds.size(); ++k) deps += ds[k] * x[k];
    grad[ly.eps] += deps;
    if (li == 0) break;
    const double self = 1.0 + p[ly.eps];
    dxin.assign(static_cast<std::size_t>(n * in), 0.0);
    for (int v = 0; v < n; ++v) {
      double* o = &dxin[static_cast<std::size_t>(v * in)];
      const double* dsv = &ds[static_cast<std::size_t>(v * in)];
      for (int k = 0; k < in; ++k) o[k] += self * dsv[k];
      for (int u : g.nbrs[static_cast<std::size_t>(v)]) {
        const double* dsu = &ds[static_cast<std::size_t>(u * in)];
        for (int k = 0; k < in; ++k) o[k] += dsu[k];
      }
    }
    std::swap(dx, dxin);
  }
}

// Head projections of one embedding: P = H1a f, Q = H1b f.
struct Proj {
  std::vector<double> P, Q;
};

void project_into(const RankerConfig& cfg, const Layout& lay, const double* p, const std::vector<double>& f, Proj& r) {
  const int d = cfg.embedding_dim;
  const int hid = cfg.hidden_dim;
  r.P.assign(static_cast<std::size_t>(hid), 0.0);
  r.Q.assign(static_cast<std::size_t>(hid), 0.0);
  for (int j = 0; j < hid; ++j) {
    const double* row = p + lay.h1 + static_cast<std::size_t>(j * 2 * d);
    double a = 0.0, b = 0.0;
    for (int k = 0; k < d; ++k) {
      a += row[k] * f[static_cast<std::size_t>(k)];
      b += row[d + k] * f[static_cast<std::size_t>(k)];
    }
    r.P[static_cast<std::size_t>(j)] = a;
    r.Q[static_cast<std::size_t>(j)] = b;
  }
}

Proj project(const RankerConfig& cfg, const Layout& lay, const double* p, const std::vector<double>& f) {
  Proj r;
  project_into(cfg, lay, p, f, r);
  return r;
}

// g(x, y) for one ordered pair; writes the hidden pre-activation to u.
void head_half(const RankerConfig& cfg, const Layout& lay, const double* p, const Proj& x, const Proj& y,
               std::vector<double>& u, double out[2]) {
  const int hid = cfg.hidden_dim;
  u.resize(static_cast<std::size_t>(hid));
  for (int j = 0; j < hid; ++j) {
    const auto J = static_cast<std::size_t>(j);
    u[J] = x.P[J] + y.Q[J] + p[lay.c1 + J];
  }
  for (int c = 0; c < 2; ++c) {
    const double* row = p + lay.h2 + static_cast<std::size_t>(c * hid);
    double acc = p[lay.c2 + static_cast<std::size_t>(c)];
    for (int j = 0; j < hid; ++j) acc += row[j] * std::max(u[static_cast<std::size_t>(j)], 0.0);
    out[c] = acc;
  }
}

// Logit difference z1 - z0 for the ordered pair (a, b).
double logit_margin(const RankerConfig& cfg, const Layout& lay, const double* p, const Proj& a, const Proj& b,
                    std::vector<double>& uab, std::vector<double>& uba) {
  double gab[2], gba[2] = {0.0, 0.0};
  head_half(cfg, lay, p, a, b, uab, gab);
  if (cfg.antisymmetric) head_half(cfg, lay, p, b, a, uba, gba);
  return (gab[1] - gba[1]) - (gab[0] - gba[0]);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Backward through the head for one pair given dL/dz (2 entries).
void head_backward(const RankerConfig& cfg, const Layout& lay, const double* p, const std::vector<double>& u,
                   const double dg[2], double* grad, std::vector<double>& dP_x, std::vector<double>& dQ_y) {
  const int hid = cfg.hidden_dim;
  for (int c = 0; c < 2; ++c) grad[lay.c2 + static_cast<std::size_t>(c)] += dg[c];
  for (int j = 0; j < hid; ++j) {
    const auto J = static_cast<std::size_t>(j);
    const double h = std::max(u[J], 0.0);
    double dh = 0.0;
    for (int c = 0; c < 2; ++c) {
      const std::size_t idx = lay.h2 + static_cast<std::size_t>(c * hid) + J;
      grad[idx] += dg[c] * h;
      dh += dg[c] * p[idx];
    }
    if (u[J] <= 0.0) continue;
    grad[lay.c1 + J] += dh;
    dP_x[J] += dh;
    dQ_y[J] += dh;
  }
}

void check_finite(const RankerModel& model, double value, const char* where) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("non-finite value in ranker ") + where + "; " + model.describe_params());
  }
}

struct Resolved {
  std::vector<Graph> graphs;
  std::vector<std::size_t> ia, ib;
  std::vector<int> y;
};

Resolved resolve(const RankerModel& model, std::span<const PairLabel> pairs, const ArchLookup& lookup) {
  Resolved r;
  std::unordered_map<ArchKey, std::size_t, ArchKeyHash> index;
  auto get = [&](const ArchKey& k) {
    auto it = index.find(k);
    if (it != index.end()) return it->second;
    auto found = lookup.find(k);
    if (found == lookup.end()) throw std::invalid_argument("pair references unknown architecture " + k.hex());
    r.graphs.emplace_back(found->second, model.config().num_ops);
    index.emplace(k, r.graphs.size() - 1);
    return r.graphs.size() - 1;
  };
  for (const auto& pl : pairs) {
    if (pl.y != 0 && pl.y != 1) throw std::invalid_argument("pair label must be 0 or 1");
    r.ia.push_back(get(pl.a));
    r.ib.push_back(get(pl.b));
    r.y.push_back(pl.y);
  }
  return r;
}

// Mean loss over the selected pairs (with optional mirroring) and its gradient.
double loss_grad(const RankerModel& model, const Layout& lay, const Resolved& rs, std::span<const std::size_t> sel,
                 std::span<const char> mirror, double* grad) {
  const RankerConfig& cfg = model.config();
  const double* p = model.params().data();
  const int hid = cfg.hidden_dim;
  const int d = cfg.embedding_dim;

  // Encode each distinct architecture of the batch once.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  thread_local std::vector<std::size_t> slot_of, uniq;
  thread_local std::vector<Trace> traces;
  thread_local std::vector<Proj> proj;
  thread_local std::vector<std::vector<double>> dP, dQ;
  slot_of.assign(rs.graphs.size(), kNone);
  uniq.clear();
  for (std::size_t s : sel) {
    for (std::size_t g : {rs.ia[s], rs.ib[s]}) {
      if (slot_of[g] == kNone) {
        slot_of[g] = uniq.size();
        uniq.push_back(g);
      }
    }
  }
  if (traces.size() < uniq.size()) {
    traces.resize(uniq.size());
    proj.resize(uniq.size());
    dP.resize(uniq.size());
    dQ.resize(uniq.size());
  }
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    encode(cfg, lay, p, rs.graphs[uniq[i]], traces[i]);
    project_into(cfg, lay, p, traces[i].emb, proj[i]);
    if (grad) {
      dP[i].assign(static_cast<std::size_t>(hid), 0.0);
      dQ[i].assign(static_cast<std::size_t>(hid), 0.0);
    }
  }

  const double scale = 1.0 / static_cast<double>(sel.size());
  double total = 0.0;
  thread_local std::vector<double> uab, uba, df;
  for (std::size_t t = 0; t < sel.size(); ++t) {
    const std::size_t s = sel[t];
    std::size_t a = slot_of[rs.ia[s]];
    std::size_t b = slot_of[rs.ib[s]];
    int y = rs.y[s];
    if (!mirror.empty() && mirror[t]) {
      std::swap(a, b);
      y = 1 - y;
    }
    const double m = logit_margin(cfg, lay, p, proj[a], proj[b], uab, uba);
    // p1 = sigmoid(m); loss = -log p_y.
    const double loss = y == 1 ? softplus(-m) : softplus(m);
    total += loss;
    if (!grad) continue;
    const double p1 = sigmoid(m);
    const double dz1 = (p1 - (y == 1 ? 1.0 : 0.0)) * scale;
    const double dg[2] = {-dz1, dz1};
    head_backward(cfg, lay, p, uab, dg, grad, dP[a], dQ[b]);
    if (cfg.antisymmetric) {
      const double ndg[2] = {dz1, -dz1};
      head_backward(cfg, lay, p, uba, ndg, grad, dP[b], dQ[a]);
    }
  }
  check_finite(model, total, "loss");
  if (grad) {
    for (std::size_t i = 0; i < uniq.size(); ++i) {
      const auto& f = traces[i].emb;
      df.assign(static_cast<std::size_t>(d), 0.0);
      for (int j = 0; j < hid; ++j) {
        const auto J = static_cast<std::size_t>(j);
        const double gp = dP[i][J], gq = dQ[i][J];
        if (gp == 0.0 && gq == 0.0) continue;
        const std::size_t row = lay.h1 + static_cast<std::size_t>(j * 2 * d);
        for (int k = 0; k < d; ++k) {
          const auto K = static_cast<std::size_t>(k);
          grad[row + K] += gp * f[K];
          grad[row + static_cast<std::size_t>(d) + K] += gq * f[K];
          df[K] += gp * p[row + K] + gq * p[row + static_cast<std::size_t>(d) + K];
        }
      }
      encode_backward(cfg, lay, p, rs.graphs[uniq[i]], traces[i], df, grad);
    }
  }
  return total * scale;
}

}  // namespace

RankerModel::RankerModel(RankerConfig config, std::uint64_t seed) : config_(config) {
  check_config(config_);
  Layout lay(config_);
  params_.resize(lay.total);
  Rng rng(seed);
  for (auto& v : params_) v = rng.uniform(-config_.init_scale, config_.init_scale);
}

std::vector<double> RankerModel::embed(const Architecture& arch) const {
  Layout lay(config_);
  Trace tr;
  encode(config_, lay, params_.data(), Graph(arch, config_.num_ops), tr);
  return tr.emb;
}

double RankerModel::forward(const Architecture& a, const Architecture& b) const {
  Layout lay(config_);
  const double* p = params_.data();
  Proj pa = project(config_, lay, p, embed(a));
  Proj pb = project(config_, lay, p, embed(b));
  std::vector<double> u1, u2;
  const double m = logit_margin(config_, lay, p, pa, pb, u1, u2);
  check_finite(*this, m, "forward");
  return sigmoid(-m);
}

std::string RankerModel::describe_params() const {
  double sq = 0.0, mx = 0.0;
  std::size_t bad = 0;
  for (double v : params_) {
    if (!std::isfinite(v)) {
      ++bad;
      continue;
    }
    sq += v * v;
    mx = std::max(mx, std::abs(v));
  }
  std::ostringstream os;
  os << "params=" << params_.size() << " l2=" << std::sqrt(sq) << " max_abs=" << mx << " non_finite=" << bad;
  return os.str();
}

nlohmann::json RankerModel::to_json() const {
  return {{"num_ops", config_.num_ops},       {"layers", config_.layers},
          {"embedding_dim", config_.embedding_dim}, {"hidden_dim", config_.hidden_dim},
          {"antisymmetric", config_.antisymmetric}, {"init_scale", config_.init_scale},
          {"params", params_}};
}

RankerModel RankerModel::from_json(const nlohmann::json& j) {
  RankerModel m;
  m.config_.num_ops = j.at("num_ops").get<int>();
  m.config_.layers = j.at("layers").get<int>();
  m.config_.embedding_dim = j.at("embedding_dim").get<int>();
  m.config_.hidden_dim = j.at("hidden_dim").get<int>();
  m.config_.antisymmetric = j.at("antisymmetric").get<bool>();
  m.config_.init_scale = j.at("init_scale").get<double>();
  check_config(m.config_);
  m.params_ = j.at("params").get<std::vector<double>>();
  if (m.params_.size() != Layout(m.config_).total) throw std::invalid_argument("ranker params: wrong count");
  return m;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("ranker batch size must be >= 1");
  if (epochs < 1) throw ConfigError("ranker epochs must be >= 1");
  if (!(lr_init > 0.0) || !(lr_final > 0.0) || lr_final > lr_init) {
    throw ConfigError("ranker learning rates must satisfy 0 < lr_final <= lr_init");
  }
}

double batch_loss(const RankerModel& model, std::span<const PairLabel> pairs, const ArchLookup& lookup,
                  std::vector<double>* grad) {
  if (pairs.empty()) throw std::invalid_argument("batch_loss: no pairs");
  Layout lay(model.config());
  Resolved rs = resolve(model, pairs, lookup);
  std::vector<std::size_t> sel(pairs.size());
  for (std::size_t i = 0; i < sel.size(); ++i) sel[i] = i;
  if (grad) grad->assign(model.num_params(), 0.0);
  return loss_grad(model, lay, rs, sel, {}, grad ? grad->data() : nullptr);
}

TrainResult train(RankerModel& model, std::span<const PairLabel> pairs, const TrainConfig& cfg,
                  const ArchLookup& lookup) {
  cfg.validate();
  if (pairs.empty()) throw std::invalid_argument("train: no labelled pairs");
  Layout lay(model.config());
  Resolved rs = resolve(model, pairs, lookup);
  const std::size_t P = pairs.size();
  const std::size_t per_epoch = cfg.max_pairs_per_epoch > 0 ? std::min(P, cfg.max_pairs_per_epoch) : P;
  const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = (per_epoch + B - 1) / B;
  const double total_steps = static_cast<double>(steps_per_epoch) * cfg.epochs;

  const std::size_t np = model.num_params();
  std::vector<double> m(np, 0.0), v(np, 0.0), grad(np);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;
  std::size_t step = 0;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(P);
  for (std::size_t i = 0; i < P; ++i) order[i] = i;
  std::vector<char> mirror(per_epoch);
  TrainResult result;
  auto params = model.params();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (auto& f : mirror) f = rng.coin() ? 1 : 0;
    double sum = 0.0;
    for (std::size_t start = 0; start < per_epoch; start += B) {
      const std::size_t end = std::min(per_epoch, start + B);
      std::span<const std::size_t> sel(order.data() + start, end - start);
      std::span<const char> mir(mirror.data() + start, end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss;
      try {
        loss = loss_grad(model, lay, rs, sel, mir, grad.data());
      } catch (const NumericError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch), result.loss_trace);
      }
      sum += loss * static_cast<double>(end - start);
      const double lr = cfg.lr_final + 0.5 * (cfg.lr_init - cfg.lr_final) *
                                           (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      ++step;
      b1t *= b1;
      b2t *= b2;
      for (std::size_t i = 0; i < np; ++i) {
        m[i] = b1 * m[i] + (1 - b1) * grad[i];
        v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
        const double mh = m[i] / (1 - b1t);
        const double vh = v[i] / (1 - b2t);
        params[i] -= lr * mh / (std::sqrt(vh) + eps);
      }
    }
    const double mean = sum / static_cast<double>(per_epoch);
    result.loss_trace.push_back(mean);
    if (!std::isfinite(mean)) {
      throw TrainingError("ranker training diverged at epoch " + std::to_string(epoch) + "; " +
                              model.describe_params(),
                          result.loss_trace);
    }
  }
  return result;
}

std::vector<RankedCandidate> global_rank(const RankerModel& model, std::span<const Architecture> universe,
                                         std::span<const Architecture> reference) {
  if (reference.empty()) throw std::invalid_argument("global_rank: empty reference set");
  const RankerConfig& cfg = model.config();
  Layout lay(cfg);
  const double* p = model.params().data();
  std::vector<Proj> refs;
  refs.reserve(reference.size());
  for (const auto& r : reference) refs.push_back(project(cfg, lay, p, model.embed(r)));
  std::vector<RankedCandidate> out;
  out.reserve(universe.size());
  std::vector<double> u1, u2;
  for (const auto& a : universe) {
    Proj pa = project(cfg, lay, p, model.embed(a));
    double sum = 0.0;
    for (const auto& pr : refs) sum += sigmoid(-logit_margin(cfg, lay, p, pa, pr, u1, u2));
    const double score = sum / static_cast<double>(refs.size());
    check_finite(model, score, "global ranking");
    out.push_back({a, score});
  }
  std::sort(out.begin(), out.end(), [](const RankedCandidate& x, const RankedCandidate& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.arch.key() < y.arch.key();
  });
  return out;
}

std::vector<Architecture> choose_reference(const Pyramid& pyramid, std::size_t cap, std::uint64_t seed) {
  auto trained = pyramid.trained();
  std::vector<Architecture> out;
  if (trained.size() <= cap) {
    for (const auto* e : trained) out.push_back(e->arch);
    return out;
  }
  Rng rng(seed);
  auto idx = rng.sample_indices(trained.size(), cap);
  std::sort(idx.begin(), idx.end());
  for (auto i : idx) out.push_back(trained[i]->arch);
  return out;
}

std::vector<Architecture> propose(std::span<const RankedCandidate> ranking, const KeySet& pool_keys, std::size_t k,
                                  std::uint64_t seed) {
  std::vector<const Architecture*> fresh;
  for (const auto& c : ranking) {
    if (!pool_keys.contains(c.arch.key())) fresh.push_back(&c.arch);
  }
  if (fresh.size() < k) {
    throw std::runtime_error("candidate universe exhausted: " + std::to_string(fresh.size()) +
                             " unseen architectures, " + std::to_string(k) + " requested");
  }
  std::vector<Architecture> out;
  const std::size_t top = (k + 1) / 2;
  for (std::size_t i = 0; i < top; ++i) out.push_back(*fresh[i]);
  const std::size_t window_end = std::min(fresh.size(), 2 * k);
  const std::size_t rest = k - top;
  if (rest > 0) {
    Rng rng(seed);
    for (auto i : rng.sample_indices(window_end - top, rest)) out.push_back(*fresh[top + i]);
  }
  return out;
}

}  // namespace ranknosh
