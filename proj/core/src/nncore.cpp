#include "privrisk/nncore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "privrisk/error.hpp"
#include "privrisk/text.hpp"

namespace privrisk::nn {

namespace {

using Node = Var::Node;

thread_local bool g_grad_enabled = true;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

std::string shape_str(const Var& v) {
  return "[" + std::to_string(v.rows()) + " x " + std::to_string(v.cols()) + "]";
}

// Wraps `value` as the output of an op over `inputs`. The tape is recorded
// only when some input requires gradients.
Var record(Tensor value, std::vector<Var> inputs,
           std::function<void(Node&)> backward_fn) {
  const bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(),
                                 [](const Var& v) { return v.requires_grad(); });
  if (!needs) return Var(std::move(value), false);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  for (auto& in : inputs) node->parents.push_back(in.node());
  node->backward = std::move(backward_fn);
  return Var::from_node(std::move(node));
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor& Var::Node::ensure_grad() {
  if (grad.rows != value.rows || grad.cols != value.cols) {
    grad = Tensor(value.rows, value.cols, 0.0);
  }
  return grad;
}

void Var::zero_grad() {
  node_->grad = Tensor(node_->value.rows, node_->value.cols, 0.0);
}

void backward(const Var& loss) {
  require(loss.rows() == 1 && loss.cols() == 1,
          "backward needs a 1 x 1 output, got " + shape_str(loss));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad().data[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
}

Adjacency Adjacency::incoming(const EcosystemGraph& g) {
  Adjacency adj;
  adj.in_neighbors.resize(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    for (const auto& nb : g.in_edges(v)) adj.in_neighbors[v].push_back(nb.node);
  }
  return adj;
}

Var matmul(const Var& a, const Var& b) {
  require(a.cols() == b.rows(),
          "matmul " + shape_str(a) + " x " + shape_str(b));
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor c(n, m, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c.data.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av.data[i * k + p];
      if (x == 0.0) continue;
      const double* brow = bv.data.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += x * brow[j];
    }
  }
  return record(std::move(c), {a, b}, [n, k, m](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& g = self.grad.data;
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad().data;
      const auto& bv = pb.value.data;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * bv[p * m + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad().data;
      const auto& av = pa.value.data;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double x = av[i * k + p];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += x * g[i * m + j];
        }
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "add " + shape_str(a) + " + " + shape_str(b));
  Tensor c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] += b.value().data[i];
  return record(std::move(c), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      Node& in = parent(self, p);
      if (!in.requires_grad) continue;
      auto& g = in.ensure_grad().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data[i];
    }
  });
}

Var add_row_bias(const Var& x, const Var& bias) {
  require(bias.rows() == 1 && bias.cols() == x.cols(),
          "bias " + shape_str(bias) + " for input " + shape_str(x));
  Tensor c = x.value();
  const std::size_t d = c.cols;
  for (std::size_t i = 0; i < c.rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) c.data[i * d + j] += bias.value().data[j];
  }
  return record(std::move(c), {x, bias}, [d](Node& self) {
    Node& px = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& g = self.grad.data;
    if (px.requires_grad) {
      auto& gx = px.ensure_grad().data;
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad().data;
      for (std::size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
    }
  });
}

Var relu(const Var& x) {
  Tensor c = x.value();
  for (double& v : c.data) v = v > 0.0 ? v : 0.0;
  return record(std::move(c), {x}, [](Node& self) {
    Node& px = parent(self, 0);
    auto& gx = px.ensure_grad().data;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (px.value.data[i] > 0.0) gx[i] += self.grad.data[i];
    }
  });
}

Var sigmoid(const Var& x) {
  Tensor c = x.value();
  for (double& v : c.data) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return record(std::move(c), {x}, [](Node& self) {
    Node& px = parent(self, 0);
    auto& gx = px.ensure_grad().data;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double s = self.value.data[i];
      gx[i] += self.grad.data[i] * s * (1.0 - s);
    }
  });
}

Var hadamard(const Var& a, const Var& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "hadamard " + shape_str(a) + " * " + shape_str(b));
  Tensor c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= b.value().data[i];
  return record(std::move(c), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& g = self.grad.data;
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad().data;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb.value.data[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad().data;
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa.value.data[i];
    }
  });
}

Var concat_cols(const Var& a, const Var& b) {
  require(a.rows() == b.rows(),
          "concat " + shape_str(a) + " | " + shape_str(b));
  const std::size_t n = a.rows(), da = a.cols(), db = b.cols();
  Tensor c(n, da + db);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.value().data.data() + i * da, da, c.data.data() + i * (da + db));
    std::copy_n(b.value().data.data() + i * db, db,
                c.data.data() + i * (da + db) + da);
  }
  return record(std::move(c), {a, b}, [n, da, db](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& g = self.grad.data;
    for (std::size_t i = 0; i < n; ++i) {
      if (pa.requires_grad) {
        auto& ga = pa.ensure_grad().data;
        for (std::size_t j = 0; j < da; ++j) ga[i * da + j] += g[i * (da + db) + j];
      }
      if (pb.requires_grad) {
        auto& gb = pb.ensure_grad().data;
        for (std::size_t j = 0; j < db; ++j) {
          gb[i * db + j] += g[i * (da + db) + da + j];
        }
      }
    }
  });
}

Var gather_rows(const Var& x, std::span<const NodeId> rows) {
  const std::size_t d = x.cols();
  Tensor c(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) {
      throw Error(ErrorCode::kNotFound,
                  "row index " + std::to_string(rows[i]) + " out of range " +
                      shape_str(x));
    }
    std::copy_n(x.value().data.data() + rows[i] * d, d, c.data.data() + i * d);
  }
  std::vector<NodeId> idx(rows.begin(), rows.end());
  return record(std::move(c), {x}, [idx = std::move(idx), d](Node& self) {
    auto& gx = parent(self, 0).ensure_grad().data;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        gx[idx[i] * d + j] += self.grad.data[i * d + j];
      }
    }
  });
}

Var mean_neighbors(const Var& x, std::shared_ptr<const Adjacency> adjacency) {
  require(adjacency->size() == x.rows(),
          "adjacency over " + std::to_string(adjacency->size()) +
              " nodes for features " + shape_str(x));
  const std::size_t n = x.rows(), d = x.cols();
  Tensor c(n, d, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& nbs = adjacency->in_neighbors[v];
    if (nbs.empty()) continue;
    const double inv = 1.0 / static_cast<double>(nbs.size());
    double* out = c.data.data() + v * d;
    for (NodeId u : nbs) {
      const double* in = x.value().data.data() + u * d;
      for (std::size_t j = 0; j < d; ++j) out[j] += in[j] * inv;
    }
  }
  return record(std::move(c), {x}, [adjacency, n, d](Node& self) {
    auto& gx = parent(self, 0).ensure_grad().data;
    for (std::size_t v = 0; v < n; ++v) {
      const auto& nbs = adjacency->in_neighbors[v];
      if (nbs.empty()) continue;
      const double inv = 1.0 / static_cast<double>(nbs.size());
      const double* g = self.grad.data.data() + v * d;
      for (NodeId u : nbs) {
        for (std::size_t j = 0; j < d; ++j) gx[u * d + j] += g[j] * inv;
      }
    }
  });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data) total += v;
  return record(Tensor(1, 1, total), {x}, [](Node& self) {
    auto& gx = parent(self, 0).ensure_grad().data;
    for (double& g : gx) g += self.grad.data[0];
  });
}

Var bce_loss(const Var& pred, std::span<const double> labels) {
  require(pred.cols() == 1 && pred.rows() == labels.size(),
          "bce over " + shape_str(pred) + " with " +
              std::to_string(labels.size()) + " labels");
  require(!labels.empty(), "bce over an empty batch");
  const auto n = static_cast<double>(labels.size());
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(pred.value().data[i], kBceClip, 1.0 - kBceClip);
    total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  std::vector<double> y(labels.begin(), labels.end());
  return record(Tensor(1, 1, total / n), {pred}, [y = std::move(y), n](Node& self) {
    Node& pp = parent(self, 0);
    auto& gp = pp.ensure_grad().data;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double p = pp.value.data[i];
      if (p < kBceClip || p > 1.0 - kBceClip) continue;
      gp[i] += self.grad.data[0] * (-(y[i] / p) + (1.0 - y[i]) / (1.0 - p)) / n;
    }
  });
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(fan_in, fan_out);
  for (double& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

Var& ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate parameter \"" + name + "\"");
  }
  index_.emplace(name, params_.size());
  params_.emplace_back(name, Var(std::move(value), true));
  return params_.back().second;
}

const Var& ParamStore::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorCode::kNotFound, "no parameter named \"" + name + "\"");
  }
  return params_[it->second].second;
}

Var& ParamStore::get(const std::string& name) {
  return const_cast<Var&>(std::as_const(*this).get(name));
}

bool ParamStore::contains(const std::string& name) const {
  return index_.count(name) > 0;
}

void ParamStore::zero_grad() {
  for (auto& [name, v] : params_) v.zero_grad();
}

bool ParamStore::all_finite() const {
  for (const auto& [name, v] : params_) {
    for (double x : v.value().data) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& [name, v] : params_) out.add(name, v.value());
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, v] : params_) total += v.value().size();
  return total;
}

Dense Dense::create(ParamStore& params, const std::string& prefix,
                    std::size_t d_in, std::size_t d_out, Rng& rng) {
  Dense layer{prefix + ".weight", prefix + ".bias"};
  params.add(layer.weight, glorot_uniform(d_in, d_out, rng));
  params.add(layer.bias, Tensor(1, d_out, 0.0));
  return layer;
}

Var Dense::forward(const ParamStore& params, const Var& x) const {
  return add_row_bias(matmul(x, params.get(weight)), params.get(bias));
}

SageConvLayer SageConvLayer::create(ParamStore& params, const std::string& prefix,
                                    std::size_t d_in, std::size_t d_out,
                                    Rng& rng) {
  SageConvLayer layer{prefix + ".w_self", prefix + ".w_neigh", prefix + ".bias"};
  params.add(layer.w_self, glorot_uniform(d_in, d_out, rng));
  params.add(layer.w_neigh, glorot_uniform(d_in, d_out, rng));
  params.add(layer.bias, Tensor(1, d_out, 0.0));
  return layer;
}

Var SageConvLayer::forward(const ParamStore& params, const Var& x,
                           std::shared_ptr<const Adjacency> adjacency) const {
  Var self_term = matmul(x, params.get(w_self));
  Var neigh_term = matmul(mean_neighbors(x, std::move(adjacency)),
                          params.get(w_neigh));
  return add_row_bias(add(self_term, neigh_term), params.get(bias));
}

Var sage_conv(const SageConvLayer& layer, const ParamStore& params,
              const Var& node_feats, const EcosystemGraph& g) {
  require(node_feats.rows() == g.node_count(),
          "features " + shape_str(node_feats) + " for a graph of " +
              std::to_string(g.node_count()) + " nodes");
  return layer.forward(params, node_feats,
                       std::make_shared<const Adjacency>(Adjacency::incoming(g)));
}

void adam_update(std::span<double> value, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::int64_t t,
                 const OptimizerConfig& config) {
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < value.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

void Optimizer::step(ParamStore& params) {
  std::map<std::string, Tensor> grads;
  for (const auto& [name, v] : params) {
    grads.emplace(name, v.grad().size() == v.value().size()
                            ? v.grad()
                            : Tensor(v.rows(), v.cols(), 0.0));
  }
  step(params, grads);
}

void Optimizer::step(ParamStore& params,
                     const std::map<std::string, Tensor>& grads) {
  if (grads.size() != params.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "gradient set does not align with parameters");
  }
  for (const auto& [name, v] : params) {
    const auto it = grads.find(name);
    if (it == grads.end()) {
      throw Error(ErrorCode::kInvalidArgument, "missing gradient for \"" + name + "\"");
    }
    if (it->second.rows != v.rows() || it->second.cols != v.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient shape for \"" + name + "\"");
    }
  }
  ++t_;
  for (auto& [name, v] : params) {
    const Tensor& g = grads.at(name);
    auto& value = v.mutable_value().data;
    if (config_.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= config_.lr * g.data[i];
      continue;
    }
    auto [it, inserted] = moments_.try_emplace(
        name, Tensor(v.rows(), v.cols(), 0.0), Tensor(v.rows(), v.cols(), 0.0));
    adam_update(value, g.data, it->second.first.data, it->second.second.data, t_,
                config_);
  }
}

namespace {

constexpr char kMagic[4] = {'P', 'R', 'C', 'K'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kParse, "checkpoint truncated at byte " +
                                         std::to_string(pos_));
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.metadata.size()));
  for (const auto& [k, v] : checkpoint.metadata) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(checkpoint.params.size()));
  for (const auto& [name, var] : checkpoint.params) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(var.rows()));
    put_u32(out, static_cast<std::uint32_t>(var.cols()));
    for (double x : var.value().data) put_u64(out, std::bit_cast<std::uint64_t>(x));
  }
  put_u64(out, fnv1a64(out));
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kParse, "not a checkpoint file (bad magic)");
  }
  Reader r(bytes.substr(4));
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kParse,
                "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    ck.metadata[std::move(k)] = r.str();
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::string name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    if (count * 8 > r.remaining()) {
      throw Error(ErrorCode::kParse, "checkpoint truncated in tensor \"" + name + "\"");
    }
    Tensor t(rows, cols);
    for (double& x : t.data) x = std::bit_cast<double>(r.u64());
    ck.params.add(name, std::move(t));
  }
  const std::size_t body = 4 + r.pos();
  const std::uint64_t checksum = r.u64();
  if (checksum != fnv1a64(bytes.substr(0, body))) {
    throw Error(ErrorCode::kParse, "checkpoint checksum mismatch");
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kParse, "trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << serialize_checkpoint(checkpoint);
  if (!out) throw Error(ErrorCode::kIo, "write failure on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace privrisk::nn
