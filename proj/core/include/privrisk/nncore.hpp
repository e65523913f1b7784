#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "privrisk/ecograph.hpp"
#include "privrisk/rng.hpp"
#include "privrisk/tensor.hpp"

namespace privrisk::nn {

// Handle to a value in a dynamically recorded computation graph. Copies
// share the underlying node. Operations on inputs that do not require
// gradients record nothing, so inference leaves no tape behind.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  // Zero-filled, same shape as value, once backward has touched the node.
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows; }
  std::size_t cols() const { return node_->value.cols; }
  bool defined() const { return node_ != nullptr; }

  void zero_grad();

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    Tensor& ensure_grad();
  };

  static Var from_node(std::shared_ptr<Node> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
  }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// While alive, ops on this thread record no tape (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Reverse pass from a 1 x 1 output; gradients accumulate into every
// reachable node that requires them.
void backward(const Var& loss);

// In-neighbor lists (distinct edges) of a message-passing graph.
struct Adjacency {
  std::vector<std::vector<NodeId>> in_neighbors;

  static Adjacency incoming(const EcosystemGraph& g);
  std::size_t size() const { return in_neighbors.size(); }
};

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
// x [n x d] + bias [1 x d] broadcast over rows.
Var add_row_bias(const Var& x, const Var& bias);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var hadamard(const Var& a, const Var& b);
// Column-wise [a | b]; row counts must agree.
Var concat_cols(const Var& a, const Var& b);
Var gather_rows(const Var& x, std::span<const NodeId> rows);
// out[v] = mean of x[u] over in-neighbors u of v; zero row if none.
Var mean_neighbors(const Var& x, std::shared_ptr<const Adjacency> adjacency);
Var sum(const Var& x);
// Mean binary cross-entropy; predictions clipped to [1e-7, 1 - 1e-7]
// (gradient is zero where clipping is active). pred is n x 1.
Var bce_loss(const Var& pred, std::span<const double> labels);

inline constexpr double kBceClip = 1e-7;

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Named trainable tensors in insertion order.
class ParamStore {
 public:
  Var& add(const std::string& name, Tensor value);
  const Var& get(const std::string& name) const;
  Var& get(const std::string& name);
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  bool all_finite() const;
  // Deep copy of values (fresh leaves, no shared state).
  ParamStore clone() const;
  std::size_t parameter_count() const;

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::map<std::string, std::size_t> index_;
};

struct Dense {
  std::string weight;  // [d_in x d_out]
  std::string bias;    // [1 x d_out]

  static Dense create(ParamStore& params, const std::string& prefix,
                      std::size_t d_in, std::size_t d_out, Rng& rng);
  Var forward(const ParamStore& params, const Var& x) const;
};

// GraphSAGE convolution with a mean aggregator over in-neighbors:
// out[v] = x[v] W_self + mean_{u in N_in(v)} x[u] W_neigh + bias.
struct SageConvLayer {
  std::string w_self;
  std::string w_neigh;
  std::string bias;

  static SageConvLayer create(ParamStore& params, const std::string& prefix,
                              std::size_t d_in, std::size_t d_out, Rng& rng);
  Var forward(const ParamStore& params, const Var& x,
              std::shared_ptr<const Adjacency> adjacency) const;
};

Var sage_conv(const SageConvLayer& layer, const ParamStore& params,
              const Var& node_feats, const EcosystemGraph& g);

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update of a flat parameter block at 1-based step t.
void adam_update(std::span<double> value, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::int64_t t,
                 const OptimizerConfig& config);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  // Uses the gradients stored on the parameters.
  void step(ParamStore& params);
  // Explicit gradients; names and shapes must align with params exactly.
  void step(ParamStore& params, const std::map<std::string, Tensor>& grads);

  std::int64_t step_count() const { return t_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::int64_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

// Binary parameter checkpoint; see docs/checkpoint_format.md.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  ParamStore params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace privrisk::nn
