#ifndef VID_TENSOR_HPP
#define VID_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vid/rng.hpp"

namespace vid::ad {

// Reverse-mode autodiff over dense row-major double arrays. Tensors are
// handles onto shared graph nodes; ops build the graph implicitly and
// backward() replays it in reverse topological order.

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // same length as data when requires_grad
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // accumulates into parents' grads

  std::size_t size() const { return data.size(); }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from_data(std::vector<double> data, std::vector<std::size_t> shape,
                          bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor randn(std::vector<std::size_t> shape, double stddev, Rng& rng,
                      bool requires_grad = false);

  bool valid() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t size() const { return node_->data.size(); }
  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad();

  double item() const;  // scalar tensors only

  Node* node() const { return node_.get(); }
  NodePtr node_ptr() const { return node_; }
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

 private:
  NodePtr node_;
};

// ---- differentiable primitives ----

Tensor matmul(const Tensor& a, const Tensor& b);          // [m×k]·[k×n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);       // a·bᵀ, b is [n×k]
Tensor add(const Tensor& a, const Tensor& b);             // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);             // elementwise
Tensor scale(const Tensor& a, double s);
Tensor add_row(const Tensor& x, const Tensor& row);       // broadcast row over [m×n]
Tensor relu(const Tensor& x);
Tensor sum(const Tensor& x);                              // -> scalar
Tensor concat_cols(const Tensor& a, const Tensor& b);     // [m×p],[m×q] -> [m×(p+q)]

// Temperature softmax over the last axis: p_i = exp(z_i/T)/Σ exp(z_j/T),
// computed with max-subtraction. Accepts a vector [k] or a matrix [m×k].
Tensor softmax_t(const Tensor& logits, double temperature);

// −Σ target·log(max(pred, 1e-12)) for vectors; for matrices, the mean of the
// per-row cross-entropies. target is treated as a constant.
Tensor cross_entropy(const Tensor& pred, const Tensor& target);

// Row-wise layer normalization with learned gain and bias (both [n]).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Gathers rows of table [vocab×d] by id; gradients scatter-add into the table.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

// Scaled dot-product attention: softmax(q·kᵀ/√d + mask)·v. mask[j] = false
// sends a large negative bias into column j so padded keys get zero weight.
// distance_slope > 0 subtracts slope·|i−j| from the scores before the
// softmax, biasing each query toward nearby keys.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 const std::vector<bool>& key_mask, double distance_slope = 0.0);

// Backpropagates d(loss)/d(x) into every requires_grad tensor reachable from
// `loss`, which must be scalar. Each node's rule runs exactly once.
void backward(const Tensor& loss);

// ---- optimizer ----

// Adaptive-moment estimation with bias correction. State is held per
// parameter slot; the parameter list must be identical across steps.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                double weight_decay = 0.0);

  void step(std::vector<Tensor>& params);
  void zero_grad(std::vector<Tensor>& params);

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace vid::ad

#endif
