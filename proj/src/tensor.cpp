#include "vid/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "vid/errors.hpp"

namespace vid::ad {

namespace {

constexpr double kLogClamp = 1e-12;  // floor applied to probabilities before log
constexpr double kMaskBias = -1e30;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NodePtr make_node(std::vector<std::size_t> shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data.assign(shape_product(n->shape), 0.0);
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->data.size(), 0.0);
  return n;
}

// Result node whose requires_grad is inherited from the parents.
NodePtr make_result(std::vector<std::size_t> shape, std::vector<NodePtr> parents) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  auto n = make_node(std::move(shape), rg);
  if (rg) n->parents = std::move(parents);
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

// Rows/cols view of a vector or matrix: a vector [k] is one row.
void rows_cols(const Tensor& t, std::size_t& rows, std::size_t& cols, const char* op) {
  const auto& s = t.shape();
  if (s.size() == 1) {
    rows = 1;
    cols = s[0];
  } else if (s.size() == 2) {
    rows = s[0];
    cols = s[1];
  } else {
    throw DimensionError(std::string(op) + ": expected vector or matrix, got " + shape_str(s));
  }
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return Tensor(make_node(std::move(shape), requires_grad));
}

Tensor Tensor::from_data(std::vector<double> data, std::vector<std::size_t> shape,
                         bool requires_grad) {
  if (data.size() != shape_product(shape)) {
    throw DimensionError("from_data: data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto n = make_node(std::move(shape), requires_grad);
  n->data = std::move(data);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_data({v}, {1}, requires_grad);
}

Tensor Tensor::randn(std::vector<std::size_t> shape, double stddev, Rng& rng, bool requires_grad) {
  auto n = make_node(std::move(shape), requires_grad);
  for (auto& x : n->data) x = rng.gaussian(0.0, stddev);
  return Tensor(std::move(n));
}

std::vector<double>& Tensor::grad() {
  if (!node_->requires_grad) throw ContractError("grad requested on a non-gradient tensor");
  return node_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_->requires_grad) throw ContractError("grad requested on a non-gradient tensor");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (node_->data.size() != 1) {
    throw ContractError("item() on non-scalar tensor " + shape_str(node_->shape));
  }
  return node_->data[0];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  std::size_t m, k;
  rows_cols(a, m, k, "matmul");
  if (sb.size() != 2 || sb[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(sa) + " x " +
                         shape_str(sb));
  }
  const std::size_t n = sb[1];
  std::vector<std::size_t> out_shape = sa.size() == 1 ? std::vector<std::size_t>{n}
                                                      : std::vector<std::size_t>{m, n};
  auto out = make_result(std::move(out_shape), {a.node_ptr(), b.node_ptr()});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out->data.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  if (out->requires_grad) {
    Node* na = a.node();
    Node* nb = b.node();
    out->backprop = [na, nb, m, k, n](Node& self) {
      const double* g = self.grad.data();
      if (na->requires_grad) {
        // dA = dOut · Bᵀ
        double* ga = na->grad.data();
        const double* pb2 = nb->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb2[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (nb->requires_grad) {
        // dB = Aᵀ · dOut
        double* gb = nb->grad.data();
        const double* pa2 = na->data.data();
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t i = 0; i < m; ++i) {
            const double av = pa2[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
          }
      }
    };
  }
  return Tensor(out);
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1]) {
    throw DimensionError("matmul_nt: incompatible shapes " + shape_str(sa) + " x " +
                         shape_str(sb) + "ᵀ");
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[0];
  auto out = make_result({m, n}, {a.node_ptr(), b.node_ptr()});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += pa[i * k + p] * pb[j * k + p];
      out->data[i * n + j] = acc;
    }
  if (out->requires_grad) {
    Node* na = a.node();
    Node* nb = b.node();
    out->backprop = [na, nb, m, k, n](Node& self) {
      const double* g = self.grad.data();
      if (na->requires_grad) {
        double* ga = na->grad.data();
        const double* pb2 = nb->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gv = g[i * n + j];
            if (gv == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gv * pb2[j * k + p];
          }
      }
      if (nb->requires_grad) {
        double* gb = nb->grad.data();
        const double* pa2 = na->data.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double gv = g[i * n + j];
            if (gv == 0.0) continue;
            for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gv * pa2[i * k + p];
          }
      }
    };
  }
  return Tensor(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto out = make_result(a.shape(), {a.node_ptr(), b.node_ptr()});
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.data()[i] + b.data()[i];
  if (out->requires_grad) {
    Node* na = a.node();
    Node* nb = b.node();
    out->backprop = [na, nb](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (na->requires_grad) na->grad[i] += self.grad[i];
        if (nb->requires_grad) nb->grad[i] += self.grad[i];
      }
    };
  }
  return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto out = make_result(a.shape(), {a.node_ptr(), b.node_ptr()});
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.data()[i] - b.data()[i];
  if (out->requires_grad) {
    Node* na = a.node();
    Node* nb = b.node();
    out->backprop = [na, nb](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (na->requires_grad) na->grad[i] += self.grad[i];
        if (nb->requires_grad) nb->grad[i] -= self.grad[i];
      }
    };
  }
  return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto out = make_result(a.shape(), {a.node_ptr(), b.node_ptr()});
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.data()[i] * b.data()[i];
  if (out->requires_grad) {
    Node* na = a.node();
    Node* nb = b.node();
    out->backprop = [na, nb](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (na->requires_grad) na->grad[i] += self.grad[i] * nb->data[i];
        if (nb->requires_grad) nb->grad[i] += self.grad[i] * na->data[i];
      }
    };
  }
  return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
  auto out = make_result(a.shape(), {a.node_ptr()});
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = a.data()[i] * s;
  if (out->requires_grad) {
    Node* na = a.node();
    out->backprop = [na, s](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) na->grad[i] += self.grad[i] * s;
    };
  }
  return Tensor(out);
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  std::size_t m, n;
  rows_cols(x, m, n, "add_row");
  if (row.shape().size() != 1 || row.shape()[0] != n) {
    throw DimensionError("add_row: row " + shape_str(row.shape()) + " does not match " +
                         shape_str(x.shape()));
  }
  auto out = make_result(x.shape(), {x.node_ptr(), row.node_ptr()});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out->data[i * n + j] = x.data()[i * n + j] + row.data()[j];
  if (out->requires_grad) {
    Node* nx = x.node();
    Node* nr = row.node();
    out->backprop = [nx, nr, m, n](Node& self) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          if (nx->requires_grad) nx->grad[i * n + j] += self.grad[i * n + j];
          if (nr->requires_grad) nr->grad[j] += self.grad[i * n + j];
        }
    };
  }
  return Tensor(out);
}

Tensor relu(const Tensor& x) {
  auto out = make_result(x.shape(), {x.node_ptr()});
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = std::max(0.0, x.data()[i]);
  if (out->requires_grad) {
    Node* nx = x.node();
    out->backprop = [nx](Node& self) {
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (nx->data[i] > 0.0) nx->grad[i] += self.grad[i];
    };
  }
  return Tensor(out);
}

Tensor sum(const Tensor& x) {
  auto out = make_result({1}, {x.node_ptr()});
  out->data[0] = std::accumulate(x.data().begin(), x.data().end(), 0.0);
  if (out->requires_grad) {
    Node* nx = x.node();
    out->backprop = [nx](Node& self) {
      for (auto& g : nx->grad) g += self.grad[0];
    };
  }
  return Tensor(out);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  std::size_t m, p, m2, q;
  rows_cols(a, m, p, "concat_cols");
  rows_cols(b, m2, q, "concat_cols");
  if (m != m2) {
    throw DimensionError("concat_cols: row counts disagree, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const bool vec = a.shape().size() == 1 && b.shape().size() == 1;
  auto out = make_result(vec ? std::vector<std::size_t>{p + q}
                             : std::vector<std::size_t>{m, p + q},
                         {a.node_ptr(), b.node_ptr()});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) out->data[i * (p + q) + j] = a.data()[i * p + j];
    for (std::size_t j = 0; j < q; ++j) out->data[i * (p + q) + p + j] = b.data()[i * q + j];
  }
  if (out->requires_grad) {
    Node* na = a.node();
    Node* nb = b.node();
    out->backprop = [na, nb, m, p, q](Node& self) {
      for (std::size_t i = 0; i < m; ++i) {
        if (na->requires_grad)
          for (std::size_t j = 0; j < p; ++j) na->grad[i * p + j] += self.grad[i * (p + q) + j];
        if (nb->requires_grad)
          for (std::size_t j = 0; j < q; ++j)
            nb->grad[i * q + j] += self.grad[i * (p + q) + p + j];
      }
    };
  }
  return Tensor(out);
}

Tensor softmax_t(const Tensor& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw ParamError("softmax_t: temperature must be positive, got " + std::to_string(temperature));
  }
  std::size_t m, k;
  rows_cols(logits, m, k, "softmax_t");
  if (k < 2) throw DimensionError("softmax_t: need at least 2 classes");
  for (double z : logits.data()) {
    if (std::isnan(z)) throw NumericError("softmax_t: NaN in logits");
  }
  auto out = make_result(logits.shape(), {logits.node_ptr()});
  for (std::size_t i = 0; i < m; ++i) {
    const double* z = logits.data().data() + i * k;
    double* p = out->data.data() + i * k;
    double zmax = z[0];
    for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, z[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] = std::exp((z[j] - zmax) / temperature);
      denom += p[j];
    }
    for (std::size_t j = 0; j < k; ++j) p[j] /= denom;
  }
  if (out->requires_grad) {
    Node* nz = logits.node();
    out->backprop = [nz, m, k, temperature](Node& self) {
      // dz_j = (p_j/T)·(g_j − Σ_i g_i p_i)
      for (std::size_t i = 0; i < m; ++i) {
        const double* p = self.data.data() + i * k;
        const double* g = self.grad.data() + i * k;
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += g[j] * p[j];
        for (std::size_t j = 0; j < k; ++j)
          nz->grad[i * k + j] += p[j] / temperature * (g[j] - dot);
      }
    };
  }
  return Tensor(out);
}

Tensor cross_entropy(const Tensor& pred, const Tensor& target) {
  check_same_shape(pred, target, "cross_entropy");
  std::size_t m, k;
  rows_cols(pred, m, k, "cross_entropy");
  auto out = make_result({1}, {pred.node_ptr()});
  double total = 0.0;
  for (std::size_t i = 0; i < m * k; ++i) {
    const double p = std::max(pred.data()[i], kLogClamp);
    total -= target.data()[i] * std::log(p);
  }
  out->data[0] = total / static_cast<double>(m);
  if (out->requires_grad) {
    Node* np = pred.node();
    std::vector<double> tgt = target.data();
    out->backprop = [np, tgt, m](Node& self) {
      const double g = self.grad[0] / static_cast<double>(m);
      for (std::size_t i = 0; i < np->data.size(); ++i) {
        if (np->data[i] > kLogClamp) np->grad[i] -= g * tgt[i] / np->data[i];
      }
    };
  }
  return Tensor(out);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  std::size_t m, n;
  rows_cols(x, m, n, "layer_norm");
  if (gain.shape() != std::vector<std::size_t>{n} || bias.shape() != std::vector<std::size_t>{n}) {
    throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(n) + "]");
  }
  auto out = make_result(x.shape(), {x.node_ptr(), gain.node_ptr(), bias.node_ptr()});
  std::vector<double> means(m), inv_stds(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    means[i] = mean;
    inv_stds[i] = inv;
    for (std::size_t j = 0; j < n; ++j)
      out->data[i * n + j] = (row[j] - mean) * inv * gain.data()[j] + bias.data()[j];
  }
  if (out->requires_grad) {
    Node* nx = x.node();
    Node* ng = gain.node();
    Node* nb = bias.node();
    out->backprop = [nx, ng, nb, m, n, means, inv_stds](Node& self) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* row = nx->data.data() + i * n;
        const double* g = self.grad.data() + i * n;
        const double inv = inv_stds[i];
        const double mean = means[i];
        double sum_gy = 0.0, sum_gyx = 0.0;  // Σ g·gain, Σ g·gain·x̂
        for (std::size_t j = 0; j < n; ++j) {
          const double xhat = (row[j] - mean) * inv;
          const double gg = g[j] * ng->data[j];
          sum_gy += gg;
          sum_gyx += gg * xhat;
          if (ng->requires_grad) ng->grad[j] += g[j] * xhat;
          if (nb->requires_grad) nb->grad[j] += g[j];
        }
        if (nx->requires_grad) {
          const double invn = 1.0 / static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j) {
            const double xhat = (row[j] - mean) * inv;
            const double gg = g[j] * ng->data[j];
            nx->grad[i * n + j] += inv * (gg - invn * sum_gy - invn * xhat * sum_gyx);
          }
        }
      }
    };
  }
  return Tensor(out);
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  const auto& s = table.shape();
  if (s.size() != 2) throw DimensionError("embedding_lookup: table must be 2-D");
  const std::size_t vocab = s[0], d = s[1];
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw DataError("embedding_lookup: id " + std::to_string(id) + " out of range [0, " +
                      std::to_string(vocab) + ")");
    }
  }
  auto out = make_result({ids.size(), d}, {table.node_ptr()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double* src = table.data().data() + static_cast<std::size_t>(ids[i]) * d;
    std::copy(src, src + d, out->data.data() + i * d);
  }
  if (out->requires_grad) {
    Node* nt = table.node();
    std::vector<int> ids_copy = ids;
    out->backprop = [nt, ids_copy, d](Node& self) {
      for (std::size_t i = 0; i < ids_copy.size(); ++i) {
        double* dst = nt->grad.data() + static_cast<std::size_t>(ids_copy[i]) * d;
        const double* g = self.grad.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
      }
    };
  }
  return Tensor(out);
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 const std::vector<bool>& key_mask, double distance_slope) {
  const auto& sq = q.shape();
  const auto& sk = k.shape();
  if (sq.size() != 2 || sk.size() != 2 || sq[1] != sk[1]) {
    throw DimensionError("attention: q " + shape_str(sq) + " and k " + shape_str(sk) +
                         " disagree");
  }
  if (key_mask.size() != sk[0]) throw DimensionError("attention: mask length mismatch");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(sq[1]));
  Tensor scores = scale(matmul_nt(q, k), inv_sqrt_d);
  // Mask out padded keys and apply the linear distance penalty before the
  // softmax. Both are constant biases, so gradients are untouched.
  const std::size_t rows = sq[0], cols = sk[0];
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double& s = scores.data()[i * cols + j];
      if (!key_mask[j]) {
        s = kMaskBias;
      } else if (distance_slope != 0.0) {
        const double dist = i > j ? static_cast<double>(i - j) : static_cast<double>(j - i);
        s -= distance_slope * dist;
      }
    }
  }
  Tensor weights = softmax_t(scores, 1.0);
  return matmul(weights, v);
}

void backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be scalar");
  }
  if (!loss.requires_grad()) return;

  // Build the tape: reachable nodes in reverse topological order.
  std::vector<Node*> tape;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* parent = node->parents[idx++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      tape.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad[0] += 1.0;
  for (auto it = tape.rbegin(); it != tape.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

Adam::Adam(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void Adam::step(std::vector<Tensor>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].size(), 0.0);
      v_[i].assign(params[i].size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ContractError("adam: parameter list changed size");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].requires_grad()) throw ContractError("adam: parameter without gradient");
    auto& w = params[i].data();
    const auto& g = params[i].grad();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      // decoupled weight decay, applied alongside the adaptive step
      w[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * w[j]);
    }
  }
}

void Adam::zero_grad(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace vid::ad
