#include "prefnet/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "prefnet/core/errors.hpp"
#include "prefnet/nn/kernels.hpp"

namespace prefnet::nn {

namespace {

thread_local bool g_grad_enabled = true;

std::shared_ptr<Node> make_node(std::size_t rows, std::size_t cols) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(rows * cols, 0.0);
  return n;
}

void check_finite(const Node& n, const char* op) {
  for (double v : n.value) {
    if (!std::isfinite(v)) throw NonFinite(std::string("non-finite value produced by ") + op);
  }
}

std::vector<double>& grad_of(Node& n) {
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

// Attaches parents and a backward closure when any input requires a gradient.
Tensor finish(std::shared_ptr<Node> out, std::vector<std::shared_ptr<Node>> parents,
              std::function<void(Node&)> backward, const char* op) {
  check_finite(*out, op);
  if (g_grad_enabled) {
    const bool needs = std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
    if (needs) {
      out->requires_grad = true;
      out->parents = std::move(parents);
      out->backward = std::move(backward);
    }
  }
  return Tensor(std::move(out));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractViolation(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  auto out = make_node(a.rows(), a.cols());
  const auto& av = a.node()->value;
  for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = fwd(av[i]);
  auto pa = a.node();
  return finish(out, {pa},
                [pa, deriv](Node& self) {
                  if (!pa->requires_grad) return;
                  auto& g = grad_of(*pa);
                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(pa->value[i], self.value[i]);
                },
                op);
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::constant(const Matrix& m) { return constant(m.rows(), m.cols(), m.data()); }

Tensor Tensor::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) throw ContractViolation("Tensor::constant: size mismatch");
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  check_finite(*n, "constant");
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor(make_node(rows, cols)); }

Tensor Tensor::parameter(const Matrix& m) {
  Tensor t = constant(m);
  t.node_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ContractViolation("Tensor::item on a non-scalar tensor");
  return node_->value[0];
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                            std::to_string(b.rows()) + ")");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto out = make_node(m, n);
  const auto& kt = kernels::active();
  kt.gemm_nn(m, n, k, a.node()->value.data(), b.node()->value.data(), out->value.data());
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb},
                [pa, pb, m, n, k](Node& self) {
                  const auto& kt = kernels::active();
                  if (pa->requires_grad) kt.gemm_nt(m, k, n, self.grad.data(), pb->value.data(), grad_of(*pa).data());
                  if (pb->requires_grad) kt.gemm_tn(k, n, m, pa->value.data(), self.grad.data(), grad_of(*pb).data());
                },
                "matmul");
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool broadcast = b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
  if (!broadcast) require_same_shape(a, b, "add");
  auto out = make_node(a.rows(), a.cols());
  out->value = a.node()->value;
  const auto& kt = kernels::active();
  const std::size_t cols = a.cols();
  if (broadcast) {
    for (std::size_t r = 0; r < a.rows(); ++r) kt.axpy(cols, 1.0, b.node()->value.data(), out->value.data() + r * cols);
  } else {
    kt.axpy(out->value.size(), 1.0, b.node()->value.data(), out->value.data());
  }
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb},
                [pa, pb, broadcast, cols](Node& self) {
                  const auto& kt = kernels::active();
                  if (pa->requires_grad) kt.axpy(self.grad.size(), 1.0, self.grad.data(), grad_of(*pa).data());
                  if (pb->requires_grad) {
                    auto& g = grad_of(*pb);
                    if (broadcast) {
                      for (std::size_t r = 0; r < self.rows; ++r) kt.axpy(cols, 1.0, self.grad.data() + r * cols, g.data());
                    } else {
                      kt.axpy(g.size(), 1.0, self.grad.data(), g.data());
                    }
                  }
                },
                "add");
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto out = make_node(a.rows(), a.cols());
  const auto& kt = kernels::active();
  kt.mul_acc(out->value.size(), a.node()->value.data(), b.node()->value.data(), out->value.data());
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb},
                [pa, pb](Node& self) {
                  const auto& kt = kernels::active();
                  const std::size_t n = self.grad.size();
                  if (pa->requires_grad) kt.mul_acc(n, self.grad.data(), pb->value.data(), grad_of(*pa).data());
                  if (pb->requires_grad) kt.mul_acc(n, self.grad.data(), pa->value.data(), grad_of(*pb).data());
                },
                "mul");
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, "scale", [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(a, "add_scalar", [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor one_minus(const Tensor& a) {
  return unary(a, "one_minus", [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid", [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor square(const Tensor& a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "minimum");
  auto out = make_node(a.rows(), a.cols());
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for (std::size_t i = 0; i < av.size(); ++i) out->value[i] = std::min(av[i], bv[i]);
  auto pa = a.node();
  auto pb = b.node();
  return finish(out, {pa, pb},
                [pa, pb](Node& self) {
                  // Ties route the gradient to `a`.
                  for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    const bool take_a = pa->value[i] <= pb->value[i];
                    if (take_a && pa->requires_grad) grad_of(*pa)[i] += self.grad[i];
                    if (!take_a && pb->requires_grad) grad_of(*pb)[i] += self.grad[i];
                  }
                },
                "minimum");
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractViolation("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::vector<std::size_t> offsets;
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ContractViolation("concat_cols: row counts differ");
    offsets.push_back(cols);
    cols += p.cols();
  }
  auto out = make_node(rows, cols);
  std::vector<std::shared_ptr<Node>> nodes;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& src = parts[k].node();
    nodes.push_back(src);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src->value.data() + r * src->cols, src->cols, out->value.data() + r * cols + offsets[k]);
    }
  }
  auto parents = nodes;
  return finish(out, std::move(parents),
                [nodes, offsets, rows, cols](Node& self) {
                  for (std::size_t k = 0; k < nodes.size(); ++k) {
                    auto& src = *nodes[k];
                    if (!src.requires_grad) continue;
                    auto& g = grad_of(src);
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t c = 0; c < src.cols; ++c) g[r * src.cols + c] += self.grad[r * cols + offsets[k] + c];
                  }
                },
                "concat_cols");
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  const std::size_t cols = a.cols();
  auto out = make_node(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw ContractViolation("gather_rows: index out of range");
    std::copy_n(a.node()->value.data() + rows[i] * cols, cols, out->value.data() + i * cols);
  }
  auto pa = a.node();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return finish(out, {pa},
                [pa, idx = std::move(idx), cols](Node& self) {
                  auto& g = grad_of(*pa);
                  const auto& kt = kernels::active();
                  for (std::size_t i = 0; i < idx.size(); ++i) kt.axpy(cols, 1.0, self.grad.data() + i * cols, g.data() + idx[i] * cols);
                },
                "gather_rows");
}

Tensor mean_rows(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (rows == 0) throw ContractViolation("mean_rows: empty tensor");
  auto out = make_node(1, cols);
  const auto& kt = kernels::active();
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) kt.axpy(cols, inv, a.node()->value.data() + r * cols, out->value.data());
  auto pa = a.node();
  return finish(out, {pa},
                [pa, rows, cols, inv](Node& self) {
                  auto& g = grad_of(*pa);
                  const auto& kt = kernels::active();
                  for (std::size_t r = 0; r < rows; ++r) kt.axpy(cols, inv, self.grad.data(), g.data() + r * cols);
                },
                "mean_rows");
}

Tensor mean_of(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractViolation("mean_of: empty set");
  const std::size_t rows = parts.front().rows(), cols = parts.front().cols();
  auto out = make_node(rows, cols);
  const double inv = 1.0 / static_cast<double>(parts.size());
  const auto& kt = kernels::active();
  std::vector<std::shared_ptr<Node>> nodes;
  for (const auto& p : parts) {
    require_same_shape(parts.front(), p, "mean_of");
    kt.axpy(out->value.size(), inv, p.node()->value.data(), out->value.data());
    nodes.push_back(p.node());
  }
  auto parents = nodes;
  return finish(out, std::move(parents),
                [nodes, inv](Node& self) {
                  const auto& kt = kernels::active();
                  for (const auto& n : nodes)
                    if (n->requires_grad) kt.axpy(self.grad.size(), inv, self.grad.data(), grad_of(*n).data());
                },
                "mean_of");
}

Tensor sum(const Tensor& a) {
  auto out = make_node(1, 1);
  for (double v : a.node()->value) out->value[0] += v;
  auto pa = a.node();
  return finish(out, {pa},
                [pa](Node& self) {
                  auto& g = grad_of(*pa);
                  for (double& x : g) x += self.grad[0];
                },
                "sum");
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor log_softmax_rows(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_node(rows, cols);
  const auto& av = a.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.data() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(x[c] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < cols; ++c) out->value[r * cols + c] = x[c] - lse;
  }
  auto pa = a.node();
  return finish(out, {pa},
                [pa, rows, cols](Node& self) {
                  auto& g = grad_of(*pa);
                  for (std::size_t r = 0; r < rows; ++r) {
                    double gs = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) gs += self.grad[r * cols + c];
                    for (std::size_t c = 0; c < cols; ++c) {
                      g[r * cols + c] += self.grad[r * cols + c] - std::exp(self.value[r * cols + c]) * gs;
                    }
                  }
                },
                "log_softmax_rows");
}

Tensor pick(const Tensor& a, std::span<const std::size_t> cols) {
  if (cols.size() != a.rows()) throw ContractViolation("pick: one column index per row required");
  const std::size_t width = a.cols();
  auto out = make_node(a.rows(), 1);
  for (std::size_t r = 0; r < cols.size(); ++r) {
    if (cols[r] >= width) throw ContractViolation("pick: column index out of range");
    out->value[r] = a.node()->value[r * width + cols[r]];
  }
  auto pa = a.node();
  std::vector<std::size_t> idx(cols.begin(), cols.end());
  return finish(out, {pa},
                [pa, idx = std::move(idx), width](Node& self) {
                  auto& g = grad_of(*pa);
                  for (std::size_t r = 0; r < idx.size(); ++r) g[r * width + idx[r]] += self.grad[r];
                },
                "pick");
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) throw ContractViolation("backward: loss must be a 1x1 tensor");
  if (!loss.requires_grad()) throw ContractViolation("backward: loss graph is detached (no parameters reachable)");

  // Iterative post-order DFS -> reverse topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);  // intermediates start fresh
  }
  loss.node()->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

}  // namespace prefnet::nn
