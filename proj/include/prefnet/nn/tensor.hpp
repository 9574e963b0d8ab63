#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "prefnet/core/matrix.hpp"

namespace prefnet::nn {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

// 2-D double tensor with reverse-mode differentiation. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(const Matrix& m);
  static Tensor constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros(std::size_t rows, std::size_t cols);
  // Leaf whose gradient accumulates across backward() calls.
  static Tensor parameter(const Matrix& m);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<double> value() { return node_->value; }
  std::span<const double> value() const { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  double item() const;
  // Empty when no gradient reached this tensor.
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();
  Matrix to_matrix() const { return Matrix(rows(), cols(), node_->value); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// While alive on this thread, ops record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

Tensor matmul(const Tensor& a, const Tensor& b);
// b may have a's shape or be a 1 x cols row broadcast over a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor one_minus(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor square(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
Tensor mean_rows(const Tensor& a);
Tensor mean_of(std::span<const Tensor> parts);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
// out[r] = a[r][cols[r]]
Tensor pick(const Tensor& a, std::span<const std::size_t> cols);

// Populates gradients of every requires_grad tensor reachable from `loss`
// (which must be 1 x 1). Throws when nothing reachable requires a gradient.
void backward(const Tensor& loss);

}  // namespace prefnet::nn
