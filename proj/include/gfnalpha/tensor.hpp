#pragma once

// Minimal reverse-mode automatic differentiation over dense Eigen matrices.
//
// Every op records a node holding its value, its parents and a closure that
// pushes the node's gradient into the parents. backward() orders the graph
// reachable from a scalar loss topologically and runs each closure once, in
// reverse. Gradients accumulate additively, so a tensor used twice receives
// the sum of both contributions.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gfnalpha {

namespace detail {
struct TensorNode;
}

class Tensor {
 public:
  Tensor() = default;

  // Leaf that receives gradients.
  static Tensor parameter(Eigen::MatrixXd value);
  // Leaf that never receives gradients.
  static Tensor constant(Eigen::MatrixXd value);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Eigen::MatrixXd& value() const;
  Eigen::MatrixXd& mutable_value();
  // Zero matrix of the value's shape if no gradient has arrived.
  const Eigen::MatrixXd& grad() const;
  void zero_grad();
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double item() const;
  std::uint64_t id() const;

  // For op implementations.
  static Tensor make(Eigen::MatrixXd value, std::vector<Tensor> parents,
                     std::function<void(const Eigen::MatrixXd& grad,
                                        std::vector<Tensor>& parents)> backward);
  void accumulate_grad(const Eigen::MatrixXd& g) const;

  friend void backward(const Tensor& loss);

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

// Populates grad() of every tensor the scalar `loss` depends on. Throws
// std::invalid_argument if loss is not 1x1.
void backward(const Tensor& loss);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// a + row broadcast over every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor add_all(const std::vector<Tensor>& terms);
// Rows of `table` selected by `indices` (embedding lookup).
Tensor gather_rows(const Tensor& table, const std::vector<int>& indices);
// Column-wise max over rows: (n x h) -> (1 x h). Gradient flows to the
// first arg-max row of each column.
Tensor max_rows(const Tensor& a);
// Entry (r, c) as a 1x1 tensor.
Tensor pick(const Tensor& a, Eigen::Index r, Eigen::Index c);
// Log-softmax of a 1 x V row over entries where mask is true; masked
// entries are -inf and receive no gradient. Throws std::invalid_argument if
// the mask has no true entry.
Tensor masked_log_softmax(const Tensor& logits, const std::vector<bool>& mask);
// -sum p log p over unmasked entries of a log-probability row.
Tensor masked_entropy(const Tensor& log_probs, const std::vector<bool>& mask);

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer with bias correction. Per-parameter learning
// rates may override the shared one.
class Adam {
 public:
  Adam(std::vector<NamedParameter> params, AdamConfig config);

  void set_lr(const std::string& name, double lr);
  // Returns false and leaves everything untouched if any gradient is
  // non-finite.
  bool step();
  void zero_grad();

  std::int64_t step_count() const { return step_; }
  const std::vector<NamedParameter>& params() const { return params_; }
  std::vector<Eigen::MatrixXd>& first_moments() { return m_; }
  std::vector<Eigen::MatrixXd>& second_moments() { return v_; }
  const std::vector<Eigen::MatrixXd>& first_moments() const { return m_; }
  const std::vector<Eigen::MatrixXd>& second_moments() const { return v_; }
  void set_step_count(std::int64_t s) { step_ = s; }

 private:
  std::vector<NamedParameter> params_;
  std::vector<double> lr_;
  AdamConfig config_;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
  std::int64_t step_ = 0;
};

}  // namespace gfnalpha
