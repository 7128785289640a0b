#include "gfnalpha/tensor.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace gfnalpha {

namespace detail {

struct TensorNode {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool has_grad = false;
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<Tensor> parents;
  std::function<void(const Eigen::MatrixXd&, std::vector<Tensor>&)> backward;
};

}  // namespace detail

namespace {

std::uint64_t next_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

}  // namespace

Tensor Tensor::parameter(Eigen::MatrixXd value) {
  auto n = std::make_shared<detail::TensorNode>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->id = next_id();
  return Tensor(std::move(n));
}

Tensor Tensor::constant(Eigen::MatrixXd value) {
  auto n = std::make_shared<detail::TensorNode>();
  n->value = std::move(value);
  n->id = next_id();
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return requires_grad ? parameter(std::move(m)) : constant(std::move(m));
}

const Eigen::MatrixXd& Tensor::value() const { return node_->value; }

Eigen::MatrixXd& Tensor::mutable_value() { return node_->value; }

const Eigen::MatrixXd& Tensor::grad() const {
  if (!node_->has_grad) {
    node_->grad = Eigen::MatrixXd::Zero(node_->value.rows(), node_->value.cols());
    node_->has_grad = true;
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad.resize(0, 0);
  node_->has_grad = false;
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

double Tensor::item() const {
  if (node_->value.size() != 1) throw std::logic_error("item() on a non-scalar tensor");
  return node_->value(0, 0);
}

std::uint64_t Tensor::id() const { return node_->id; }

Tensor Tensor::make(Eigen::MatrixXd value, std::vector<Tensor> parents,
                    std::function<void(const Eigen::MatrixXd&, std::vector<Tensor>&)> backward) {
  auto n = std::make_shared<detail::TensorNode>();
  n->value = std::move(value);
  n->id = next_id();
  for (const Tensor& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

void Tensor::accumulate_grad(const Eigen::MatrixXd& g) const {
  if (!node_->requires_grad) return;
  if (!node_->has_grad) {
    node_->grad = g;
    node_->has_grad = true;
  } else {
    node_->grad += g;
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss");
  }
  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> visited;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  if (loss.node_->requires_grad) stack.emplace_back(loss.node_.get(), 0);
  visited.insert(loss.node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::TensorNode* p = node->parents[next++].node_.get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  loss.accumulate_grad(Eigen::MatrixXd::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    if (!node->backward || !node->has_grad) continue;
    node->backward(node->grad, node->parents);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  return Tensor::make(a.value() * b.value(), {a, b},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        if (p[0].requires_grad()) p[0].accumulate_grad(g * p[1].value().transpose());
                        if (p[1].requires_grad()) p[1].accumulate_grad(p[0].value().transpose() * g);
                      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add shape mismatch");
  return Tensor::make(a.value() + b.value(), {a, b},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad(g);
                        p[1].accumulate_grad(g);
                      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("sub shape mismatch");
  return Tensor::make(a.value() - b.value(), {a, b},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad(g);
                        p[1].accumulate_grad(-g);
                      });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row shape mismatch");
  Eigen::MatrixXd v = a.value().rowwise() + row.value().row(0);
  return Tensor::make(std::move(v), {a, row},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad(g);
                        if (p[1].requires_grad()) p[1].accumulate_grad(g.colwise().sum());
                      });
}

Tensor scale(const Tensor& a, double c) {
  return Tensor::make(a.value() * c, {a},
                      [c](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad(g * c);
                      });
}

Tensor add_scalar(const Tensor& a, double c) {
  Eigen::MatrixXd v = a.value().array() + c;
  return Tensor::make(std::move(v), {a},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad(g);
                      });
}

Tensor square(const Tensor& a) {
  Eigen::MatrixXd v = a.value().array().square();
  return Tensor::make(std::move(v), {a},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad((2.0 * g.array() * p[0].value().array()).matrix());
                      });
}

Tensor relu(const Tensor& a) {
  Eigen::MatrixXd v = a.value().cwiseMax(0.0);
  return Tensor::make(std::move(v), {a},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad(
                            (p[0].value().array() > 0.0).select(g.array(), 0.0).matrix());
                      });
}

Tensor sum(const Tensor& a) {
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = a.value().sum();
  return Tensor::make(std::move(v), {a},
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        p[0].accumulate_grad(
                            Eigen::MatrixXd::Constant(p[0].rows(), p[0].cols(), g(0, 0)));
                      });
}

Tensor add_all(const std::vector<Tensor>& terms) {
  if (terms.empty()) return Tensor::scalar(0.0);
  Eigen::MatrixXd v = terms.front().value();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (terms[i].rows() != v.rows() || terms[i].cols() != v.cols()) {
      throw std::invalid_argument("add_all shape mismatch");
    }
    v += terms[i].value();
  }
  return Tensor::make(std::move(v), terms,
                      [](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        for (Tensor& t : p) t.accumulate_grad(g);
                      });
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& indices) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(indices.size()), table.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= table.rows()) {
      throw std::out_of_range("gather_rows index out of range");
    }
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(indices[i]);
  }
  return Tensor::make(std::move(v), {table},
                      [indices](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p[0].rows(), p[0].cols());
                        for (std::size_t i = 0; i < indices.size(); ++i) {
                          acc.row(indices[i]) += g.row(static_cast<Eigen::Index>(i));
                        }
                        p[0].accumulate_grad(acc);
                      });
}

Tensor max_rows(const Tensor& a) {
  if (a.rows() == 0) throw std::invalid_argument("max_rows on an empty tensor");
  const Eigen::Index h = a.cols();
  Eigen::MatrixXd v(1, h);
  std::vector<Eigen::Index> arg(h);
  for (Eigen::Index c = 0; c < h; ++c) v(0, c) = a.value().col(c).maxCoeff(&arg[c]);
  return Tensor::make(std::move(v), {a},
                      [arg](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p[0].rows(), p[0].cols());
                        for (std::size_t c = 0; c < arg.size(); ++c) {
                          acc(arg[c], static_cast<Eigen::Index>(c)) = g(0, static_cast<Eigen::Index>(c));
                        }
                        p[0].accumulate_grad(acc);
                      });
}

Tensor pick(const Tensor& a, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = a.value()(r, c);
  return Tensor::make(std::move(v), {a},
                      [r, c](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p[0].rows(), p[0].cols());
                        acc(r, c) = g(0, 0);
                        p[0].accumulate_grad(acc);
                      });
}

Tensor masked_log_softmax(const Tensor& logits, const std::vector<bool>& mask) {
  const Eigen::Index n = logits.cols();
  if (logits.rows() != 1 || static_cast<Eigen::Index>(mask.size()) != n) {
    throw std::invalid_argument("masked_log_softmax expects a 1 x V row and a V mask");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[i]) mx = std::max(mx, logits.value()(0, i));
  }
  if (!std::isfinite(mx)) throw std::invalid_argument("masked_log_softmax: empty mask");
  double z = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[i]) z += std::exp(logits.value()(0, i) - mx);
  }
  const double log_z = mx + std::log(z);
  Eigen::MatrixXd v(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(0, i) = mask[i] ? logits.value()(0, i) - log_z : -std::numeric_limits<double>::infinity();
  }
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[i]) probs(0, i) = std::exp(v(0, i));
  }
  return Tensor::make(std::move(v), {logits},
                      [mask, probs](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        double total = 0.0;
                        for (std::size_t i = 0; i < mask.size(); ++i) {
                          if (mask[i]) total += g(0, static_cast<Eigen::Index>(i));
                        }
                        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(1, probs.cols());
                        for (std::size_t i = 0; i < mask.size(); ++i) {
                          const auto c = static_cast<Eigen::Index>(i);
                          if (mask[i]) acc(0, c) = g(0, c) - probs(0, c) * total;
                        }
                        p[0].accumulate_grad(acc);
                      });
}

Tensor masked_entropy(const Tensor& log_probs, const std::vector<bool>& mask) {
  const Eigen::Index n = log_probs.cols();
  if (log_probs.rows() != 1 || static_cast<Eigen::Index>(mask.size()) != n) {
    throw std::invalid_argument("masked_entropy expects a 1 x V row and a V mask");
  }
  double h = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double l = log_probs.value()(0, i);
    h -= std::exp(l) * l;
  }
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = h;
  return Tensor::make(std::move(v), {log_probs},
                      [mask](const Eigen::MatrixXd& g, std::vector<Tensor>& p) {
                        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(1, p[0].cols());
                        for (std::size_t i = 0; i < mask.size(); ++i) {
                          if (!mask[i]) continue;
                          const auto c = static_cast<Eigen::Index>(i);
                          const double l = p[0].value()(0, c);
                          acc(0, c) = -g(0, 0) * std::exp(l) * (l + 1.0);
                        }
                        p[0].accumulate_grad(acc);
                      });
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::vector<NamedParameter> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    lr_.push_back(config_.lr);
    m_.push_back(Eigen::MatrixXd::Zero(p.tensor.rows(), p.tensor.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.tensor.rows(), p.tensor.cols()));
  }
}

void Adam::set_lr(const std::string& name, double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) {
      lr_[i] = lr;
      return;
    }
  }
  throw std::invalid_argument("unknown parameter " + name);
}

bool Adam::step() {
  for (const auto& p : params_) {
    if (!p.tensor.grad().allFinite()) return false;
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].tensor;
    const Eigen::MatrixXd& g = p.grad();
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
    const double eps = config_.eps;
    p.mutable_value().array() -=
        lr_[i] * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps);
  }
  return true;
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace gfnalpha
