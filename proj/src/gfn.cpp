#include "gfnalpha/gfn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace gfnalpha {

ActionSpace::ActionSpace(Vocabulary vocab, int max_len)
    : vocab_(std::move(vocab)), max_len_(max_len), allowed_(vocab_.size(), true) {
  if (max_len_ < 1) throw std::invalid_argument("max_len must be >= 1");
}

void ActionSpace::restrict_to(const std::vector<Token>& tokens) {
  std::vector<bool> allowed(vocab_.size(), false);
  for (const Token& t : tokens) {
    const int i = vocab_.index_of(t);
    if (i < 0) throw std::invalid_argument("token " + token_text(t) + " is not in the vocabulary");
    allowed[i] = true;
  }
  allowed[vocab_.sep_index()] = true;
  allowed_ = std::move(allowed);
  restricted_ = true;

  bool has[7] = {};
  for (int i = 0; i < vocab_.size(); ++i) {
    if (allowed_[i]) has[static_cast<int>(vocab_.token(i).kind)] = true;
  }
  const auto kind = [&](TokenKind k) { return has[static_cast<int>(k)]; };
  const bool window = kind(TokenKind::TimeWindow);
  const int depth = max_len_ + 2;
  reach_.assign(max_len_ + 1, std::vector<std::array<bool, 2>>(depth, {false, false}));
  for (int b = 0; b <= max_len_; ++b) {
    for (int k = 0; k < depth; ++k) {
      reach_[b][k][0] = k == 1;
      if (b == 0) continue;
      const auto& prev = reach_[b - 1];
      reach_[b][k][1] = window && prev[k][0];
      bool r = reach_[b][k][0];
      r = r || (kind(TokenKind::Feature) && k + 1 < depth && prev[k + 1][0]);
      r = r || (kind(TokenKind::UnaryOp) && k >= 1 && prev[k][0]);
      r = r || (kind(TokenKind::BinaryOp) && k >= 2 && prev[k - 1][0]);
      r = r || (kind(TokenKind::RollingUnaryOp) && k >= 1 && prev[k][1]);
      r = r || (kind(TokenKind::RollingBinaryOp) && k >= 2 && prev[k - 1][1]);
      reach_[b][k][0] = r;
    }
  }
}

bool ActionSpace::completable(const ExprTree& state) const {
  const int budget = max_len_ - state.size();
  const int k = state.stack_size();
  if (budget < 0 || k >= static_cast<int>(reach_[0].size())) return false;
  return reach_[budget][k][state.has_open_slot() ? 1 : 0];
}

std::vector<bool> ActionSpace::legal(const ExprTree& state) const {
  std::vector<bool> mask = legal_actions(state, max_len_ - state.size(), vocab_);
  for (int i = 0; i < vocab_.size(); ++i) mask[i] = mask[i] && allowed_[i];
  if (!restricted_) return mask;
  for (int i = 0; i < vocab_.size(); ++i) {
    if (!mask[i] || i == vocab_.sep_index()) continue;
    ExprTree next = state;
    next.apply(vocab_.token(i));
    mask[i] = completable(next);
  }
  return mask;
}

std::vector<bool> ActionSpace::continuation_mask(const ExprTree& state) const {
  std::vector<bool> mask = legal(state);
  mask[vocab_.sep_index()] = false;
  return mask;
}

double early_stop_prob(const ExprTree& state, int max_len) {
  if (!state.is_terminal()) throw std::invalid_argument("early stop queried at a non-terminal state");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  return std::clamp(static_cast<double>(state.size()) / max_len, 0.0, 1.0);
}

namespace {

bool any(const std::vector<bool>& m) { return std::find(m.begin(), m.end(), true) != m.end(); }

}  // namespace

double stop_probability(const ActionSpace& space, const ExprTree& state) {
  if (!state.is_terminal()) return 0.0;
  if (!any(space.continuation_mask(state))) return 1.0;
  return early_stop_prob(state, space.max_len());
}

Trajectory sample_trajectory(const PolicyNet& policy, const ActionSpace& space,
                             std::mt19937_64& rng, TrajectoryGraph* graph) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Vocabulary& vocab = space.vocab();
  Trajectory traj;
  ExprTree state;
  traj.states.push_back(state);
  std::vector<Tensor> step_terms;
  double constant = 0.0;

  while (true) {
    const Encoded enc = policy.encode(state);
    if (state.is_terminal()) {
      const double p = stop_probability(space, state);
      const double u = uniform(rng);
      if (u < p) {
        traj.actions.push_back(vocab.sep_index());
        traj.log_pf.push_back(std::log(p));
        traj.stopped_early = p < 1.0;
        constant += std::log(p);
        if (graph) graph->terminal_embedding = enc.embedding;
        break;
      }
      constant += std::log1p(-p);
      traj.log_pf.push_back(std::log1p(-p));
    } else {
      traj.log_pf.push_back(0.0);
    }

    const std::vector<bool> mask = space.continuation_mask(state);
    const Tensor lp = policy.log_probs(enc.embedding, mask);
    const Eigen::MatrixXd& row = lp.value();
    const double u = uniform(rng);
    int chosen = -1;
    double acc = 0.0;
    for (int i = 0; i < vocab.size(); ++i) {
      if (!mask[i]) continue;
      chosen = i;
      acc += std::exp(row(0, i));
      if (u < acc) break;
    }
    if (chosen < 0) throw std::logic_error("no legal continuation at a non-terminal state");
    traj.log_pf.back() += row(0, chosen);
    traj.actions.push_back(chosen);
    if (graph) {
      step_terms.push_back(pick(lp, 0, chosen));
      graph->entropies.push_back(masked_entropy(lp, mask));
    }
    state.apply(vocab.token(chosen));
    traj.states.push_back(state);
  }

  traj.terminal = state;
  if (graph) {
    graph->log_pf = step_terms.empty() ? Tensor::scalar(constant)
                                       : add_scalar(add_all(step_terms), constant);
  }
  return traj;
}

Trajectory sample_trajectory(const PolicyNet& policy, const ActionSpace& space,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_trajectory(policy, space, rng);
}

Trajectory replay_trajectory(const PolicyNet& policy, const ActionSpace& space,
                             const ExprTree& terminal, TrajectoryGraph* graph) {
  if (!terminal.is_terminal()) throw std::invalid_argument("replay target is not terminal");
  const Vocabulary& vocab = space.vocab();
  const std::vector<Token> order = generation_order(terminal);
  Trajectory traj;
  ExprTree state;
  traj.states.push_back(state);
  std::vector<Tensor> step_terms;
  double constant = 0.0;
  for (std::size_t t = 0;; ++t) {
    const Encoded enc = policy.encode(state);
    const bool last = t == order.size();
    if (state.is_terminal()) {
      const double p = stop_probability(space, state);
      const double lp = last ? std::log(p) : std::log1p(-p);
      if (!std::isfinite(lp)) throw std::invalid_argument("trajectory has zero probability");
      constant += lp;
      traj.log_pf.push_back(lp);
      if (last) {
        traj.actions.push_back(vocab.sep_index());
        traj.stopped_early = p < 1.0;
        if (graph) graph->terminal_embedding = enc.embedding;
        break;
      }
    } else {
      traj.log_pf.push_back(0.0);
    }
    const std::vector<bool> mask = space.continuation_mask(state);
    const int a = vocab.index_of(order[t]);
    if (a < 0 || !mask[a]) throw std::invalid_argument("token " + token_text(order[t]) + " is not legal here");
    const Tensor lp = policy.log_probs(enc.embedding, mask);
    traj.log_pf.back() += lp.value()(0, a);
    traj.actions.push_back(a);
    if (graph) {
      step_terms.push_back(pick(lp, 0, a));
      graph->entropies.push_back(masked_entropy(lp, mask));
    }
    state.apply(order[t]);
    traj.states.push_back(state);
  }
  traj.terminal = state;
  if (graph) {
    graph->log_pf = step_terms.empty() ? Tensor::scalar(constant)
                                       : add_scalar(add_all(step_terms), constant);
  }
  return traj;
}

double log_forward(const Trajectory& traj) {
  if (traj.actions.empty() || traj.log_pf.size() != traj.actions.size() ||
      !traj.terminal.is_terminal()) {
    throw std::invalid_argument("incomplete trajectory");
  }
  double s = 0.0;
  for (double v : traj.log_pf) s += v;
  return s;
}

double log_backward(const Trajectory& traj) {
  if (traj.actions.empty() || !traj.terminal.is_terminal()) {
    throw std::invalid_argument("incomplete trajectory");
  }
  return 0.0;
}

std::string state_text(const ExprTree& state) {
  if (state.empty()) return "<empty>";
  // Generation order is recoverable from node storage, which is append-only.
  std::string out;
  for (const ExprNode& n : state.nodes()) {
    if (!out.empty()) out += ' ';
    out += token_text(n.token);
  }
  if (state.has_open_slot()) out += " _";
  return out;
}

void dump_trajectory(const Trajectory& traj, const Vocabulary& vocab, std::ostream& out) {
  for (std::size_t i = 0; i < traj.actions.size(); ++i) {
    out << state_text(traj.states[i]) << '\t' << token_text(vocab.token(traj.actions[i])) << '\t'
        << traj.log_pf[i] << '\n';
  }
}

std::map<std::string, double> terminal_distribution(const PolicyNet& policy,
                                                    const ActionSpace& space) {
  std::map<std::string, double> out;
  const Vocabulary& vocab = space.vocab();
  std::function<void(const ExprTree&, double)> visit = [&](const ExprTree& state, double mass) {
    double cont = 1.0;
    if (state.is_terminal()) {
      const double p = stop_probability(space, state);
      out[to_rpn(state)] += mass * p;
      cont = 1.0 - p;
      if (cont <= 0.0) return;
    }
    const std::vector<bool> mask = space.continuation_mask(state);
    const Eigen::MatrixXd row = policy.log_probs(policy.encode(state).embedding, mask).value();
    for (int i = 0; i < vocab.size(); ++i) {
      if (!mask[i]) continue;
      ExprTree next = state;
      next.apply(vocab.token(i));
      visit(next, mass * cont * std::exp(row(0, i)));
    }
  };
  visit(ExprTree(), 1.0);
  return out;
}

}  // namespace gfnalpha
