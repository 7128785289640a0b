#pragma once

// Trajectory sampling over the postfix construction, with budget-aware
// masking and the length-proportional early stop. Every state has exactly
// one parent, so the backward policy is identically 1.

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gfnalpha/formula.hpp"
#include "gfnalpha/rgcn.hpp"
#include "gfnalpha/tensor.hpp"

namespace gfnalpha {

inline constexpr int kDefaultMaxLen = 20;

class ActionSpace {
 public:
  explicit ActionSpace(Vocabulary vocab = Vocabulary(), int max_len = kDefaultMaxLen);

  // Restrict sampling to a subset of tokens; Sep is always kept. Tokens
  // that would leave no way to finish with the remaining ones are masked.
  void restrict_to(const std::vector<Token>& tokens);

  const Vocabulary& vocab() const { return vocab_; }
  int max_len() const { return max_len_; }

  // Legal tokens including Sep (iff terminal-valid).
  std::vector<bool> legal(const ExprTree& state) const;
  // Legal continuation tokens; the stop decision is taken separately.
  std::vector<bool> continuation_mask(const ExprTree& state) const;

 private:
  Vocabulary vocab_;
  int max_len_;
  bool completable(const ExprTree& state) const;

  std::vector<bool> allowed_;
  bool restricted_ = false;
  // reach_[budget][stack][pending window]: terminal reachable with allowed tokens.
  std::vector<std::vector<std::array<bool, 2>>> reach_;
};

// p = Len / MaxLen clamped to [0, 1]. Throws std::invalid_argument unless
// the state is terminal-valid.
double early_stop_prob(const ExprTree& state, int max_len = kDefaultMaxLen);

// Stop probability actually used by the sampler: early_stop_prob, or 1 if
// no continuation token is legal; 0 at non-terminal states.
double stop_probability(const ActionSpace& space, const ExprTree& state);

struct Trajectory {
  std::vector<ExprTree> states;  // s_0 .. s_n
  std::vector<int> actions;      // vocabulary indices, Sep last
  std::vector<double> log_pf;    // one entry per action
  bool stopped_early = false;    // stopped while continuation was possible
  ExprTree terminal;
};

// Differentiable pieces recorded while sampling.
struct TrajectoryGraph {
  Tensor log_pf;                  // 1x1, sum of all per-step log-probabilities
  std::vector<Tensor> entropies;  // one 1x1 entropy per sampled token
  Tensor terminal_embedding;      // 1 x hidden
};

// Draws one trajectory. If `graph` is non-null the autodiff graph of the
// forward log-density and step entropies is kept for training.
Trajectory sample_trajectory(const PolicyNet& policy, const ActionSpace& space,
                             std::mt19937_64& rng, TrajectoryGraph* graph = nullptr);
Trajectory sample_trajectory(const PolicyNet& policy, const ActionSpace& space,
                             std::uint64_t seed);

// The unique trajectory that builds `terminal` and stops there, scored under
// the current policy. Throws std::invalid_argument if the tree is not
// reachable within the action space.
Trajectory replay_trajectory(const PolicyNet& policy, const ActionSpace& space,
                             const ExprTree& terminal, TrajectoryGraph* graph = nullptr);

// Throws std::invalid_argument on an incomplete trajectory.
double log_forward(const Trajectory& traj);
double log_backward(const Trajectory& traj);

// One line per step: state, chosen token, log-probability.
void dump_trajectory(const Trajectory& traj, const Vocabulary& vocab, std::ostream& out);
// Generation-order tokens of a partial state, "_" marking an open window
// slot; "<empty>" for s_0.
std::string state_text(const ExprTree& state);

// Exact terminal distribution of the sampler, keyed by to_rpn text. Only
// practical on small restricted spaces.
std::map<std::string, double> terminal_distribution(const PolicyNet& policy,
                                                    const ActionSpace& space);

}  // namespace gfnalpha
