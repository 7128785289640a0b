#pragma once

// Trajectory-balance objective with entropy bonus, and the mining loop that
// samples alphas, scores them, maintains the pool and updates the policy.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "gfnalpha/engine.hpp"
#include "gfnalpha/gfn.hpp"
#include "gfnalpha/pool.hpp"
#include "gfnalpha/rewards.hpp"
#include "gfnalpha/rgcn.hpp"
#include "gfnalpha/tensor.hpp"

namespace gfnalpha {

struct TrainConfig {
  std::int64_t episodes = 10000;
  int max_len = kDefaultMaxLen;
  int hidden = 128;
  int layers = 2;
  double entropy_coef = 0.01;
  double lr = 1e-4;
  double logz_lr = 1e-2;
  double sa_weight = 1.0;
  double nov_weight = 0.3;
  int pool_capacity = kDefaultPoolCapacity;
  std::int64_t t_anneal = 0;  // 0: anneal over all episodes
  int knn = kDefaultNeighbours;
  std::uint64_t seed = 0;
  double ic_min = 0.01;
  double nov_min = 0.1;
  double reward_floor = kRewardFloor;
  std::int64_t checkpoint_every = 0;  // 0: only on request
  std::vector<int> windows = default_windows();

  double anneal_horizon() const;
  // Throws std::invalid_argument describing the first bad field.
  void validate() const;
};

// (logZ + log P_F - log R)^2. Throws std::invalid_argument for R <= 0.
Tensor tb_loss(const Tensor& log_z, const Tensor& log_pf, double reward);
// -sum_t H(pi(.|s_t)).
Tensor entropy_loss(const std::vector<Tensor>& step_entropies);
Tensor final_loss(const Tensor& tb, const Tensor& ent, double beta = 0.01);

// Adam over the policy parameters with logZ on its own learning rate.
Adam make_optimizer(const PolicyNet& policy, double lr, double logz_lr);

struct TbStepResult {
  double tb_loss = 0.0;
  double loss = 0.0;
  bool applied = true;
};

// One update on `batch` freshly sampled trajectories (losses averaged), with
// rewards from a fixed function of the terminal tree.
TbStepResult tb_train_step(const PolicyNet& policy, Adam& optimizer, const ActionSpace& space,
                           std::mt19937_64& rng,
                           const std::function<double(const ExprTree&)>& reward, double beta,
                           int batch = 1);

struct EpisodeRecord {
  std::int64_t episode = 0;
  int length = 0;
  RewardBreakdown reward;
  double tb_loss = 0.0;
  double log_z = 0.0;
  bool admitted = false;
  bool applied = true;
  std::string rpn;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpisodeRecord& rec);

// Holds a reference to `panel`, which must outlive the miner. The panel must
// carry labels.
class Miner {
 public:
  Miner(TrainConfig config, const Panel& panel);

  EpisodeRecord run_episode();
  // Runs until `config.episodes` episodes have been completed.
  void run(const std::function<void(const EpisodeRecord&)>& on_episode = {});

  std::int64_t episode() const { return episode_; }
  const TrainConfig& config() const { return config_; }
  const AlphaPool& pool() const { return pool_; }
  const PolicyNet& policy() const { return policy_; }
  const ActionSpace& space() const { return space_; }

  // Binary checkpoint: parameters, optimizer moments, sampler RNG state,
  // episode counter and pool. Signals are re-evaluated on load.
  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  TrainConfig config_;
  const Panel* panel_;
  ActionSpace space_;
  PolicyNet policy_;
  Adam optimizer_;
  std::mt19937_64 rng_;
  AlphaPool pool_;
  std::int64_t episode_ = 0;
};

AlphaPool mine(const TrainConfig& config, const Panel& panel);

}  // namespace gfnalpha
