#pragma once

// Reward terms: predictive correlation, structure-aware similarity to the
// pool's nearest neighbours in embedding space, novelty against the pool's
// signals, and their annealed combination.

#include <vector>

#include <Eigen/Dense>

#include "gfnalpha/engine.hpp"
#include "gfnalpha/pool.hpp"

namespace gfnalpha {

inline constexpr double kRewardFloor = 1e-6;
inline constexpr int kDefaultNeighbours = 5;

struct IcScore {
  double value = 0.0;
  bool degenerate = false;
};

// |mean_d rho_d| over the signal's live days; 0 and degenerate when no day
// has a defined correlation.
IcScore r_ic(const Signal& signal, const Eigen::MatrixXd& labels);

// Mean over days and assets of (z_i - z_j)^2 / 2 on the rows where both
// signals are finite. Identical signals give 0, z and -z give 2 for unit
// variance rows.
double behavioral_distance(const Signal& a, const Signal& b);

// exp(-sum_j w_j d_behav(i, j)) over the K nearest pool embeddings (squared
// Euclidean), w = softmax of negative squared distances. Empty pool -> 1.
// Throws std::invalid_argument for k <= 0.
double r_sa(const Eigen::RowVectorXd& embedding, const Signal& signal, const AlphaPool& pool,
            int k = kDefaultNeighbours);

// Softmax weights of the K nearest neighbours, with their pool indices.
struct NeighbourWeights {
  std::vector<int> index;
  std::vector<double> weight;
};
NeighbourWeights nearest_neighbours(const Eigen::RowVectorXd& embedding, const AlphaPool& pool,
                                    int k);

// 1 - max_j |mean_d corr(z, z_j)| over the library; empty library -> 1.
double r_nov(const Signal& signal, const std::vector<const Signal*>& library);
double r_nov(const Signal& signal, const AlphaPool& pool);

struct RewardBreakdown {
  double r_ic = 0.0;
  double r_sa = 1.0;
  double r_nov = 1.0;
  double lambda = 0.0;
  double eta = 0.0;
  double total = kRewardFloor;
  bool degenerate = false;
};

// lambda(T) = max(0, 1 - T / T_anneal) lambda_max, likewise eta. total is
// replaced by the floor when degenerate or non-finite, and clamped below by
// it otherwise. Throws std::invalid_argument for T_anneal <= 0 or T < 0.
RewardBreakdown combined(double r_ic, double r_sa, double r_nov, double T, double T_anneal,
                         double lambda_max = 1.0, double eta_max = 0.3, bool degenerate = false,
                         double floor = kRewardFloor);

}  // namespace gfnalpha
