#include "gfnalpha/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gfnalpha/metrics.hpp"

namespace gfnalpha {

IcScore r_ic(const Signal& signal, const Eigen::MatrixXd& labels) {
  if (signal.values.rows() != labels.rows() || signal.values.cols() != labels.cols()) {
    throw std::invalid_argument("r_ic: signal and labels differ in shape");
  }
  const auto m = mean_correlation(signal.values, labels, signal.valid_from);
  if (!m) return {0.0, true};
  return {std::abs(*m), false};
}

double behavioral_distance(const Signal& a, const Signal& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw std::invalid_argument("behavioral_distance: shape mismatch");
  }
  double total = 0.0;
  long count = 0;
  for (Eigen::Index d = 0; d < a.values.rows(); ++d) {
    for (Eigen::Index j = 0; j < a.values.cols(); ++j) {
      const double x = a.values(d, j);
      const double y = b.values(d, j);
      if (std::isfinite(x) && std::isfinite(y)) {
        total += (x - y) * (x - y);
        ++count;
      }
    }
  }
  if (count == 0) return 0.0;
  return 0.5 * total / static_cast<double>(count);
}

NeighbourWeights nearest_neighbours(const Eigen::RowVectorXd& embedding, const AlphaPool& pool,
                                    int k) {
  if (k <= 0) throw std::invalid_argument("K must be positive");
  NeighbourWeights out;
  const auto& entries = pool.entries();
  std::vector<std::pair<double, int>> dist;
  for (int i = 0; i < static_cast<int>(entries.size()); ++i) {
    dist.emplace_back((entries[i].embedding - embedding).squaredNorm(), i);
  }
  std::stable_sort(dist.begin(), dist.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  if (static_cast<int>(dist.size()) > k) dist.resize(k);
  if (dist.empty()) return out;
  const double shift = dist.front().first;
  double z = 0.0;
  for (const auto& [d, i] : dist) {
    out.index.push_back(i);
    out.weight.push_back(std::exp(-(d - shift)));
    z += out.weight.back();
  }
  for (double& w : out.weight) w /= z;
  return out;
}

double r_sa(const Eigen::RowVectorXd& embedding, const Signal& signal, const AlphaPool& pool,
            int k) {
  const NeighbourWeights nn = nearest_neighbours(embedding, pool, k);
  if (nn.index.empty()) return 1.0;
  double s = 0.0;
  for (std::size_t n = 0; n < nn.index.size(); ++n) {
    s += nn.weight[n] * behavioral_distance(signal, pool.entries()[nn.index[n]].signal);
  }
  return std::exp(-s);
}

double r_nov(const Signal& signal, const std::vector<const Signal*>& library) {
  double worst = 0.0;
  for (const Signal* member : library) {
    const int first = std::max(signal.valid_from, member->valid_from);
    const auto m = mean_correlation(signal.values, member->values, first);
    if (m) worst = std::max(worst, std::abs(*m));
  }
  return std::clamp(1.0 - worst, 0.0, 1.0);
}

double r_nov(const Signal& signal, const AlphaPool& pool) {
  std::vector<const Signal*> library;
  for (const PoolEntry& e : pool.entries()) library.push_back(&e.signal);
  return r_nov(signal, library);
}

RewardBreakdown combined(double r_ic, double r_sa, double r_nov, double T, double T_anneal,
                         double lambda_max, double eta_max, bool degenerate, double floor) {
  if (!(T_anneal > 0.0)) throw std::invalid_argument("T_anneal must be positive");
  if (T < 0.0) throw std::invalid_argument("T must be non-negative");
  RewardBreakdown b;
  b.r_ic = r_ic;
  b.r_sa = r_sa;
  b.r_nov = r_nov;
  const double frac = std::max(0.0, 1.0 - T / T_anneal);
  b.lambda = frac * lambda_max;
  b.eta = frac * eta_max;
  b.degenerate = degenerate;
  const double total = r_ic + b.lambda * r_sa + b.eta * r_nov;
  b.total = (degenerate || !std::isfinite(total)) ? floor : std::max(total, floor);
  return b;
}

}  // namespace gfnalpha
