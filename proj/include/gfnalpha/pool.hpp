#pragma once

// Alpha pool, the rolling re-selection / regression combiner (Mega-Alpha)
// and conditioning diagnostics of the pool's signal correlation matrix.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfnalpha/engine.hpp"
#include "gfnalpha/formula.hpp"

namespace gfnalpha {

inline constexpr int kDefaultPoolCapacity = 50;

struct PoolEntry {
  ExprTree tree;
  std::string rpn;  // canonical
  Eigen::RowVectorXd embedding;
  Signal signal;
  double r_ic = 0.0;
  std::int64_t admit_step = 0;
};

struct AdmitResult {
  bool admitted = false;
  std::optional<std::string> evicted;  // canonical RPN of the removed entry
};

class AlphaPool {
 public:
  explicit AlphaPool(int capacity = kDefaultPoolCapacity);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  const std::vector<PoolEntry>& entries() const { return entries_; }
  bool contains(const std::string& canonical) const;

  // Inserts unless the canonical RPN is already present. At capacity the
  // lowest-r_ic member (earliest admitted on ties) is evicted, which may be
  // the candidate itself.
  AdmitResult admit(PoolEntry entry);

 private:
  int capacity_;
  std::vector<PoolEntry> entries_;
};

// Pool file: one line per entry, `rpn<TAB>admit_step<TAB>r_ic`. Lines
// starting with '#' and blank lines are ignored on read.
void write_pool_file(const AlphaPool& pool, const std::string& path);
struct PoolFileEntry {
  std::string rpn;
  std::int64_t admit_step = 0;
  double r_ic = 0.0;
};
std::vector<PoolFileEntry> read_pool_file(const std::string& path);

struct CombinerConfig {
  int lookback = 252;
  int top_k = 10;
  int rebalance = 20;
  // Labels of day d are known after d + horizon + 1, so the training window
  // for a rebalance on day t ends at t - horizon - 1.
  int horizon = kDefaultHorizon;
};

struct MegaAlpha {
  Signal signal;
  std::vector<int> rebalance_days;
  // rebalance_days.size() x entries; unselected entries have weight 0.
  Eigen::MatrixXd weights;
};

// Throws std::invalid_argument for an empty input or a lookback longer than
// the history, std::runtime_error when no rebalance window has a valid row.
MegaAlpha combine_mega_alpha(const std::vector<Signal>& signals, const Eigen::MatrixXd& labels,
                             const CombinerConfig& config = {});

// CSV: `date,<rpn 1>,<rpn 2>,...`, one row per rebalance date.
void write_weights_csv(const MegaAlpha& mega, const std::vector<std::string>& dates,
                       const std::vector<std::string>& names, const std::string& path);

struct DiversityReport {
  Eigen::MatrixXd correlation;
  Eigen::VectorXd eigenvalues;  // descending
  double condition_number = 0.0;
  bool singular = false;
  double sigma2 = 1.0;
  double samples = 1.0;  // T
  double trace_variance = 0.0;
  Eigen::VectorXd vif;
  double in_sample_risk = 0.0;       // sigma^2 N
  double out_of_sample_risk = 0.0;   // sigma^2 (1 + N / T)
};

// From a correlation matrix. Throws std::invalid_argument with fewer than
// two columns or a non-square input.
DiversityReport variance_diagnostics(const Eigen::MatrixXd& correlation, double sigma2, double T);
// From signals: rows are (day, asset) pairs finite in every signal, columns
// standardized. T defaults to the number of such rows.
DiversityReport variance_diagnostics(const std::vector<Signal>& signals, double sigma2,
                                     std::optional<double> T = std::nullopt);

double ridge_variance(const Eigen::MatrixXd& correlation, double lambda, double sigma2, double T);

Eigen::MatrixXd equicorrelation(int n, double rho);

// Mean relative change of the solution of Sigma b = g under random relative
// perturbations of g with size `rel`.
double perturbation_sensitivity(const Eigen::MatrixXd& sigma, std::mt19937_64& rng, int trials = 200,
                                double rel = 1e-6);

void write_diversity_report(const DiversityReport& report, const std::vector<std::string>& names,
                            std::ostream& out);

}  // namespace gfnalpha
