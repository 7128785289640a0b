#pragma once

// Panel data and the evaluator that turns a terminal expression tree into a
// cross-sectionally normalized signal.
//
// Matrices are days x assets (row = day). NaN policy: elementwise ops
// propagate NaN and any non-finite result becomes NaN; a rolling window that
// is incomplete or contains a NaN yields NaN; cross-sectional ops ignore NaN
// cells.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfnalpha/formula.hpp"

namespace gfnalpha {

inline constexpr double kEps = 1e-8;
inline constexpr int kDefaultHorizon = 20;

struct Panel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  std::array<Eigen::MatrixXd, kNumFeatures> features;
  // Forward returns (or planted labels); NaN where unknown.
  Eigen::MatrixXd labels;

  int num_days() const { return static_cast<int>(dates.size()); }
  int num_assets() const { return static_cast<int>(assets.size()); }
  const Eigen::MatrixXd& feature(Feature f) const {
    return features[static_cast<int>(f)];
  }
};

struct Signal {
  Eigen::MatrixXd values;
  int valid_from = 0;
  bool degenerate = false;
  // Per-day flag: row had fewer than two distinct values (emitted as zeros)
  // or lies before valid_from.
  std::vector<bool> day_degenerate;

  int num_days() const { return static_cast<int>(values.rows()); }
};

struct NormalizedRows {
  Eigen::MatrixXd values;
  std::vector<bool> degenerate;
  // Some row had no finite value at all.
  bool all_nan_row = false;
};

// Per row: impute NaN with the row mean, subtract the mean and divide by the
// population std. Rows with std < kEps become zeros and are flagged.
NormalizedRows cross_normalize(const Eigen::MatrixXd& values);

// Within-day average rank mapped to [0, 1]; a single finite value maps to 0.5.
Eigen::MatrixXd cross_rank(const Eigen::MatrixXd& x);

Eigen::MatrixXd unary_op(Op op, const Eigen::MatrixXd& x);
Eigen::MatrixXd binary_op(Op op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
// Rolling-unary operator over the window [t-w+1, t] (lag operators read
// t-w). Throws std::invalid_argument for w < 1 or a non rolling-unary op.
Eigen::MatrixXd rolling_op(Op op, const Eigen::MatrixXd& x, int w);
Eigen::MatrixXd rolling_binary_op(Op op, const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b, int w);

// Rows of warm-up an operator adds on top of its operands.
int op_lookback(Op op, int w);

// Raw operator output before normalization. Throws on non-terminal trees.
Eigen::MatrixXd evaluate_raw(const ExprTree& tree, const Panel& panel);

// Rows before valid_from become NaN; the rest are cross-normalized.
Signal make_signal(const Eigen::MatrixXd& raw, int valid_from);

// Throws std::invalid_argument if the tree is not terminal or its lookback
// does not fit in the panel. Degenerate alphas are flagged, not thrown.
Signal evaluate(const ExprTree& tree, const Panel& panel);

// labels[d] = close[d+1+h] / close[d+1] - 1, NaN where out of range.
Eigen::MatrixXd forward_returns(const Eigen::MatrixXd& close, int horizon);

struct SyntheticConfig {
  std::uint64_t seed = 1;
  int days = 750;
  int assets = 100;
  // RPN of a planted alpha; labels become its normalized signal plus noise.
  std::optional<std::string> planted;
  double noise = 0.0;
  int horizon = kDefaultHorizon;
};

// Std of the label noise that gives a planted alpha the requested expected
// per-day correlation with its labels.
double noise_for_ic(double target_ic);

// Geometric random-walk OHLCV panel. Throws std::invalid_argument for
// days < 100 or assets < 10.
Panel generate_synthetic(const SyntheticConfig& config);

// Long CSV, header `date,asset,open,high,low,close,vwap,volume`.
void write_panel_csv(const Panel& panel, const std::string& path);
// Labels default to forward returns over `horizon`. Throws
// std::runtime_error on I/O or format errors.
Panel read_panel_csv(const std::string& path, int horizon = kDefaultHorizon);

// Sidecar label file, header `date,asset,label`.
void write_labels_csv(const Panel& panel, const std::string& path);
void read_labels_csv(Panel& panel, const std::string& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace gfnalpha
