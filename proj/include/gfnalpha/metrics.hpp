#pragma once

// Correlation metrics and the overlapping-tranche portfolio backtest.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfnalpha/engine.hpp"

namespace gfnalpha {

// Pearson correlation over entries finite in both rows. nullopt with fewer
// than two such entries or zero variance on either side.
std::optional<double> row_correlation(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& b);

// Average ranks (1-based) of the finite entries; NaN elsewhere.
Eigen::RowVectorXd average_ranks(const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Per-day correlation series from `first_day` on; degenerate days skipped.
// With `rank`, both rows are restricted to jointly finite entries and
// rank-transformed first.
std::vector<double> daily_correlations(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       int first_day, bool rank = false);

// Signed mean of the per-day correlation series; nullopt if no valid day.
std::optional<double> mean_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       int first_day);

struct CorrelationReport {
  double ic = 0.0;
  std::optional<double> icir;
  double rank_ic = 0.0;
  std::optional<double> rank_icir;
  int days = 0;
};

// ic = |mean rho_d|; icir = mean / std (signed). Throws std::runtime_error
// when every day is degenerate.
CorrelationReport correlation_metrics(const Signal& signal, const Eigen::MatrixXd& labels);

enum class MarketMode { LongOnly, LongShort };

struct BacktestConfig {
  MarketMode mode = MarketMode::LongOnly;
  double long_quantile = 0.2;
  double short_quantile = 0.0;
  int hold = 20;
  double cost_bps = 0.0;  // per side
  int periods_per_year = 252;

  static BacktestConfig long_only() { return {}; }
  static BacktestConfig long_short() {
    BacktestConfig c;
    c.mode = MarketMode::LongShort;
    c.long_quantile = 0.1;
    c.short_quantile = 0.1;
    return c;
  }
};

struct PortfolioStats {
  double ar = 0.0;
  double mdd = 0.0;  // <= 0
  std::optional<double> sr;
};

// W_t = prod_{u<=t} (1 + R_u).
std::vector<double> wealth_curve(const std::vector<double>& returns);
// -max_t (1 - W_t / max_{u<=t} W_u), with the initial capital W = 1 as a peak.
double max_drawdown(const std::vector<double>& wealth);
PortfolioStats portfolio_stats(const std::vector<double>& returns, int periods_per_year = 252);

struct MetricsReport {
  std::optional<CorrelationReport> correlation;
  PortfolioStats portfolio;
  std::vector<std::string> dates;
  std::vector<double> daily_returns;
  std::vector<double> wealth;
  std::vector<std::string> warnings;
};

// Each signal day d opens a tranche of 1/hold of capital in the selected
// basket (equal weight). It is entered at the close of d+1 and earns the
// close-to-close returns of days d+2 .. d+hold+1. Missing prices count as a
// flat day.
MetricsReport backtest(const Signal& signal, const Panel& panel, const BacktestConfig& config);

// CSV `date,R,W`, values in shortest round-trip form.
void emit_wealth_curve(const MetricsReport& report, const std::string& path);
struct WealthRow {
  std::string date;
  double ret = 0.0;
  double wealth = 0.0;
};
std::vector<WealthRow> read_wealth_curve(const std::string& path);

// One `key = value` line per metric; absent metrics print as `absent`.
void write_metrics_summary(const MetricsReport& report, const std::string& path);

}  // namespace gfnalpha
