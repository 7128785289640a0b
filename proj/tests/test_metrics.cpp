#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "gfnalpha/metrics.hpp"
#include "random_trees.hpp"

using namespace gfnalpha;
using testing_support::random_matrix;

namespace {

const Panel& synthetic() {
  static const Panel p = [] {
    SyntheticConfig cfg;
    cfg.seed = 21;
    cfg.days = 300;
    cfg.assets = 50;
    return generate_synthetic(cfg);
  }();
  return p;
}

Panel panel_from_close(const Eigen::MatrixXd& close) {
  Panel p;
  for (int d = 0; d < close.rows(); ++d) p.dates.push_back("2020-01-" + std::to_string(10 + d));
  for (int j = 0; j < close.cols(); ++j) p.assets.push_back("A" + std::to_string(j));
  for (auto& f : p.features) f = close;
  p.labels = forward_returns(close, 1);
  return p;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gfnalpha_metrics_" + name)).string();
}

}  // namespace

TEST(Correlation, SelfIsOne) {
  std::mt19937_64 rng(1);
  const Signal s = make_signal(random_matrix(50, 30, rng), 0);
  const CorrelationReport r = correlation_metrics(s, s.values);
  EXPECT_NEAR(r.ic, 1.0, 1e-12);
  EXPECT_NEAR(r.rank_ic, 1.0, 1e-12);
  EXPECT_EQ(r.days, 50);
  // Constant per-day series: ICIR has zero variance in the denominator.
  EXPECT_FALSE(r.icir.has_value());
  EXPECT_FALSE(r.rank_icir.has_value());
}

TEST(Correlation, RankIcInvariantUnderCubing) {
  std::mt19937_64 rng(2);
  const Signal s = make_signal(random_matrix(50, 30, rng), 0);
  const Eigen::MatrixXd y = s.values.array().cube();
  const CorrelationReport r = correlation_metrics(s, y);
  EXPECT_NEAR(r.rank_ic, 1.0, 1e-12);
  EXPECT_LT(r.ic, 1.0 - 1e-3);

  const Eigen::MatrixXd labels = s.values + random_matrix(50, 30, rng);
  const Signal cubed = make_signal(s.values.array().cube(), 0);
  EXPECT_NEAR(correlation_metrics(cubed, labels).rank_ic, correlation_metrics(s, labels).rank_ic, 1e-12);
}

TEST(Correlation, IcirIsSignedMeanOverStd) {
  std::mt19937_64 rng(3);
  const Signal s = make_signal(random_matrix(60, 25, rng), 0);
  const Eigen::MatrixXd y = -s.values + 2.0 * random_matrix(60, 25, rng);
  const CorrelationReport r = correlation_metrics(s, y);
  const std::vector<double> rho = daily_correlations(s.values, y, 0);
  double m = 0;
  for (double v : rho) m += v;
  m /= rho.size();
  double var = 0;
  for (double v : rho) var += (v - m) * (v - m);
  const double sd = std::sqrt(var / (rho.size() - 1));
  EXPECT_NEAR(r.ic, std::fabs(m), 1e-14);
  ASSERT_TRUE(r.icir.has_value());
  EXPECT_NEAR(*r.icir, m / sd, 1e-12);
  EXPECT_LT(*r.icir, 0.0);
}

TEST(Correlation, AllDaysDegenerateThrows) {
  const Signal s = make_signal(Eigen::MatrixXd::Constant(20, 5, 1.0), 0);
  EXPECT_THROW(correlation_metrics(s, Eigen::MatrixXd::Ones(20, 5)), std::runtime_error);
}

TEST(Ranks, AverageTies) {
  Eigen::RowVectorXd x(5);
  x << 3, 1, 3, std::nan(""), 2;
  const Eigen::RowVectorXd r = average_ranks(x);
  EXPECT_EQ(r(0), 3.5);
  EXPECT_EQ(r(1), 1.0);
  EXPECT_EQ(r(2), 3.5);
  EXPECT_TRUE(std::isnan(r(3)));
  EXPECT_EQ(r(4), 2.0);
}

TEST(Portfolio, ZeroReturns) {
  const PortfolioStats s = portfolio_stats(std::vector<double>(30, 0.0));
  EXPECT_EQ(s.ar, 0.0);
  EXPECT_EQ(s.mdd, 0.0);
  EXPECT_FALSE(s.sr.has_value());
}

TEST(Portfolio, DrawdownOfUpDownPath) {
  const std::vector<double> w = wealth_curve({0.10, -0.10});
  EXPECT_DOUBLE_EQ(w[0], 1.1);
  EXPECT_DOUBLE_EQ(w[1], 0.99);
  EXPECT_NEAR(max_drawdown(w), -0.10, 1e-15);
}

TEST(Portfolio, DrawdownProperties) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.02);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> up, any;
    for (int i = 0; i < 50; ++i) {
      up.push_back(std::fabs(n(rng)));
      any.push_back(n(rng));
    }
    EXPECT_EQ(max_drawdown(wealth_curve(up)), 0.0);
    const double mdd = max_drawdown(wealth_curve(any));
    EXPECT_LE(mdd, 0.0);
    EXPECT_GE(mdd, -1.0);
  }
  // Initial capital counts as a peak.
  EXPECT_NEAR(max_drawdown(wealth_curve({-0.5, 0.2})), -0.5, 1e-15);
}

TEST(Portfolio, AnnualizedStats) {
  const std::vector<double> r{0.01, -0.005, 0.002, 0.004};
  const PortfolioStats s = portfolio_stats(r);
  const double mean = 0.011 / 4;
  double var = 0;
  for (double v : r) var += (v - mean) * (v - mean);
  EXPECT_NEAR(s.ar, 252 * mean, 1e-15);
  ASSERT_TRUE(s.sr.has_value());
  EXPECT_NEAR(*s.sr, std::sqrt(252.0) * mean / std::sqrt(var / 3), 1e-12);
}

TEST(Backtest, HandComputedTranches) {
  // Two assets, asset 1 always preferred. Hold 2 days, long top 50%.
  Eigen::MatrixXd close(6, 2);
  close << 10, 10,
           10, 10,
           10, 11,
           10, 12.1,
           10, 12.1,
           10, 13.31;
  const Panel p = panel_from_close(close);
  Eigen::MatrixXd raw(6, 2);
  raw.col(0).setConstant(0.0);
  raw.col(1).setConstant(1.0);
  const Signal s = make_signal(raw, 0);
  BacktestConfig cfg;
  cfg.long_quantile = 0.5;
  cfg.hold = 2;
  const MetricsReport r = backtest(s, p, cfg);
  ASSERT_EQ(r.dates.front(), p.dates[2]);
  ASSERT_EQ(r.daily_returns.size(), 4u);
  // Day 2: only the tranche opened on day 0 is live (half the capital).
  EXPECT_NEAR(r.daily_returns[0], 0.5 * 0.1, 1e-12);
  EXPECT_NEAR(r.daily_returns[1], 0.5 * 0.1 + 0.5 * 0.1, 1e-12);
  EXPECT_NEAR(r.daily_returns[2], 0.0, 1e-12);
  EXPECT_NEAR(r.daily_returns[3], 0.5 * 0.1 + 0.5 * 0.1, 1e-12);
}

TEST(Backtest, CostsReduceReturns) {
  std::mt19937_64 rng(5);
  const Panel& p = synthetic();
  const Signal s = make_signal(random_matrix(p.num_days(), p.num_assets(), rng), 0);
  BacktestConfig cfg;
  const double free = backtest(s, p, cfg).portfolio.ar;
  cfg.cost_bps = 10;
  EXPECT_LT(backtest(s, p, cfg).portfolio.ar, free);
}

TEST(Backtest, BasketClippedWithWarning) {
  Eigen::MatrixXd close = Eigen::MatrixXd::Constant(30, 3, 10.0);
  const Panel p = panel_from_close(close);
  std::mt19937_64 rng(6);
  const Signal s = make_signal(random_matrix(30, 3, rng), 0);
  const MetricsReport r = backtest(s, p, BacktestConfig::long_only());
  EXPECT_FALSE(r.warnings.empty());
  for (double v : r.daily_returns) EXPECT_EQ(v, 0.0);
}

TEST(Backtest, OracleBeatsRandomSignals) {
  const Panel& p = synthetic();
  const Signal oracle = make_signal(p.labels, 0);
  const double oracle_ar = backtest(oracle, p, BacktestConfig::long_only()).portfolio.ar;
  std::vector<double> random_ar;
  for (int i = 0; i < 100; ++i) {
    std::mt19937_64 rng(100 + i);
    const Signal s = make_signal(random_matrix(p.num_days(), p.num_assets(), rng), 0);
    random_ar.push_back(backtest(s, p, BacktestConfig::long_only()).portfolio.ar);
  }
  std::sort(random_ar.begin(), random_ar.end());
  EXPECT_GT(oracle_ar, random_ar[98]);
}

TEST(Backtest, LongShortRandomSignalsCentreOnZero) {
  const Panel& p = synthetic();
  std::vector<double> ar;
  for (int i = 0; i < 100; ++i) {
    std::mt19937_64 rng(300 + i);
    const Signal s = make_signal(random_matrix(p.num_days(), p.num_assets(), rng), 0);
    ar.push_back(backtest(s, p, BacktestConfig::long_short()).portfolio.ar);
  }
  double m = 0;
  for (double v : ar) m += v;
  m /= ar.size();
  double var = 0;
  for (double v : ar) var += (v - m) * (v - m);
  const double se = std::sqrt(var / (ar.size() - 1) / ar.size());
  EXPECT_LT(std::fabs(m), 4 * se);
  const Signal oracle = make_signal(p.labels, 0);
  EXPECT_GT(backtest(oracle, p, BacktestConfig::long_short()).portfolio.ar, 0.0);
}

TEST(WealthCsv, FlatReturns) {
  Eigen::MatrixXd close = Eigen::MatrixXd::Constant(5, 10, 7.0);
  const Panel p = panel_from_close(close);
  std::mt19937_64 rng(7);
  BacktestConfig cfg;
  cfg.hold = 1;
  const MetricsReport r = backtest(make_signal(random_matrix(5, 10, rng), 0), p, cfg);
  ASSERT_EQ(r.wealth.size(), 3u);
  const std::string path = tmp_path("flat.csv");
  emit_wealth_curve(r, path);
  const auto rows = read_wealth_curve(path);
  std::filesystem::remove(path);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) {
    EXPECT_EQ(row.ret, 0.0);
    EXPECT_EQ(row.wealth, 1.0);
  }
}

TEST(WealthCsv, RoundTripIsExactAndOrdered) {
  std::mt19937_64 rng(8);
  const Panel& p = synthetic();
  const Signal s = make_signal(random_matrix(p.num_days(), p.num_assets(), rng), 10);
  const MetricsReport r = backtest(s, p, BacktestConfig::long_short());
  EXPECT_EQ(r.dates.front(), p.dates[12]);
  const std::string path = tmp_path("wealth.csv");
  emit_wealth_curve(r, path);
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "date,R,W");
  }
  const auto rows = read_wealth_curve(path);
  std::filesystem::remove(path);
  ASSERT_EQ(rows.size(), r.wealth.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].date, r.dates[i]);
    EXPECT_EQ(rows[i].ret, r.daily_returns[i]);
    EXPECT_EQ(rows[i].wealth, r.wealth[i]);
    if (i) EXPECT_LT(rows[i - 1].date, rows[i].date);
  }
}

TEST(Summary, AbsentMetricsAreMarked) {
  MetricsReport r;
  r.portfolio = portfolio_stats(std::vector<double>(5, 0.0));
  const std::string path = tmp_path("summary.txt");
  write_metrics_summary(r, path);
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::filesystem::remove(path);
  EXPECT_NE(text.find("SR = absent"), std::string::npos) << text;
  EXPECT_NE(text.find("AR = 0"), std::string::npos) << text;
}
