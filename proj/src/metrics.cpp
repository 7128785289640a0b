#include "gfnalpha/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gfnalpha {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanStd {
  double mean = 0.0;
  std::optional<double> ratio;
};

// Mean and mean/sample-std; the ratio is absent for < 2 values or a series
// whose spread is at rounding level.
MeanStd mean_and_ratio(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  const double n = static_cast<double>(xs.size());
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd > 1e-12 * std::max(1.0, std::abs(out.mean))) out.ratio = out.mean / sd;
  return out;
}

}  // namespace

std::optional<double> row_correlation(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  const Eigen::Index n = a.size();
  double sa = 0.0, sb = 0.0;
  int count = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(a(j)) && std::isfinite(b(j))) {
      sa += a(j);
      sb += b(j);
      ++count;
    }
  }
  if (count < 2) return std::nullopt;
  const double ma = sa / count;
  const double mb = sb / count;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(a(j)) && std::isfinite(b(j))) {
      const double da = a(j) - ma;
      const double db = b(j) - mb;
      cov += da * db;
      va += da * da;
      vb += db * db;
    }
  }
  if (!(va > 0.0) || !(vb > 0.0)) return std::nullopt;
  const double r = cov / std::sqrt(va * vb);
  return std::clamp(r, -1.0, 1.0);
}

Eigen::RowVectorXd average_ranks(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Constant(x.size(), kNaN);
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (std::isfinite(x(j))) idx.push_back(j);
  }
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && x(idx[j]) == x(idx[i])) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) out(idx[k]) = avg;
    i = j;
  }
  return out;
}

std::vector<double> daily_correlations(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       int first_day, bool rank) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("daily_correlations shape mismatch");
  }
  std::vector<double> out;
  for (Eigen::Index d = std::max(first_day, 0); d < a.rows(); ++d) {
    std::optional<double> r;
    if (rank) {
      Eigen::RowVectorXd ra = a.row(d);
      Eigen::RowVectorXd rb = b.row(d);
      for (Eigen::Index j = 0; j < ra.size(); ++j) {
        if (!std::isfinite(ra(j)) || !std::isfinite(rb(j))) ra(j) = rb(j) = kNaN;
      }
      r = row_correlation(average_ranks(ra), average_ranks(rb));
    } else {
      r = row_correlation(a.row(d), b.row(d));
    }
    if (r) out.push_back(*r);
  }
  return out;
}

std::optional<double> mean_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       int first_day) {
  const auto rho = daily_correlations(a, b, first_day);
  if (rho.empty()) return std::nullopt;
  return std::accumulate(rho.begin(), rho.end(), 0.0) / static_cast<double>(rho.size());
}

CorrelationReport correlation_metrics(const Signal& signal, const Eigen::MatrixXd& labels) {
  const auto rho = daily_correlations(signal.values, labels, signal.valid_from);
  if (rho.empty()) throw std::runtime_error("correlation_metrics: every day is degenerate");
  const auto rank_rho = daily_correlations(signal.values, labels, signal.valid_from, true);
  CorrelationReport rep;
  const MeanStd plain = mean_and_ratio(rho);
  const MeanStd ranked = mean_and_ratio(rank_rho);
  rep.ic = std::abs(plain.mean);
  rep.icir = plain.ratio;
  rep.rank_ic = std::abs(ranked.mean);
  rep.rank_icir = ranked.ratio;
  rep.days = static_cast<int>(rho.size());
  return rep;
}

std::vector<double> wealth_curve(const std::vector<double>& returns) {
  std::vector<double> w;
  w.reserve(returns.size());
  double level = 1.0;
  for (double r : returns) {
    level *= 1.0 + r;
    w.push_back(level);
  }
  return w;
}

double max_drawdown(const std::vector<double>& wealth) {
  double peak = 1.0;
  double worst = 0.0;
  for (double w : wealth) {
    peak = std::max(peak, w);
    worst = std::max(worst, 1.0 - w / peak);
  }
  return -worst;
}

PortfolioStats portfolio_stats(const std::vector<double>& returns, int periods_per_year) {
  PortfolioStats s;
  if (returns.empty()) return s;
  const MeanStd ms = mean_and_ratio(returns);
  s.ar = periods_per_year * ms.mean;
  s.mdd = max_drawdown(wealth_curve(returns));
  if (ms.ratio) s.sr = std::sqrt(static_cast<double>(periods_per_year)) * *ms.ratio;
  return s;
}

namespace {

// Assets of `row` sorted by descending value (finite only), ties by index.
std::vector<Eigen::Index> ranked_assets(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (std::isfinite(row(j))) idx.push_back(j);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return row(a) > row(b); });
  return idx;
}

int basket_size(double quantile, std::size_t n, bool& clipped) {
  const int k = static_cast<int>(std::floor(quantile * static_cast<double>(n) + 1e-9));
  clipped = k < 1;
  return std::max(1, k);
}

}  // namespace

MetricsReport backtest(const Signal& signal, const Panel& panel, const BacktestConfig& config) {
  const int D = panel.num_days();
  const int N = panel.num_assets();
  if (signal.values.rows() != D || signal.values.cols() != N) {
    throw std::invalid_argument("backtest: signal shape does not match panel");
  }
  if (config.hold < 1) throw std::invalid_argument("backtest: hold must be >= 1");
  const int first = signal.valid_from;
  if (first + 2 >= D) throw std::invalid_argument("backtest: not enough history for one tranche");

  const Eigen::MatrixXd& close = panel.feature(Feature::Close);
  Eigen::MatrixXd asset_ret = Eigen::MatrixXd::Zero(D, N);
  for (int t = 1; t < D; ++t) {
    for (int j = 0; j < N; ++j) {
      const double r = close(t, j) / close(t - 1, j) - 1.0;
      asset_ret(t, j) = std::isfinite(r) ? r : 0.0;
    }
  }

  MetricsReport rep;
  const double tranche_weight = 1.0 / config.hold;
  const double cost = config.cost_bps * 1e-4;
  std::vector<double> daily(D, 0.0);
  bool warned = false;
  for (int d = first; d + 2 < D; ++d) {
    if (signal.day_degenerate.size() == static_cast<std::size_t>(D) && signal.day_degenerate[d]) {
      continue;
    }
    const auto order = ranked_assets(signal.values.row(d));
    if (order.empty()) continue;
    bool clipped_long = false, clipped_short = false;
    int n_long = basket_size(config.long_quantile, order.size(), clipped_long);
    int n_short = 0;
    if (config.mode == MarketMode::LongShort) {
      n_short = basket_size(config.short_quantile, order.size(), clipped_short);
      if (n_long + n_short > static_cast<int>(order.size())) {
        n_long = n_short = std::max<int>(1, static_cast<int>(order.size()) / 2);
        clipped_long = true;
      }
    }
    if ((clipped_long || clipped_short) && !warned) {
      rep.warnings.push_back("fewer assets than the selection quantile; using the widest feasible basket");
      warned = true;
    }
    const int legs = config.mode == MarketMode::LongShort ? 2 : 1;
    const int last = std::min(D - 1, d + config.hold + 1);
    for (int t = d + 2; t <= last; ++t) {
      double r = 0.0;
      for (int k = 0; k < n_long; ++k) r += asset_ret(t, order[k]);
      r /= n_long;
      if (n_short > 0) {
        double s = 0.0;
        for (int k = 0; k < n_short; ++k) s += asset_ret(t, order[order.size() - 1 - k]);
        r -= s / n_short;
      }
      daily[t] += tranche_weight * r;
    }
    daily[d + 2] -= tranche_weight * cost * legs;
    daily[last] -= tranche_weight * cost * legs;
  }

  for (int t = first + 2; t < D; ++t) {
    rep.dates.push_back(panel.dates[t]);
    rep.daily_returns.push_back(daily[t]);
  }
  rep.wealth = wealth_curve(rep.daily_returns);
  rep.portfolio = portfolio_stats(rep.daily_returns, config.periods_per_year);
  try {
    rep.correlation = correlation_metrics(signal, panel.labels);
  } catch (const std::runtime_error&) {
    rep.correlation.reset();
  }
  return rep;
}

void emit_wealth_curve(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date,R,W\n";
  for (std::size_t i = 0; i < report.daily_returns.size(); ++i) {
    out << report.dates[i] << ',' << format_double(report.daily_returns[i]) << ','
        << format_double(report.wealth[i]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<WealthRow> read_wealth_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<WealthRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    WealthRow r;
    std::string ret, wealth;
    std::getline(cells, r.date, ',');
    std::getline(cells, ret, ',');
    std::getline(cells, wealth, ',');
    r.ret = std::stod(ret);
    r.wealth = std::stod(wealth);
    rows.push_back(r);
  }
  return rows;
}

void write_metrics_summary(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("absent");
  };
  if (report.correlation) {
    out << "IC = " << format_double(report.correlation->ic) << '\n';
    out << "ICIR = " << opt(report.correlation->icir) << '\n';
    out << "RIC = " << format_double(report.correlation->rank_ic) << '\n';
    out << "RICIR = " << opt(report.correlation->rank_icir) << '\n';
  } else {
    out << "IC = absent\nICIR = absent\nRIC = absent\nRICIR = absent\n";
  }
  out << "AR = " << format_double(report.portfolio.ar) << '\n';
  out << "MDD = " << format_double(report.portfolio.mdd) << '\n';
  out << "SR = " << opt(report.portfolio.sr) << '\n';
}

}  // namespace gfnalpha
