#include "gfnalpha/pool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gfnalpha/metrics.hpp"

namespace gfnalpha {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

AlphaPool::AlphaPool(int capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw std::invalid_argument("pool capacity must be >= 1");
}

bool AlphaPool::contains(const std::string& canonical) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const PoolEntry& e) { return e.rpn == canonical; });
}

AdmitResult AlphaPool::admit(PoolEntry entry) {
  AdmitResult res;
  if (contains(entry.rpn)) return res;
  if (size() < capacity_) {
    entries_.push_back(std::move(entry));
    res.admitted = true;
    return res;
  }
  auto worst = std::min_element(entries_.begin(), entries_.end(),
                                [](const PoolEntry& a, const PoolEntry& b) { return a.r_ic < b.r_ic; });
  if (!(entry.r_ic > worst->r_ic)) {
    res.evicted = entry.rpn;
    return res;
  }
  res.evicted = worst->rpn;
  entries_.erase(worst);
  entries_.push_back(std::move(entry));
  res.admitted = true;
  return res;
}

void write_pool_file(const AlphaPool& pool, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const PoolEntry& e : pool.entries()) {
    out << e.rpn << '\t' << e.admit_step << '\t' << format_double(e.r_ic) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<PoolFileEntry> read_pool_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<PoolFileEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    PoolFileEntry e;
    std::istringstream cells(line);
    std::string step, ric;
    std::getline(cells, e.rpn, '\t');
    if (std::getline(cells, step, '\t')) {
      std::getline(cells, ric, '\t');
      try {
        e.admit_step = std::stoll(step);
        e.r_ic = ric.empty() ? 0.0 : std::stod(ric);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed pool line");
      }
    }
    try {
      parse_rpn(e.rpn);
    } catch (const std::invalid_argument& err) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + err.what());
    }
    out.push_back(e);
  }
  return out;
}

MegaAlpha combine_mega_alpha(const std::vector<Signal>& signals, const Eigen::MatrixXd& labels,
                             const CombinerConfig& config) {
  if (signals.empty()) throw std::invalid_argument("combiner needs at least one signal");
  if (config.lookback < 1 || config.top_k < 1 || config.rebalance < 1 || config.horizon < 0) {
    throw std::invalid_argument("invalid combiner configuration");
  }
  const Eigen::Index D = labels.rows();
  const Eigen::Index N = labels.cols();
  for (const Signal& s : signals) {
    if (s.values.rows() != D || s.values.cols() != N) {
      throw std::invalid_argument("signal shape does not match labels");
    }
  }
  const int gap = config.horizon + 1;
  const int first = config.lookback + gap - 1;
  if (first >= D) throw std::invalid_argument("combiner lookback exceeds available history");

  const int k_all = static_cast<int>(signals.size());
  MegaAlpha mega;
  Eigen::MatrixXd raw = Eigen::MatrixXd::Constant(D, N, kNaN);
  std::vector<Eigen::RowVectorXd> weight_rows;
  Eigen::RowVectorXd current;
  int fitted_from = -1;

  for (int t = first; t < D; t += config.rebalance) {
    const int we = t - gap;
    const int ws = we - config.lookback + 1;
    const Eigen::MatrixXd y_win = labels.middleRows(ws, config.lookback);

    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < k_all; ++i) {
      const auto ic = mean_correlation(signals[i].values.middleRows(ws, config.lookback), y_win, 0);
      if (ic) scored.emplace_back(std::abs(*ic), i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (static_cast<int>(scored.size()) > config.top_k) scored.resize(config.top_k);
    std::vector<int> chosen;
    for (const auto& s : scored) chosen.push_back(s.second);
    std::sort(chosen.begin(), chosen.end());

    Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(k_all);
    bool fitted = false;
    if (!chosen.empty()) {
      const int k = static_cast<int>(chosen.size());
      std::vector<Eigen::RowVectorXd> xs;
      std::vector<double> ys;
      for (int d = ws; d <= we; ++d) {
        const std::size_t begin = ys.size();
        for (Eigen::Index j = 0; j < N; ++j) {
          if (!std::isfinite(labels(d, j))) continue;
          Eigen::RowVectorXd x(k);
          bool ok = true;
          for (int c = 0; c < k && ok; ++c) {
            x(c) = signals[chosen[c]].values(d, j);
            ok = std::isfinite(x(c));
          }
          if (!ok) continue;
          xs.push_back(std::move(x));
          ys.push_back(labels(d, j));
        }
        if (ys.size() > begin) {
          const double m = std::accumulate(ys.begin() + begin, ys.end(), 0.0) /
                           static_cast<double>(ys.size() - begin);
          for (std::size_t r = begin; r < ys.size(); ++r) ys[r] -= m;
        }
      }
      if (!ys.empty()) {
        const Eigen::Index n = static_cast<Eigen::Index>(ys.size());
        Eigen::MatrixXd X(n, k);
        Eigen::VectorXd Y(n);
        for (Eigen::Index r = 0; r < n; ++r) {
          X.row(r) = xs[r];
          Y(r) = ys[r];
        }
        Eigen::MatrixXd sigma = X.transpose() * X / static_cast<double>(n);
        const double tr = sigma.trace();
        const double eps = tr > 0.0 ? 1e-10 * tr / k : 1e-12;
        sigma.diagonal().array() += eps;
        const Eigen::VectorXd beta =
            sigma.ldlt().solve(X.transpose() * Y / static_cast<double>(n));
        if (beta.allFinite()) {
          for (int c = 0; c < k; ++c) w(chosen[c]) = beta(c);
          fitted = true;
        }
      }
    }
    if (fitted) {
      current = w;
      if (fitted_from < 0) fitted_from = t;
    }
    if (current.size() == 0) continue;
    mega.rebalance_days.push_back(t);
    weight_rows.push_back(current);
    const int stop = static_cast<int>(std::min<Eigen::Index>(D, t + config.rebalance));
    for (int d = t; d < stop; ++d) {
      bool any = false;
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(N);
      for (int i = 0; i < k_all; ++i) {
        if (current(i) == 0.0) continue;
        row += current(i) * signals[i].values.row(d);
        any = true;
      }
      if (any) raw.row(d) = row;
    }
  }
  if (fitted_from < 0) throw std::runtime_error("combiner: no rebalance window has a valid row");

  mega.weights.resize(static_cast<Eigen::Index>(weight_rows.size()), k_all);
  for (std::size_t r = 0; r < weight_rows.size(); ++r) mega.weights.row(r) = weight_rows[r];
  mega.signal = make_signal(raw, fitted_from);
  return mega;
}

void write_weights_csv(const MegaAlpha& mega, const std::vector<std::string>& dates,
                       const std::vector<std::string>& names, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date";
  for (const std::string& n : names) {
    // RPN text has no commas, but quote anyway for spreadsheet tools.
    out << ",\"" << n << '"';
  }
  out << '\n';
  for (std::size_t r = 0; r < mega.rebalance_days.size(); ++r) {
    out << dates.at(mega.rebalance_days[r]);
    for (Eigen::Index c = 0; c < mega.weights.cols(); ++c) {
      out << ',' << format_double(mega.weights(static_cast<Eigen::Index>(r), c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd equicorrelation(int n, double rho) {
  if (n < 1) throw std::invalid_argument("equicorrelation needs n >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, rho);
  m.diagonal().setOnes();
  return m;
}

namespace {

Eigen::VectorXd descending_eigenvalues(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigen decomposition failed");
  return es.eigenvalues().reverse();
}

void check_square(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1) throw std::invalid_argument("expected a square matrix");
}

}  // namespace

DiversityReport variance_diagnostics(const Eigen::MatrixXd& correlation, double sigma2, double T) {
  check_square(correlation);
  if (correlation.rows() < 2) throw std::invalid_argument("diagnostics need at least two alphas");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  DiversityReport rep;
  const Eigen::MatrixXd sym = 0.5 * (correlation + correlation.transpose());
  const double n = static_cast<double>(sym.rows());
  rep.correlation = sym;
  rep.eigenvalues = descending_eigenvalues(sym);
  rep.sigma2 = sigma2;
  rep.samples = T;
  const double lmax = rep.eigenvalues(0);
  const double lmin = rep.eigenvalues(rep.eigenvalues.size() - 1);
  rep.singular = !(lmin > 1e-12 * std::max(lmax, 1.0));
  const double inf = std::numeric_limits<double>::infinity();
  if (rep.singular) {
    rep.condition_number = inf;
    rep.trace_variance = inf;
    rep.vif = Eigen::VectorXd::Constant(sym.rows(), inf);
  } else {
    rep.condition_number = lmax / lmin;
    rep.trace_variance = sigma2 / T * rep.eigenvalues.cwiseInverse().sum();
    rep.vif = sym.inverse().diagonal();
  }
  rep.in_sample_risk = sigma2 * n;
  rep.out_of_sample_risk = sigma2 * (1.0 + n / T);
  return rep;
}

DiversityReport variance_diagnostics(const std::vector<Signal>& signals, double sigma2,
                                     std::optional<double> T) {
  if (signals.size() < 2) throw std::invalid_argument("diagnostics need at least two alphas");
  const Eigen::Index D = signals[0].values.rows();
  const Eigen::Index N = signals[0].values.cols();
  const int k = static_cast<int>(signals.size());
  std::vector<double> cells;
  Eigen::Index rows = 0;
  for (Eigen::Index d = 0; d < D; ++d) {
    for (Eigen::Index j = 0; j < N; ++j) {
      bool ok = true;
      for (int i = 0; i < k && ok; ++i) ok = std::isfinite(signals[i].values(d, j));
      if (!ok) continue;
      for (int i = 0; i < k; ++i) cells.push_back(signals[i].values(d, j));
      ++rows;
    }
  }
  if (rows < 2) throw std::runtime_error("diagnostics: fewer than two jointly valid observations");
  Eigen::MatrixXd F = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cells.data(), rows, k);
  F.rowwise() -= F.colwise().mean();
  Eigen::MatrixXd corr = F.transpose() * F / static_cast<double>(rows);
  Eigen::VectorXd sd = corr.diagonal().cwiseSqrt();
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double denom = sd(a) * sd(b);
      corr(a, b) = denom > 0.0 ? corr(a, b) / denom : (a == b ? 1.0 : 0.0);
    }
  }
  corr.diagonal().setOnes();
  return variance_diagnostics(corr, sigma2, T.value_or(static_cast<double>(rows)));
}

double ridge_variance(const Eigen::MatrixXd& correlation, double lambda, double sigma2, double T) {
  check_square(correlation);
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  const Eigen::VectorXd ev = descending_eigenvalues(0.5 * (correlation + correlation.transpose()));
  return sigma2 / T * (ev.array() + lambda).inverse().sum();
}

double perturbation_sensitivity(const Eigen::MatrixXd& sigma, std::mt19937_64& rng, int trials,
                                double rel) {
  check_square(sigma);
  const Eigen::Index n = sigma.rows();
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
  };
  const Eigen::LDLT<Eigen::MatrixXd> solver(sigma);
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd g = draw();
    Eigen::VectorXd dg = draw();
    dg *= rel * g.norm() / dg.norm();
    const Eigen::VectorXd b = solver.solve(g);
    const Eigen::VectorXd b2 = solver.solve(g + dg);
    total += ((b2 - b).norm() / b.norm()) / rel;
  }
  return total / trials;
}

void write_diversity_report(const DiversityReport& report, const std::vector<std::string>& names,
                            std::ostream& out) {
  out << "alphas = " << report.correlation.rows() << '\n';
  out << "observations = " << format_double(report.samples) << '\n';
  out << "sigma2 = " << format_double(report.sigma2) << '\n';
  out << "eigenvalues =";
  for (Eigen::Index i = 0; i < report.eigenvalues.size(); ++i) {
    out << ' ' << format_double(report.eigenvalues(i));
  }
  out << '\n';
  out << "condition_number = " << (report.singular ? "inf" : format_double(report.condition_number))
      << '\n';
  out << "singular = " << (report.singular ? "true" : "false") << '\n';
  out << "trace_variance = " << (report.singular ? "inf" : format_double(report.trace_variance)) << '\n';
  out << "in_sample_risk = " << format_double(report.in_sample_risk) << '\n';
  out << "out_of_sample_risk = " << format_double(report.out_of_sample_risk) << '\n';
  for (Eigen::Index i = 0; i < report.vif.size(); ++i) {
    const std::string name = i < static_cast<Eigen::Index>(names.size()) ? names[i] : std::to_string(i);
    out << "vif[" << name << "] = " << (report.singular ? "inf" : format_double(report.vif(i))) << '\n';
  }
  out << "correlation =\n";
  for (Eigen::Index i = 0; i < report.correlation.rows(); ++i) {
    for (Eigen::Index j = 0; j < report.correlation.cols(); ++j) {
      out << (j ? "," : "") << format_double(report.correlation(i, j));
    }
    out << '\n';
  }
}

}  // namespace gfnalpha
