#include "gfnalpha/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gfnalpha {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd sanitized(Eigen::MatrixXd m) {
  m = m.unaryExpr([](double v) { return std::isfinite(v) ? v : kNaN; });
  return m;
}

double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

bool is_lag_op(Op op) {
  return op == Op::Ref || op == Op::TsDelta || op == Op::TsDiv || op == Op::TsPctChange;
}

// Statistic of one complete, NaN-free window ending at its last element.
double window_stat(Op op, const Eigen::Ref<const Eigen::VectorXd>& seg,
                   std::vector<double>& scratch) {
  const Eigen::Index n = seg.size();
  const double dn = static_cast<double>(n);
  const double cur = seg(n - 1);
  switch (op) {
    case Op::TsMean:
      return seg.mean();
    case Op::TsSum:
      return seg.sum();
    case Op::TsStd:
    case Op::TsVar:
    case Op::TsIr: {
      if (n < 2) return kNaN;
      const double mu = seg.mean();
      const double var = (seg.array() - mu).square().sum() / (dn - 1.0);
      if (op == Op::TsVar) return var;
      if (op == Op::TsStd) return std::sqrt(var);
      return mu / std::sqrt(var);
    }
    case Op::TsSkew: {
      if (n < 3) return kNaN;
      const Eigen::ArrayXd c = seg.array() - seg.mean();
      const double m2 = c.square().mean();
      const double m3 = c.cube().mean();
      if (m2 <= 0.0) return kNaN;
      return std::sqrt(dn * (dn - 1.0)) / (dn - 2.0) * m3 / std::pow(m2, 1.5);
    }
    case Op::TsKurt: {
      if (n < 4) return kNaN;
      const Eigen::ArrayXd c = seg.array() - seg.mean();
      const double m2 = c.square().mean();
      const double m4 = c.square().square().mean();
      if (m2 <= 0.0) return kNaN;
      const double g2 = m4 / (m2 * m2) - 3.0;
      return (dn - 1.0) / ((dn - 2.0) * (dn - 3.0)) * ((dn + 1.0) * g2 + 6.0);
    }
    case Op::TsMax:
      return seg.maxCoeff();
    case Op::TsMin:
      return seg.minCoeff();
    case Op::TsMinMaxDiff:
      return seg.maxCoeff() - seg.minCoeff();
    case Op::TsMaxDiff:
      return cur - seg.maxCoeff();
    case Op::TsMinDiff:
      return cur - seg.minCoeff();
    case Op::TsMed:
      scratch.assign(seg.data(), seg.data() + n);
      return median_inplace(scratch);
    case Op::TsMad: {
      scratch.assign(seg.data(), seg.data() + n);
      const double med = median_inplace(scratch);
      for (Eigen::Index i = 0; i < n; ++i) scratch[i] = std::abs(seg(i) - med);
      return median_inplace(scratch);
    }
    case Op::TsRank: {
      if (n == 1) return 0.5;
      const double less = (seg.array() < cur).count();
      const double equal = (seg.array() == cur).count();
      const double avg_rank = less + (equal + 1.0) / 2.0;
      return (avg_rank - 1.0) / (dn - 1.0);
    }
    case Op::TsWMA: {
      // Oldest element gets weight 1, the current one weight n.
      const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(n, 1.0, dn);
      return seg.dot(w) / w.sum();
    }
    case Op::TsEMA: {
      const double decay = 1.0 - 2.0 / (dn + 1.0);
      Eigen::VectorXd w(n);
      double p = 1.0;
      for (Eigen::Index k = n - 1; k >= 0; --k) {
        w(k) = p;
        p *= decay;
      }
      return seg.dot(w) / w.sum();
    }
    default:
      throw std::invalid_argument("not a windowed operator: " + std::string(op_name(op)));
  }
}

}  // namespace

int op_lookback(Op op, int w) { return is_lag_op(op) ? w : w - 1; }

NormalizedRows cross_normalize(const Eigen::MatrixXd& values) {
  NormalizedRows out;
  out.values = values;
  out.degenerate.assign(values.rows(), false);
  for (Eigen::Index d = 0; d < values.rows(); ++d) {
    auto row = out.values.row(d);
    const auto finite = row.array().isFinite();
    const Eigen::Index count = finite.count();
    if (count == 0) {
      out.all_nan_row = true;
      out.degenerate[d] = true;
      row.setZero();
      continue;
    }
    const double mean = finite.select(row.array(), 0.0).sum() / static_cast<double>(count);
    row = finite.select(row.array(), mean).matrix();
    row.array() -= mean;
    const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(row.size()));
    if (!(sd >= kEps)) {
      row.setZero();
      out.degenerate[d] = true;
      continue;
    }
    row /= sd;
  }
  return out;
}

Eigen::MatrixXd cross_rank(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(x.rows(), x.cols(), kNaN);
  std::vector<std::pair<double, Eigen::Index>> cells;
  for (Eigen::Index d = 0; d < x.rows(); ++d) {
    cells.clear();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (std::isfinite(x(d, j))) cells.emplace_back(x(d, j), j);
    }
    const std::size_t n = cells.size();
    if (n == 0) continue;
    if (n == 1) {
      out(d, cells[0].second) = 0.5;
      continue;
    }
    std::sort(cells.begin(), cells.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && cells[j].first == cells[i].first) ++j;
      // 0-based average rank of the tie group.
      const double avg = 0.5 * static_cast<double>(i + j - 1);
      for (std::size_t k = i; k < j; ++k) {
        out(d, cells[k].second) = avg / static_cast<double>(n - 1);
      }
      i = j;
    }
  }
  return out;
}

Eigen::MatrixXd unary_op(Op op, const Eigen::MatrixXd& x) {
  const auto a = x.array();
  switch (op) {
    case Op::Abs:
      return a.abs().matrix();
    case Op::Slog1p:
      return sanitized((a.sign() * a.abs().log1p()).matrix());
    case Op::Inv:
      return sanitized((1.0 / (a + kEps)).matrix());
    case Op::Sign:
      return x.unaryExpr([](double v) {
        return std::isnan(v) ? v : static_cast<double>((v > 0.0) - (v < 0.0));
      });
    case Op::Log:
      return sanitized((a + kEps).log().matrix());
    case Op::Rank:
      return cross_rank(x);
    default:
      throw std::invalid_argument("not a unary operator: " + std::string(op_name(op)));
  }
}

Eigen::MatrixXd binary_op(Op op, const Eigen::MatrixXd& lhs, const Eigen::MatrixXd& rhs) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw std::invalid_argument("binary_op shape mismatch");
  }
  const auto a = lhs.array();
  const auto b = rhs.array();
  const auto either_nan = a.isNaN() || b.isNaN();
  switch (op) {
    case Op::Add:
      return sanitized((a + b).matrix());
    case Op::Sub:
      return sanitized((a - b).matrix());
    case Op::Mul:
      return sanitized((a * b).matrix());
    case Op::Div:
      return sanitized((a / (b + kEps)).matrix());
    case Op::Pow:
      return either_nan.select(kNaN, sanitized(a.pow(b).matrix()).array()).matrix();
    case Op::Greater:
      return either_nan.select(kNaN, (a > b).cast<double>()).matrix();
    case Op::Less:
      return either_nan.select(kNaN, (a < b).cast<double>()).matrix();
    default:
      throw std::invalid_argument("not a binary operator: " + std::string(op_name(op)));
  }
}

Eigen::MatrixXd rolling_op(Op op, const Eigen::MatrixXd& x, int w) {
  if (w < 1) throw std::invalid_argument("window must be >= 1");
  if (op_kind(op) != TokenKind::RollingUnaryOp) {
    throw std::invalid_argument("not a rolling-unary operator: " + std::string(op_name(op)));
  }
  const Eigen::Index days = x.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(days, x.cols(), kNaN);
  if (is_lag_op(op)) {
    if (w >= days) return out;
    const Eigen::Index n = days - w;
    const auto now = x.bottomRows(n).array();
    const auto past = x.topRows(n).array();
    switch (op) {
      case Op::Ref:
        out.bottomRows(n) = past.matrix();
        break;
      case Op::TsDelta:
        out.bottomRows(n) = (now - past).matrix();
        break;
      case Op::TsDiv:
        out.bottomRows(n) = (now / past).matrix();
        break;
      default:
        out.bottomRows(n) = (now / past - 1.0).matrix();
        break;
    }
    return sanitized(std::move(out));
  }
  std::vector<double> scratch;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = x.col(j);
    for (Eigen::Index t = w - 1; t < days; ++t) {
      const auto seg = col.segment(t - w + 1, w);
      if (seg.hasNaN()) continue;
      out(t, j) = window_stat(op, seg, scratch);
    }
  }
  return sanitized(std::move(out));
}

Eigen::MatrixXd rolling_binary_op(Op op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                  int w) {
  if (w < 1) throw std::invalid_argument("window must be >= 1");
  if (op != Op::TsCov && op != Op::TsCorr) {
    throw std::invalid_argument("not a rolling-binary operator: " + std::string(op_name(op)));
  }
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("rolling_binary_op shape mismatch");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(a.rows(), a.cols(), kNaN);
  if (w < 2) return out;
  const double dn = static_cast<double>(w);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index t = w - 1; t < a.rows(); ++t) {
      const auto sa = a.col(j).segment(t - w + 1, w);
      const auto sb = b.col(j).segment(t - w + 1, w);
      if (sa.hasNaN() || sb.hasNaN()) continue;
      const Eigen::ArrayXd ca = sa.array() - sa.mean();
      const Eigen::ArrayXd cb = sb.array() - sb.mean();
      const double cov = (ca * cb).sum() / (dn - 1.0);
      if (op == Op::TsCov) {
        out(t, j) = cov;
      } else {
        const double va = ca.square().sum() / (dn - 1.0);
        const double vb = cb.square().sum() / (dn - 1.0);
        out(t, j) = cov / std::sqrt(va * vb);
      }
    }
  }
  return sanitized(std::move(out));
}

namespace {

Eigen::MatrixXd eval_node(const ExprTree& tree, int n, const Panel& panel) {
  const ExprNode& node = tree.node(n);
  const Token& t = node.token;
  switch (t.kind) {
    case TokenKind::Feature:
      return panel.feature(t.as_feature());
    case TokenKind::UnaryOp:
      return unary_op(t.as_op(), eval_node(tree, node.children[0], panel));
    case TokenKind::BinaryOp:
      return binary_op(t.as_op(), eval_node(tree, node.children[0], panel),
                       eval_node(tree, node.children[1], panel));
    case TokenKind::RollingUnaryOp:
      return rolling_op(t.as_op(), eval_node(tree, node.children[0], panel),
                        tree.node(node.children[1]).token.value);
    case TokenKind::RollingBinaryOp:
      return rolling_binary_op(t.as_op(), eval_node(tree, node.children[0], panel),
                               eval_node(tree, node.children[1], panel),
                               tree.node(node.children[2]).token.value);
    default:
      throw std::invalid_argument("cannot evaluate token " + token_text(t));
  }
}

}  // namespace

Eigen::MatrixXd evaluate_raw(const ExprTree& tree, const Panel& panel) {
  if (!tree.is_terminal()) throw std::invalid_argument("evaluate on a non-terminal tree");
  return eval_node(tree, tree.root(), panel);
}

Signal make_signal(const Eigen::MatrixXd& raw, int valid_from) {
  if (valid_from < 0 || valid_from >= raw.rows()) {
    throw std::invalid_argument("valid_from outside the signal rows");
  }
  Signal s;
  s.valid_from = valid_from;
  const Eigen::Index live = raw.rows() - valid_from;
  NormalizedRows norm = cross_normalize(raw.bottomRows(live));
  s.values = Eigen::MatrixXd::Constant(raw.rows(), raw.cols(), kNaN);
  s.values.bottomRows(live) = norm.values;
  s.day_degenerate.assign(valid_from, true);
  s.day_degenerate.insert(s.day_degenerate.end(), norm.degenerate.begin(),
                          norm.degenerate.end());
  const bool all_flat =
      std::all_of(norm.degenerate.begin(), norm.degenerate.end(), [](bool b) { return b; });
  s.degenerate = norm.all_nan_row || all_flat;
  return s;
}

Signal evaluate(const ExprTree& tree, const Panel& panel) {
  const int lookback = tree.lookback();
  if (lookback >= panel.num_days()) {
    throw std::invalid_argument("window lookback " + std::to_string(lookback) +
                                " exceeds panel length " + std::to_string(panel.num_days()));
  }
  return make_signal(evaluate_raw(tree, panel), lookback);
}

Eigen::MatrixXd forward_returns(const Eigen::MatrixXd& close, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const Eigen::Index days = close.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(days, close.cols(), kNaN);
  for (Eigen::Index d = 0; d + 1 + horizon < days; ++d) {
    out.row(d) = (close.row(d + 1 + horizon).array() / close.row(d + 1).array() - 1.0).matrix();
  }
  return sanitized(std::move(out));
}

double noise_for_ic(double target_ic) {
  if (!(target_ic > 0.0 && target_ic <= 1.0)) {
    throw std::invalid_argument("target IC must lie in (0, 1]");
  }
  return std::sqrt(1.0 / (target_ic * target_ic) - 1.0);
}

namespace {

// Proleptic Gregorian date from days since 1970-01-01.
std::string civil_date(long long z) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const long long doe = z - era * 146097;
  const long long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  long long y = yoe + era * 400;
  const long long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long long mp = (5 * doy + 2) / 153;
  const long long d = doy - (153 * mp + 2) / 5 + 1;
  const long long m = mp < 10 ? mp + 3 : mp - 9;
  if (m <= 2) ++y;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04lld-%02lld-%02lld", y, m, d);
  return buf;
}

std::vector<std::string> business_days(int count) {
  std::vector<std::string> out;
  long long day = 18262;  // 2020-01-01, a Wednesday
  while (static_cast<int>(out.size()) < count) {
    const long long weekday = (day + 4) % 7;  // 0 = Sunday
    if (weekday != 0 && weekday != 6) out.push_back(civil_date(day));
    ++day;
  }
  return out;
}

}  // namespace

Panel generate_synthetic(const SyntheticConfig& config) {
  if (config.days < 100 || config.assets < 10) {
    throw std::invalid_argument("synthetic panel needs days >= 100 and assets >= 10");
  }
  if (config.noise < 0.0) throw std::invalid_argument("noise must be >= 0");
  std::optional<ExprTree> planted;
  if (config.planted) planted = parse_rpn(*config.planted);

  const int D = config.days;
  const int N = config.assets;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Panel p;
  p.dates = business_days(D);
  for (int j = 0; j < N; ++j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "A%04d", j);
    p.assets.emplace_back(buf);
  }
  for (auto& f : p.features) f.resize(D, N);
  auto& open = p.features[static_cast<int>(Feature::Open)];
  auto& close = p.features[static_cast<int>(Feature::Close)];
  auto& high = p.features[static_cast<int>(Feature::High)];
  auto& low = p.features[static_cast<int>(Feature::Low)];
  auto& vwap = p.features[static_cast<int>(Feature::Vwap)];
  auto& volume = p.features[static_cast<int>(Feature::Volume)];

  for (int j = 0; j < N; ++j) {
    const double vol = 0.01 + 0.02 * unif(rng);
    const double drift = 0.0002 * gauss(rng);
    double prev_close = std::exp(std::log(50.0) + 0.5 * gauss(rng));
    double log_volume = std::log(1e6) + 0.5 * gauss(rng);
    const double mean_log_volume = log_volume;
    for (int d = 0; d < D; ++d) {
      const double o = prev_close * std::exp(0.3 * vol * gauss(rng));
      const double c = o * std::exp(drift + vol * gauss(rng));
      const double h = std::max(o, c) * std::exp(0.5 * vol * std::abs(gauss(rng)));
      const double l = std::min(o, c) * std::exp(-0.5 * vol * std::abs(gauss(rng)));
      log_volume = mean_log_volume + 0.8 * (log_volume - mean_log_volume) + 0.3 * gauss(rng);
      open(d, j) = o;
      close(d, j) = c;
      high(d, j) = h;
      low(d, j) = l;
      vwap(d, j) = (o + c + h + l) / 4.0;
      volume(d, j) = std::round(std::exp(log_volume));
      prev_close = c;
    }
  }

  if (planted) {
    const Signal s = evaluate(*planted, p);
    p.labels = Eigen::MatrixXd::Constant(D, N, kNaN);
    for (int d = s.valid_from; d < D; ++d) {
      for (int j = 0; j < N; ++j) {
        p.labels(d, j) = s.values(d, j) + config.noise * gauss(rng);
      }
    }
  } else {
    p.labels = forward_returns(close, config.horizon);
  }
  return p;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell) {
  if (cell.empty()) return kNaN;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    if (cell == "nan" || cell == "NaN" || cell == "NA") return kNaN;
    throw std::runtime_error("bad numeric cell '" + cell + "'");
  }
  return v;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void write_panel_csv(const Panel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date,asset,open,high,low,close,vwap,volume\n";
  constexpr std::array<Feature, 6> order{Feature::Open, Feature::High, Feature::Low,
                                         Feature::Close, Feature::Vwap, Feature::Volume};
  for (int d = 0; d < panel.num_days(); ++d) {
    for (int j = 0; j < panel.num_assets(); ++j) {
      out << panel.dates[d] << ',' << panel.assets[j];
      for (Feature f : order) out << ',' << format_double(panel.feature(f)(d, j));
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Panel read_panel_csv(const std::string& path, int horizon) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open panel file " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty panel file " + path);
  if (strip_cr(line) != "date,asset,open,high,low,close,vwap,volume") {
    throw std::runtime_error("unexpected panel header in " + path);
  }
  struct Row {
    std::string date, asset;
    std::array<double, 6> v;
  };
  std::vector<Row> rows;
  std::map<std::string, int> date_index, asset_index;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 8) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 8 columns");
    }
    Row r{cells[0], cells[1], {}};
    for (int k = 0; k < 6; ++k) r.v[k] = parse_cell(cells[2 + k]);
    date_index.emplace(r.date, 0);
    asset_index.emplace(r.asset, 0);
    rows.push_back(std::move(r));
  }
  Panel p;
  for (auto& [name, idx] : date_index) {
    idx = static_cast<int>(p.dates.size());
    p.dates.push_back(name);
  }
  for (auto& [name, idx] : asset_index) {
    idx = static_cast<int>(p.assets.size());
    p.assets.push_back(name);
  }
  const int D = p.num_days();
  const int N = p.num_assets();
  for (auto& f : p.features) f = Eigen::MatrixXd::Constant(D, N, kNaN);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(D, N);
  constexpr std::array<Feature, 6> order{Feature::Open, Feature::High, Feature::Low,
                                         Feature::Close, Feature::Vwap, Feature::Volume};
  for (const Row& r : rows) {
    const int d = date_index[r.date];
    const int j = asset_index[r.asset];
    if (seen(d, j)++) {
      throw std::runtime_error("duplicate row for " + r.date + "," + r.asset);
    }
    for (int k = 0; k < 6; ++k) p.features[static_cast<int>(order[k])](d, j) = r.v[k];
  }
  p.labels = forward_returns(p.feature(Feature::Close), horizon);
  return p;
}

void write_labels_csv(const Panel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "date,asset,label\n";
  for (int d = 0; d < panel.num_days(); ++d) {
    for (int j = 0; j < panel.num_assets(); ++j) {
      out << panel.dates[d] << ',' << panel.assets[j] << ','
          << format_double(panel.labels(d, j)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void read_labels_csv(Panel& panel, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file " + path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "date,asset,label") {
    throw std::runtime_error("unexpected label header in " + path);
  }
  std::map<std::string, int> dates, assets;
  for (int d = 0; d < panel.num_days(); ++d) dates[panel.dates[d]] = d;
  for (int j = 0; j < panel.num_assets(); ++j) assets[panel.assets[j]] = j;
  panel.labels = Eigen::MatrixXd::Constant(panel.num_days(), panel.num_assets(), kNaN);
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3) throw std::runtime_error("label row needs 3 columns");
    auto d = dates.find(cells[0]);
    auto j = assets.find(cells[1]);
    if (d == dates.end() || j == assets.end()) {
      throw std::runtime_error("label row for unknown cell " + cells[0] + "," + cells[1]);
    }
    panel.labels(d->second, j->second) = parse_cell(cells[2]);
  }
}

}  // namespace gfnalpha
