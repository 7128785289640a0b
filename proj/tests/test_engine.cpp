#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "gfnalpha/engine.hpp"
#include "gfnalpha/metrics.hpp"
#include "random_trees.hpp"

using namespace gfnalpha;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

Panel panel_with_close(const Eigen::MatrixXd& close) {
  Panel p;
  for (int d = 0; d < close.rows(); ++d) p.dates.push_back("d" + std::to_string(100 + d));
  for (int j = 0; j < close.cols(); ++j) p.assets.push_back("a" + std::to_string(j));
  for (auto& f : p.features) f = close;
  p.labels = Eigen::MatrixXd::Constant(close.rows(), close.cols(), kNaN);
  return p;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("gfnalpha_engine_" + name)).string();
}

}  // namespace

TEST(Evaluate, SignOfPositivePricesIsDegenerate) {
  SyntheticConfig cfg;
  cfg.days = 120;
  cfg.assets = 10;
  const Panel p = generate_synthetic(cfg);
  const Signal s = evaluate(parse_rpn("close Sign"), p);
  EXPECT_TRUE(s.degenerate);
}

TEST(Evaluate, DeltaByHand) {
  Eigen::MatrixXd close(3, 2);
  close << 10.0, 20.0,
           11.0, 18.0,
           13.5, 18.5;
  const Panel p = panel_with_close(close);
  const Eigen::MatrixXd raw = evaluate_raw(parse_rpn("close 1 TsDelta"), p);
  EXPECT_TRUE(std::isnan(raw(0, 0)));
  EXPECT_TRUE(std::isnan(raw(0, 1)));
  EXPECT_DOUBLE_EQ(raw(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(raw(1, 1), -2.0);
  EXPECT_DOUBLE_EQ(raw(2, 0), 2.5);
  EXPECT_DOUBLE_EQ(raw(2, 1), 0.5);
}

TEST(Evaluate, RankOfThreeValues) {
  Eigen::MatrixXd x(1, 3);
  x << 3.0, 1.0, 2.0;
  const Eigen::MatrixXd r = unary_op(Op::Rank, x);
  EXPECT_DOUBLE_EQ(r(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(r(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(r(0, 2), 0.5);
}

TEST(Evaluate, RankTiesAndSingletons) {
  Eigen::MatrixXd x(2, 4);
  x << 1.0, 2.0, 2.0, 3.0,
       kNaN, 5.0, kNaN, kNaN;
  const Eigen::MatrixXd r = unary_op(Op::Rank, x);
  EXPECT_DOUBLE_EQ(r(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(r(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(r(0, 2), 0.5);
  EXPECT_DOUBLE_EQ(r(0, 3), 1.0);
  EXPECT_DOUBLE_EQ(r(1, 1), 0.5);
  EXPECT_TRUE(std::isnan(r(1, 0)));
}

TEST(RollingOp, SumWindowOneIsIdentity) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd x = testing_support::random_matrix(30, 4, rng);
  EXPECT_TRUE(rolling_op(Op::TsSum, x, 1) == x);
}

TEST(RollingOp, MaxOfShortSeries) {
  Eigen::MatrixXd x(3, 2);
  x << 1.0, 1.0,
       3.0, 3.0,
       2.0, 2.0;
  const Eigen::MatrixXd m = rolling_op(Op::TsMax, x, 2);
  for (int j = 0; j < 2; ++j) {
    EXPECT_TRUE(std::isnan(m(0, j)));
    EXPECT_EQ(m(1, j), 3.0);
    EXPECT_EQ(m(2, j), 3.0);
  }
}

TEST(RollingOp, SelfCorrelationIsOne) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = testing_support::random_matrix(40, 5, rng);
  for (int w : {5, 10, 20}) {
    const Eigen::MatrixXd c = rolling_binary_op(Op::TsCorr, x, x, w);
    for (int d = w - 1; d < 40; ++d) {
      for (int j = 0; j < 5; ++j) EXPECT_NEAR(c(d, j), 1.0, 1e-12);
    }
  }
}

TEST(RollingOp, WeightedAverageWeighsRecentDaysMost) {
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, 4.0;
  // (1*1 + 2*2 + 3*4) / 6
  EXPECT_DOUBLE_EQ(rolling_op(Op::TsWMA, x, 3)(2, 0), 17.0 / 6.0);
  // decay 1 - 2/4 = 0.5: (0.25*1 + 0.5*2 + 1*4) / 1.75
  EXPECT_DOUBLE_EQ(rolling_op(Op::TsEMA, x, 3)(2, 0), 5.25 / 1.75);
}

TEST(RollingOp, NaNInWindowPropagates) {
  Eigen::MatrixXd x(5, 1);
  x << 1.0, kNaN, 3.0, 4.0, 5.0;
  const Eigen::MatrixXd m = rolling_op(Op::TsMean, x, 2);
  EXPECT_TRUE(std::isnan(m(1, 0)));
  EXPECT_TRUE(std::isnan(m(2, 0)));
  EXPECT_DOUBLE_EQ(m(3, 0), 3.5);
}

TEST(CrossNormalize, Examples) {
  Eigen::MatrixXd x(3, 3);
  x << 1.0, 2.0, 3.0,
       4.0, 4.0, 4.0,
       1.0, kNaN, 3.0;
  const NormalizedRows n = cross_normalize(x);
  const double z = std::sqrt(1.5);
  EXPECT_NEAR(n.values(0, 0), -z, 1e-6);
  EXPECT_NEAR(n.values(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(n.values(0, 2), z, 1e-6);
  EXPECT_NEAR(n.values(0, 0), -1.2247, 1e-4);
  EXPECT_FALSE(n.degenerate[0]);
  EXPECT_TRUE(n.degenerate[1]);
  EXPECT_EQ(n.values.row(1), Eigen::RowVector3d::Zero());
  EXPECT_FALSE(n.degenerate[2]);
  EXPECT_NEAR(n.values(2, 0), -z, 1e-12);
  EXPECT_NEAR(n.values(2, 1), 0.0, 1e-12);
  EXPECT_NEAR(n.values(2, 2), z, 1e-12);
}

TEST(Evaluate, ValidFromAndNormalization) {
  SyntheticConfig cfg;
  cfg.days = 150;
  cfg.assets = 20;
  const Panel p = generate_synthetic(cfg);
  const ExprTree t = parse_rpn("close 10 TsMean volume 5 TsStd Div");
  const Signal s = evaluate(t, p);
  EXPECT_EQ(s.valid_from, 9);
  for (int d = 0; d < s.valid_from; ++d) EXPECT_TRUE(s.values.row(d).array().isNaN().all());
  for (int d = s.valid_from; d < p.num_days(); ++d) {
    ASSERT_TRUE(s.values.row(d).allFinite());
    EXPECT_NEAR(s.values.row(d).mean(), 0.0, 1e-12);
    EXPECT_NEAR(s.values.row(d).squaredNorm() / p.num_assets(), 1.0, 1e-12);
  }
  EXPECT_THROW(evaluate(parse_rpn("close 50 TsMean 50 TsMean 50 TsMean"),
                        generate_synthetic({1, 100, 10})),
               std::invalid_argument);
}

TEST(Synthetic, DeterministicAndWellFormed) {
  SyntheticConfig cfg;
  cfg.seed = 9;
  cfg.days = 200;
  cfg.assets = 15;
  const Panel a = generate_synthetic(cfg);
  const Panel b = generate_synthetic(cfg);
  for (int f = 0; f < kNumFeatures; ++f) EXPECT_TRUE(a.features[f] == b.features[f]);
  EXPECT_EQ(a.dates, b.dates);
  for (int d = 1; d < a.num_days(); ++d) EXPECT_LT(a.dates[d - 1], a.dates[d]);
  const auto& o = a.feature(Feature::Open);
  const auto& c = a.feature(Feature::Close);
  const auto& h = a.feature(Feature::High);
  const auto& l = a.feature(Feature::Low);
  for (int d = 0; d < a.num_days(); ++d) {
    for (int j = 0; j < a.num_assets(); ++j) {
      EXPECT_GE(h(d, j), std::max(o(d, j), c(d, j)));
      EXPECT_GE(std::min(o(d, j), c(d, j)), l(d, j));
      EXPECT_GT(l(d, j), 0.0);
      EXPECT_GE(a.feature(Feature::Volume)(d, j), 0.0);
    }
  }
  EXPECT_THROW(generate_synthetic({1, 50, 10}), std::invalid_argument);
  EXPECT_THROW(generate_synthetic({1, 200, 5}), std::invalid_argument);
}

TEST(Synthetic, ForwardReturnAlignment) {
  SyntheticConfig cfg;
  cfg.days = 120;
  cfg.assets = 10;
  const Panel p = generate_synthetic(cfg);
  const auto& c = p.feature(Feature::Close);
  for (int d = 0; d < 120; ++d) {
    for (int j = 0; j < 10; ++j) {
      if (d + 21 < 120) {
        EXPECT_DOUBLE_EQ(p.labels(d, j), c(d + 21, j) / c(d + 1, j) - 1.0);
      } else {
        EXPECT_TRUE(std::isnan(p.labels(d, j)));
      }
    }
  }
}

TEST(Synthetic, PlantedWithoutNoiseHasUnitIc) {
  SyntheticConfig cfg;
  cfg.days = 200;
  cfg.assets = 30;
  cfg.planted = "close 10 TsPctChange";
  const Panel p = generate_synthetic(cfg);
  const Signal s = evaluate(parse_rpn(*cfg.planted), p);
  EXPECT_NEAR(correlation_metrics(s, p.labels).ic, 1.0, 1e-9);
}

TEST(Synthetic, PlantedNoiseHitsTargetIc) {
  SyntheticConfig cfg;
  cfg.seed = 4;
  cfg.days = 750;
  cfg.assets = 100;
  cfg.planted = "close 10 TsPctChange";
  cfg.noise = noise_for_ic(0.3);
  const Panel p = generate_synthetic(cfg);
  const Signal s = evaluate(parse_rpn(*cfg.planted), p);
  EXPECT_NEAR(correlation_metrics(s, p.labels).ic, 0.3, 0.05);
}

TEST(Csv, PanelRoundTripIsExact) {
  SyntheticConfig cfg;
  cfg.days = 110;
  cfg.assets = 12;
  const Panel p = generate_synthetic(cfg);
  const std::string path = temp_path("panel.csv");
  write_panel_csv(p, path);
  const Panel q = read_panel_csv(path);
  EXPECT_EQ(p.dates, q.dates);
  EXPECT_EQ(p.assets, q.assets);
  for (int f = 0; f < kNumFeatures; ++f) EXPECT_TRUE(p.features[f] == q.features[f]);
  std::filesystem::remove(path);
}

TEST(Csv, MissingCellsBecomeNaN) {
  const std::string path = temp_path("missing.csv");
  {
    std::ofstream out(path);
    out << "date,asset,open,high,low,close,vwap,volume\n"
        << "2020-01-01,A,1,2,0.5,1.5,1.2,100\n"
        << "2020-01-01,B,1,2,0.5,,1.2,100\n"
        << "2020-01-02,A,1,2,0.5,1.6,1.2,100\n";
  }
  const Panel p = read_panel_csv(path);
  ASSERT_EQ(p.num_days(), 2);
  ASSERT_EQ(p.num_assets(), 2);
  EXPECT_TRUE(std::isnan(p.feature(Feature::Close)(0, 1)));
  EXPECT_TRUE(std::isnan(p.feature(Feature::Open)(1, 1)));
  EXPECT_DOUBLE_EQ(p.feature(Feature::Close)(1, 0), 1.6);
  std::filesystem::remove(path);
  EXPECT_THROW(read_panel_csv(temp_path("does_not_exist.csv")), std::runtime_error);
}

TEST(Csv, LabelsRoundTrip) {
  SyntheticConfig cfg;
  cfg.days = 110;
  cfg.assets = 10;
  cfg.planted = "close 5 TsMean";
  cfg.noise = 0.5;
  const Panel p = generate_synthetic(cfg);
  const std::string panel_path = temp_path("lab_panel.csv");
  const std::string label_path = temp_path("labels.csv");
  write_panel_csv(p, panel_path);
  write_labels_csv(p, label_path);
  Panel q = read_panel_csv(panel_path);
  read_labels_csv(q, label_path);
  for (int d = 0; d < p.num_days(); ++d) {
    for (int j = 0; j < p.num_assets(); ++j) {
      if (std::isnan(p.labels(d, j))) {
        EXPECT_TRUE(std::isnan(q.labels(d, j)));
      } else {
        EXPECT_EQ(p.labels(d, j), q.labels(d, j));
      }
    }
  }
  std::filesystem::remove(panel_path);
  std::filesystem::remove(label_path);
}

TEST(NoiseForIc, ClosedForm) {
  EXPECT_DOUBLE_EQ(noise_for_ic(1.0), 0.0);
  EXPECT_NEAR(noise_for_ic(0.3), std::sqrt(1.0 / 0.09 - 1.0), 1e-15);
  EXPECT_THROW(noise_for_ic(0.0), std::invalid_argument);
}

// Properties.

TEST(EngineProperties, RankIsMonotoneIntoUnitInterval) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = testing_support::random_matrix(50, 17, rng, 0.1);
  const Eigen::MatrixXd r = cross_rank(x);
  for (int d = 0; d < 50; ++d) {
    for (int i = 0; i < 17; ++i) {
      if (std::isnan(x(d, i))) {
        EXPECT_TRUE(std::isnan(r(d, i)));
        continue;
      }
      EXPECT_GE(r(d, i), 0.0);
      EXPECT_LE(r(d, i), 1.0);
      for (int j = 0; j < 17; ++j) {
        if (!std::isnan(x(d, j)) && x(d, i) < x(d, j)) EXPECT_LT(r(d, i), r(d, j));
      }
    }
  }
}

TEST(EngineProperties, RandomTreesAreLookaheadFree) {
  std::mt19937_64 rng(17);
  const Vocabulary v;
  SyntheticConfig cfg;
  cfg.days = 120;
  cfg.assets = 12;
  const Panel p = generate_synthetic(cfg);
  const int cut = 80;
  Panel q = p;
  std::vector<int> perm;
  for (int d = cut + 1; d < p.num_days(); ++d) perm.push_back(d);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int f = 0; f < kNumFeatures; ++f) {
    for (int k = 0; k < static_cast<int>(perm.size()); ++k) {
      q.features[f].row(cut + 1 + k) = p.features[f].row(perm[k]);
    }
  }
  q.labels.setConstant(12345.0);
  int checked = 0;
  for (int i = 0; i < 300 && checked < 100; ++i) {
    const ExprTree t = testing_support::random_terminal(v, 12, rng);
    if (t.lookback() >= cut) continue;
    const Signal a = evaluate(t, p);
    const Signal b = evaluate(t, q);
    ++checked;
    for (int d = 0; d <= cut; ++d) {
      for (int j = 0; j < 12; ++j) {
        const double x = a.values(d, j);
        const double y = b.values(d, j);
        ASSERT_TRUE((std::isnan(x) && std::isnan(y)) || x == y) << to_rpn(t) << " day " << d;
      }
    }
  }
  EXPECT_GE(checked, 50);
}
