// Acceptance checks 1-9. One PASS/FAIL line each; nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gfnalpha/metrics.hpp"
#include "gfnalpha/pool.hpp"
#include "gfnalpha/rewards.hpp"
#include "gfnalpha/trainer.hpp"
#include "gradcheck.hpp"
#include "operator_suite.hpp"
#include "random_trees.hpp"
#include "toy_env.hpp"

using namespace gfnalpha;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Trained sampler matches R / sum R on an enumerable environment.
Outcome distribution_matching() {
  const auto t0 = std::chrono::steady_clock::now();
  const ActionSpace space = toy_env::space();
  const auto table = toy_env::reward_table();
  const TrainConfig defaults;
  PolicyNet net(Vocabulary(), RgcnConfig{defaults.hidden, defaults.layers}, 1);
  Adam adam = make_optimizer(net, defaults.lr, defaults.logz_lr);
  std::mt19937_64 rng(2);
  auto reward = [&](const ExprTree& t) { return table.at(to_rpn(t)); };
  for (int s = 0; s < 6000; ++s) tb_train_step(net, adam, space, rng, reward, 0.0);

  std::map<std::string, double> empirical;
  const int samples = 20000;
  std::mt19937_64 draw(3);
  for (int i = 0; i < samples; ++i) empirical[to_rpn(sample_trajectory(net, space, draw).terminal)] += 1.0 / samples;
  const double tv = toy_env::tv_distance(empirical, table);
  const double exact_tv = toy_env::tv_distance(terminal_distribution(net, space), table);
  const double log_z_gap = std::fabs(net.log_z().item() - std::log(toy_env::total(table)));
  const double secs = seconds_since(t0);
  return {table.size() <= 200 && tv <= 0.10 && log_z_gap <= 0.1 && secs <= 300,
          std::to_string(table.size()) + " terminals, empirical TV " + fmt(tv) + " (exact " + fmt(exact_tv) +
              ") <= 0.10, |logZ - log sum R| " + fmt(log_z_gap) + " <= 0.1, " + fmt(secs) + " s <= 300 s"};
}

// 2. Analytic gradient of the full loss against central differences.
Outcome gradient_check() {
  const TrainConfig defaults;
  PolicyNet net(Vocabulary(), RgcnConfig{defaults.hidden, defaults.layers}, 4);
  const ActionSpace space(net.vocab(), defaults.max_len);
  const auto res = gradcheck::run(net, space, gradcheck::through_three_node_states(), defaults.entropy_coef,
                                  1e-4, 64, 5);
  int relations = 0;
  for (const auto& p : net.parameters()) relations += p.name.find(".rel") != std::string::npos;
  std::string untouched = res.untouched.empty() ? "none" : *res.untouched.begin();
  return {res.max_rel_error <= 1e-3 && res.untouched.empty(),
          "max rel error " + fmt(res.max_rel_error) + " <= 1e-3 at " + res.worst + ", " +
              std::to_string(res.checked) + " entries over " + std::to_string(net.parameters().size()) +
              " tensors (" + std::to_string(relations) + " relation matrices), untouched: " + untouched};
}

// 3. Every operator against the re-scan oracle, plus lookahead freedom.
Outcome operator_oracle() {
  const auto res = operator_suite::run_suite(20, 100, 20, 1e-10);
  const bool pass = res.failures.empty() && res.lookahead_failures.empty() &&
                    static_cast<int>(res.operators.size()) == kNumOps;
  std::string detail = std::to_string(res.operators.size()) + " operators x windows " +
                       "{1,5,10,20,30,40,50} on 20 panels (D=100, N=20): worst mismatch " + fmt(res.worst) +
                       " x 1e-10, " + std::to_string(res.failures.size()) + " oracle failures, " +
                       std::to_string(res.lookahead_failures.size()) + " lookahead failures";
  if (!res.failures.empty()) detail += "; first: " + res.failures.front();
  if (!res.lookahead_failures.empty()) detail += "; first lookahead: " + res.lookahead_failures.front();
  return {pass, detail};
}

// 4. Measured stop frequency at terminal-valid states of length l is l / MaxLen.
Outcome stop_statistics() {
  const TrainConfig defaults;
  PolicyNet net(Vocabulary(), RgcnConfig{defaults.hidden, defaults.layers}, 6);
  const ActionSpace space(net.vocab(), defaults.max_len);
  std::mt19937_64 rng(7);
  const std::vector<int> lengths{2, 6, 10};
  std::map<int, std::pair<long, long>> seen;
  auto enough = [&] {
    for (int l : lengths) {
      if (seen[l].first < 10000) return false;
    }
    return true;
  };
  while (!enough()) {
    const Trajectory t = sample_trajectory(net, space, rng);
    for (std::size_t s = 0; s < t.actions.size(); ++s) {
      if (!t.states[s].is_terminal()) continue;
      auto& v = seen[t.states[s].size()];
      if (v.first >= 10000) continue;
      ++v.first;
      v.second += t.actions[s] == space.vocab().sep_index();
    }
  }
  bool pass = true;
  std::string detail;
  for (int l : lengths) {
    const double freq = static_cast<double>(seen[l].second) / seen[l].first;
    const double want = static_cast<double>(l) / defaults.max_len;
    pass = pass && std::fabs(freq - want) <= 0.02;
    detail += (detail.empty() ? "" : ", ") + std::string("l=") + std::to_string(l) + ": " + fmt(freq) +
              " vs " + fmt(want);
  }
  return {pass, detail + " (10000 visits each, tolerance 0.02)"};
}

// 5. Reward closed forms.
Outcome reward_closed_forms() {
  std::mt19937_64 rng(8);
  const Signal z = make_signal(testing_support::random_matrix(60, 20, rng), 0);
  const Signal neg = make_signal(-z.values, 0);
  AlphaPool pool;
  PoolEntry e;
  e.tree = parse_rpn("close");
  e.rpn = canonical_rpn(e.tree);
  e.embedding = Eigen::RowVectorXd::Ones(8);
  e.signal = neg;
  e.r_ic = 0.1;
  pool.admit(e);
  const double sa = r_sa(Eigen::RowVectorXd::Zero(8), z, pool);
  const double nov = r_nov(z, {&z});
  const double ric = 0.123456789;
  const double total = combined(ric, 0.7, 0.9, 500, 500).total;
  const bool pass = std::fabs(sa - std::exp(-2.0)) <= 1e-9 && nov == 0.0 && total == ric;
  return {pass, "R_SA - e^-2 = " + fmt(sa - std::exp(-2.0)) + " (tol 1e-9), R_NOV(self) = " + fmt(nov) +
                    ", combined at T_anneal - r_ic = " + fmt(total - ric)};
}

// 6. Conditioning closed forms, Monte-Carlo OLS variance and ridge monotonicity.
Outcome diversity_diagnostics() {
  const auto t0 = std::chrono::steady_clock::now();
  const double kappa = variance_diagnostics(equicorrelation(2, 0.9), 1.0, 100).condition_number;
  bool eig_ok = true;
  double eig_err = 0;
  for (int n : {2, 3, 5}) {
    for (double rho : {0.1, 0.5, 0.9}) {
      const Eigen::VectorXd ev = variance_diagnostics(equicorrelation(n, rho), 1.0, 100).eigenvalues;
      eig_err = std::max(eig_err, std::fabs(ev(0) - (1 + (n - 1) * rho)));
      for (int i = 1; i < n; ++i) eig_err = std::max(eig_err, std::fabs(ev(i) - (1 - rho)));
    }
  }
  eig_ok = eig_err <= 1e-12;

  // Fresh design rows from the equicorrelated law and fresh noise every trial.
  const int n = 4, T = 2000, trials = 5000;
  const double rho = 0.5, sigma2 = 1.0;
  const Eigen::MatrixXd sigma = equicorrelation(n, rho);
  const Eigen::MatrixXd L = sigma.llt().matrixL();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const Eigen::VectorXd beta_star = Eigen::VectorXd::LinSpaced(n, 0.5, -0.25);
  Eigen::MatrixXd betas(trials, n), U(T, n);
  Eigen::VectorXd eps(T);
  for (int k = 0; k < trials; ++k) {
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) U(t, i) = g(rng);
      eps(t) = std::sqrt(sigma2) * g(rng);
    }
    const Eigen::MatrixXd F = U * L.transpose();
    const Eigen::VectorXd y = F * beta_star + eps;
    betas.row(k) = (F.transpose() * F).ldlt().solve(F.transpose() * y).transpose();
  }
  const Eigen::MatrixXd centered = betas.rowwise() - betas.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / (trials - 1);
  const Eigen::MatrixXd theory = sigma2 / T * sigma.inverse();
  const Eigen::ArrayXXd rel = ((cov - theory).array() / theory.array()).abs();
  const double mc_err = rel.maxCoeff();
  const double mc_diag = rel.matrix().diagonal().maxCoeff();

  bool ridge_ok = true;
  double prev = ridge_variance(sigma, 0.0, sigma2, T);
  for (double lambda : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
    const double v = ridge_variance(sigma, lambda, sigma2, T);
    ridge_ok = ridge_ok && v < prev;
    prev = v;
  }
  const double secs = seconds_since(t0);
  const bool pass = std::fabs(kappa - 19.0) <= 1e-12 * 19 && eig_ok && mc_err <= 0.10 && ridge_ok && secs <= 120;
  return {pass, "kappa - 19 = " + fmt(kappa - 19.0) + ", eigenvalue error " + fmt(eig_err) +
                    ", Monte-Carlo Var(beta) max entrywise rel error " + fmt(mc_err) +
                    " <= 0.10 (diagonal " + fmt(mc_diag) + "), ridge " +
                    (ridge_ok ? "monotone" : "NOT monotone") + ", " + fmt(secs) + " s <= 120 s"};
}

// 7. Metric identities.
Outcome metric_identities() {
  std::mt19937_64 rng(10);
  const Signal s = make_signal(testing_support::random_matrix(80, 30, rng), 0);
  const double ic = correlation_metrics(s, s.values).ic;
  const Eigen::MatrixXd y = s.values + testing_support::random_matrix(80, 30, rng);
  const double ric = correlation_metrics(s, y).rank_ic;
  const double ric_cubed = correlation_metrics(make_signal(s.values.array().cube(), 0), y).rank_ic;
  std::normal_distribution<double> g(0.0, 0.02);
  std::vector<double> up;
  for (int i = 0; i < 250; ++i) up.push_back(std::fabs(g(rng)));
  const double mdd_up = max_drawdown(wealth_curve(up));
  const double mdd_path = max_drawdown(wealth_curve({0.10, -0.10}));
  const bool pass = std::fabs(ic - 1.0) <= 1e-12 && std::fabs(ric - ric_cubed) <= 1e-12 && mdd_up == 0.0 &&
                    std::fabs(mdd_path + 0.10) <= 1e-15;
  return {pass, "IC(a,a) - 1 = " + fmt(ic - 1.0) + ", RankIC change under cubing " + fmt(ric_cubed - ric) +
                    ", MDD(nondecreasing) = " + fmt(mdd_up) + ", MDD(+10%,-10%) + 0.10 = " + fmt(mdd_path + 0.10)};
}

// 8. Mining a planted alpha end to end.
Outcome planted_mining() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticConfig data;
  data.seed = 11;
  data.days = 750;
  data.assets = 100;
  data.planted = "close 10 TsPctChange";
  data.noise = noise_for_ic(0.3);
  const Panel panel = generate_synthetic(data);
  const double oracle_ic = correlation_metrics(evaluate(parse_rpn(*data.planted), panel), panel.labels).ic;

  TrainConfig cfg;
  cfg.episodes = 3000;
  cfg.seed = 5;
  Miner miner(cfg, panel);
  miner.run();
  const auto& entries = miner.pool().entries();
  if (entries.empty()) return {false, "pool is empty after 3000 episodes"};
  double best_ric = 0;
  std::string best_rpn;
  std::vector<Signal> signals;
  for (const auto& e : entries) {
    if (e.r_ic > best_ric) {
      best_ric = e.r_ic;
      best_rpn = e.rpn;
    }
    signals.push_back(e.signal);
  }
  const MegaAlpha mega = combine_mega_alpha(signals, panel.labels);
  const double mega_ic = correlation_metrics(mega.signal, panel.labels).ic;
  // Single alphas are scored on the span where the Mega-Alpha exists.
  double best_single = 0;
  for (Signal s : signals) {
    s.valid_from = std::max(s.valid_from, mega.signal.valid_from);
    best_single = std::max(best_single, correlation_metrics(s, panel.labels).ic);
  }
  const double secs = seconds_since(t0);
  const bool pass = best_ric >= 0.5 * 0.3 && mega_ic >= best_single - 0.01 && secs <= 1800;
  return {pass, "oracle IC " + fmt(oracle_ic) + ", pool " + std::to_string(entries.size()) + ", max r_ic " +
                    fmt(best_ric) + " >= 0.15 (" + best_rpn + "), Mega-Alpha IC " + fmt(mega_ic) +
                    " >= best single " + fmt(best_single) + " - 0.01, " + fmt(secs) + " s <= 1800 s"};
}

// 9. Mining is bit-identical across runs and across a checkpoint resume.
Outcome determinism() {
  SyntheticConfig data;
  data.seed = 12;
  data.days = 300;
  data.assets = 50;
  const Panel panel = generate_synthetic(data);
  TrainConfig cfg;
  cfg.episodes = 150;
  cfg.seed = 13;
  cfg.hidden = 32;

  auto logged = [&](Miner& m, std::string& log) {
    m.run([&](const EpisodeRecord& r) {
      std::ostringstream s;
      write_log_row(s, r);
      log += s.str();
    });
  };
  auto state = [](const Miner& m) {
    std::ostringstream s;
    write_parameters(s, m.policy().parameters());
    for (const auto& e : m.pool().entries()) s << e.rpn << '@' << format_double(e.r_ic) << '\n';
    return s.str();
  };
  Miner a(cfg, panel), b(cfg, panel);
  std::string log_a, log_b;
  logged(a, log_a);
  logged(b, log_b);

  const std::string ckpt = (std::filesystem::temp_directory_path() / "gfnalpha_acceptance.ckpt").string();
  std::string log_c;
  {
    Miner first(cfg, panel);
    for (int i = 0; i < 60; ++i) {
      std::ostringstream s;
      write_log_row(s, first.run_episode());
      log_c += s.str();
    }
    first.save_checkpoint(ckpt);
  }
  Miner c(cfg, panel);
  c.load_checkpoint(ckpt);
  logged(c, log_c);
  std::filesystem::remove(ckpt);

  const bool repeat = log_a == log_b && state(a) == state(b);
  const bool resume = log_a == log_c && state(a) == state(c);
  return {repeat && resume, std::string("two runs ") + (repeat ? "identical" : "DIFFER") +
                                ", resume at 60/150 " + (resume ? "identical" : "DIFFERS") +
                                " (log, parameters, pool)"};
}

}  // namespace

// Optional arguments pick criteria by number, e.g. `acceptance 2 6`.
int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"distribution matching", distribution_matching},
      {"gradient correctness", gradient_check},
      {"operator oracle", operator_oracle},
      {"early stop statistics", stop_statistics},
      {"reward closed forms", reward_closed_forms},
      {"diversity diagnostics", diversity_diagnostics},
      {"metric identities", metric_identities},
      {"planted-signal mining", planted_mining},
      {"determinism", determinism},
  };
  std::vector<bool> wanted(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "no criterion " << argv[a] << '\n';
      return 2;
    }
    wanted[k - 1] = true;
  }
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted[i]) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
