// gfnalpha: generate data, mine alphas, evaluate, combine, backtest and
// diagnose a pool from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gfnalpha/config.hpp"
#include "gfnalpha/engine.hpp"
#include "gfnalpha/metrics.hpp"
#include "gfnalpha/pool.hpp"
#include "gfnalpha/trainer.hpp"

namespace fs = std::filesystem;
using namespace gfnalpha;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out;
  std::string panel;
  std::string labels;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_file, "key = value config file");
  cmd->add_option("-s,--set", c.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("-o,--out", c.out, "output directory");
  cmd->add_option("--panel", c.panel, "panel CSV (synthetic data when omitted)");
  cmd->add_option("--labels", c.labels, "label CSV replacing forward returns");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config_file.empty()) cfg.load_file(c.config_file);
  for (const std::string& o : c.overrides) cfg.apply_override(o);
  if (!c.out.empty()) cfg.out = c.out;
  if (!c.panel.empty()) cfg.panel = c.panel;
  if (!c.labels.empty()) cfg.labels = c.labels;
  cfg.combiner.horizon = cfg.horizon;
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  std::ofstream echo(dir / "config.txt");
  if (!echo) throw std::runtime_error("cannot write " + (dir / "config.txt").string());
  cfg.write(echo);
  return dir;
}

Panel load_panel(const RunConfig& cfg) {
  if (cfg.panel.empty()) return generate_synthetic(cfg.synthetic_config());
  Panel p = read_panel_csv(cfg.panel, cfg.horizon);
  if (!cfg.labels.empty()) read_labels_csv(p, cfg.labels);
  return p;
}

struct PoolAlpha {
  std::string name;
  ExprTree tree;
  Signal signal;
};

std::vector<PoolAlpha> load_pool_alphas(const std::string& path, const Panel& panel) {
  if (path.empty()) throw ConfigError("--pool is required");
  const auto lines = read_pool_file(path);
  if (lines.empty()) throw std::runtime_error("pool file " + path + " has no entries");
  std::vector<PoolAlpha> out;
  for (const auto& line : lines) {
    PoolAlpha a;
    a.name = line.rpn;
    a.tree = parse_rpn(line.rpn);
    a.signal = evaluate(a.tree, panel);
    out.push_back(std::move(a));
  }
  return out;
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "absent";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

struct ReportRow {
  std::string name;
  MetricsReport metrics;
};

void print_report(const std::vector<ReportRow>& rows, std::ostream& table, std::ostream& csv) {
  csv << "alpha,IC,ICIR,RIC,RICIR,AR,MDD,SR\n";
  table << std::left << std::setw(40) << "alpha";
  for (const char* h : {"IC", "ICIR", "RIC", "RICIR", "AR", "MDD", "SR"}) {
    table << std::right << std::setw(10) << h;
  }
  table << '\n';
  for (const ReportRow& r : rows) {
    const auto& c = r.metrics.correlation;
    const std::optional<double> vals[7] = {
        c ? std::optional<double>(c->ic) : std::nullopt,
        c ? c->icir : std::nullopt,
        c ? std::optional<double>(c->rank_ic) : std::nullopt,
        c ? c->rank_icir : std::nullopt,
        r.metrics.portfolio.ar,
        r.metrics.portfolio.mdd,
        r.metrics.portfolio.sr};
    std::string shown = r.name.size() > 38 ? r.name.substr(0, 35) + "..." : r.name;
    table << std::left << std::setw(40) << shown;
    csv << '"' << r.name << '"';
    for (const auto& v : vals) {
      table << std::right << std::setw(10) << cell(v);
      csv << ',' << (v ? format_double(*v) : std::string("absent"));
    }
    table << '\n';
    csv << '\n';
  }
}

int cmd_gen_data(const Common& common) {
  const RunConfig cfg = resolve(common);
  const fs::path dir = prepare_out(cfg);
  const Panel p = generate_synthetic(cfg.synthetic_config());
  write_panel_csv(p, (dir / "panel.csv").string());
  if (cfg.synthetic.planted) write_labels_csv(p, (dir / "labels.csv").string());
  std::cout << "wrote " << p.num_days() * p.num_assets() << " rows to " << (dir / "panel.csv").string()
            << '\n';
  return 0;
}

int cmd_mine(const Common& common, const std::string& resume) {
  const RunConfig cfg = resolve(common);
  const Panel panel = load_panel(cfg);
  const fs::path dir = prepare_out(cfg);
  Miner miner(cfg.train, panel);
  const fs::path log_path = dir / "train_log.csv";
  std::ofstream log;
  if (!resume.empty()) {
    miner.load_checkpoint(resume);
    const bool fresh = !fs::exists(log_path);
    log.open(log_path, std::ios::app);
    if (fresh) write_log_header(log);
  } else {
    log.open(log_path);
    write_log_header(log);
  }
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  const std::string ckpt = (dir / "checkpoint.bin").string();
  miner.run([&](const EpisodeRecord& rec) {
    write_log_row(log, rec);
    if (cfg.train.checkpoint_every > 0 && (rec.episode + 1) % cfg.train.checkpoint_every == 0) {
      log.flush();
      miner.save_checkpoint(ckpt);
    }
  });
  miner.save_checkpoint(ckpt);
  save_parameters((dir / "params.bin").string(), miner.policy().parameters());
  write_pool_file(miner.pool(), (dir / "pool.txt").string());
  double best = 0.0;
  for (const PoolEntry& e : miner.pool().entries()) best = std::max(best, e.r_ic);
  std::cout << "episodes " << miner.episode() << ", pool " << miner.pool().size()
            << " alphas, best r_ic " << format_double(best) << '\n';
  return 0;
}

MegaAlpha combine_pool(const std::vector<PoolAlpha>& alphas, const Panel& panel,
                       const RunConfig& cfg) {
  std::vector<Signal> signals;
  for (const auto& a : alphas) signals.push_back(a.signal);
  return combine_mega_alpha(signals, panel.labels, cfg.combiner);
}

int cmd_eval(const Common& common, const std::string& pool_path) {
  const RunConfig cfg = resolve(common);
  const Panel panel = load_panel(cfg);
  const auto alphas = load_pool_alphas(pool_path, panel);
  const fs::path dir = prepare_out(cfg);
  const BacktestConfig bt = cfg.backtest_config();
  std::vector<ReportRow> rows;
  for (const auto& a : alphas) rows.push_back({a.name, backtest(a.signal, panel, bt)});
  try {
    const MegaAlpha mega = combine_pool(alphas, panel, cfg);
    rows.push_back({"Mega-Alpha", backtest(mega.signal, panel, bt)});
  } catch (const std::exception& e) {
    std::cerr << "warning: Mega-Alpha skipped: " << e.what() << '\n';
  }
  std::ofstream csv(dir / "report.csv");
  print_report(rows, std::cout, csv);
  return 0;
}

int cmd_combine(const Common& common, const std::string& pool_path) {
  const RunConfig cfg = resolve(common);
  const Panel panel = load_panel(cfg);
  const auto alphas = load_pool_alphas(pool_path, panel);
  const fs::path dir = prepare_out(cfg);
  const MegaAlpha mega = combine_pool(alphas, panel, cfg);
  std::vector<std::string> names;
  for (const auto& a : alphas) names.push_back(a.name);
  write_weights_csv(mega, panel.dates, names, (dir / "weights.csv").string());
  const MetricsReport rep = backtest(mega.signal, panel, cfg.backtest_config());
  write_metrics_summary(rep, (dir / "metrics.txt").string());
  std::ofstream csv(dir / "report.csv");
  print_report({{"Mega-Alpha", rep}}, std::cout, csv);
  return 0;
}

int cmd_backtest(const Common& common, const std::string& alpha, const std::string& pool_path) {
  const RunConfig cfg = resolve(common);
  if (alpha.empty() == pool_path.empty()) throw ConfigError("give exactly one of --alpha or --pool");
  const Panel panel = load_panel(cfg);
  Signal signal;
  std::string name;
  if (!alpha.empty()) {
    signal = evaluate(parse_rpn(alpha), panel);
    name = alpha;
  } else {
    signal = combine_pool(load_pool_alphas(pool_path, panel), panel, cfg).signal;
    name = "Mega-Alpha";
  }
  const fs::path dir = prepare_out(cfg);
  const MetricsReport rep = backtest(signal, panel, cfg.backtest_config());
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  emit_wealth_curve(rep, (dir / "wealth.csv").string());
  write_metrics_summary(rep, (dir / "metrics.txt").string());
  std::ofstream csv(dir / "report.csv");
  print_report({{name, rep}}, std::cout, csv);
  return 0;
}

int cmd_diagnose(const Common& common, const std::string& pool_path, double sigma2) {
  const RunConfig cfg = resolve(common);
  const Panel panel = load_panel(cfg);
  const auto alphas = load_pool_alphas(pool_path, panel);
  if (alphas.size() < 2) throw std::runtime_error("diagnose needs at least two alphas");
  const fs::path dir = prepare_out(cfg);
  std::vector<Signal> signals;
  std::vector<std::string> names;
  for (const auto& a : alphas) {
    signals.push_back(a.signal);
    names.push_back(a.name);
  }
  const DiversityReport rep = variance_diagnostics(signals, sigma2);
  std::ofstream file(dir / "diagnostics.txt");
  write_diversity_report(rep, names, file);
  write_diversity_report(rep, names, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Formulaic alpha mining with a generative flow network"};
  app.require_subcommand(1);
  Common common;
  std::string resume, pool_path, alpha;
  double sigma2 = 1.0;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic OHLCV panel (and planted labels)");
  add_common(gen, common);
  auto* mine_cmd = app.add_subcommand("mine", "train the sampler and build an alpha pool");
  add_common(mine_cmd, common);
  mine_cmd->add_option("--resume", resume, "checkpoint to continue from");
  auto* eval = app.add_subcommand("eval", "metrics for every pool alpha and the Mega-Alpha");
  add_common(eval, common);
  eval->add_option("--pool", pool_path, "pool file")->required();
  auto* comb = app.add_subcommand("combine", "fit the rolling Mega-Alpha combiner");
  add_common(comb, common);
  comb->add_option("--pool", pool_path, "pool file")->required();
  auto* bt = app.add_subcommand("backtest", "portfolio backtest of one alpha or a pool's Mega-Alpha");
  add_common(bt, common);
  bt->add_option("--alpha", alpha, "alpha in RPN, e.g. \"close 10 TsMean\"");
  bt->add_option("--pool", pool_path, "pool file (backtests its Mega-Alpha)");
  auto* diag = app.add_subcommand("diagnose", "conditioning and variance report of a pool");
  add_common(diag, common);
  diag->add_option("--pool", pool_path, "pool file")->required();
  diag->add_option("--sigma2", sigma2, "residual variance used in the variance formulas");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(common);
    if (mine_cmd->parsed()) return cmd_mine(common, resume);
    if (eval->parsed()) return cmd_eval(common, pool_path);
    if (comb->parsed()) return cmd_combine(common, pool_path);
    if (bt->parsed()) return cmd_backtest(common, alpha, pool_path);
    if (diag->parsed()) return cmd_diagnose(common, pool_path, sigma2);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
