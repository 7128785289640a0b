#pragma once

// Run configuration: flat `key = value` text, typed parsing, overrides and
// an echo that can be fed back in to recreate a run.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfnalpha/engine.hpp"
#include "gfnalpha/metrics.hpp"
#include "gfnalpha/pool.hpp"
#include "gfnalpha/trainer.hpp"

namespace gfnalpha {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  TrainConfig train;

  // Data source: a CSV panel if `panel` is set, synthetic otherwise.
  std::string panel;
  std::string labels;
  SyntheticConfig synthetic;
  std::optional<double> target_ic;  // overrides synthetic.noise when set
  int horizon = kDefaultHorizon;

  std::string out = "run";
  MarketMode market = MarketMode::LongOnly;
  double cost_bps = 0.0;
  CombinerConfig combiner;

  // Keys in echo order.
  static std::vector<std::string> keys();

  // Throws ConfigError on an unknown key or a value of the wrong type.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // Reads `key = value` lines; '#' starts a comment.
  void load(std::istream& in, const std::string& source = "<config>");
  void load_file(const std::string& path);
  // `key=value` override.
  void apply_override(const std::string& assignment);

  void write(std::ostream& out) const;

  // Synthetic generator settings with target_ic folded into the noise.
  SyntheticConfig synthetic_config() const;
  BacktestConfig backtest_config() const;
  // Throws ConfigError if a field is out of range.
  void validate() const;
};

}  // namespace gfnalpha
