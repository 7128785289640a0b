#include "gfnalpha/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace gfnalpha {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::string join(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
  return s;
}

struct Field {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Get>
Field number(const char* name, Get access) {
  return {name,
          [name, access](RunConfig& c, const std::string& v) {
            access(c) = parse_number<T>(name, v);
          },
          [access](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(access(const_cast<RunConfig&>(c)));
            } else {
              return std::to_string(access(const_cast<RunConfig&>(c)));
            }
          }};
}

template <typename Get>
Field text(const char* name, Get access) {
  return {name, [access](RunConfig& c, const std::string& v) { access(c) = v; },
          [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      number<std::int64_t>("episodes", [](RunConfig& c) -> auto& { return c.train.episodes; }),
      number<int>("max_len", [](RunConfig& c) -> auto& { return c.train.max_len; }),
      number<int>("hidden", [](RunConfig& c) -> auto& { return c.train.hidden; }),
      number<int>("layers", [](RunConfig& c) -> auto& { return c.train.layers; }),
      number<double>("entropy_coef", [](RunConfig& c) -> auto& { return c.train.entropy_coef; }),
      number<double>("lr", [](RunConfig& c) -> auto& { return c.train.lr; }),
      number<double>("logz_lr", [](RunConfig& c) -> auto& { return c.train.logz_lr; }),
      number<double>("sa_weight", [](RunConfig& c) -> auto& { return c.train.sa_weight; }),
      number<double>("nov_weight", [](RunConfig& c) -> auto& { return c.train.nov_weight; }),
      number<int>("pool_capacity", [](RunConfig& c) -> auto& { return c.train.pool_capacity; }),
      number<std::int64_t>("t_anneal", [](RunConfig& c) -> auto& { return c.train.t_anneal; }),
      number<int>("knn", [](RunConfig& c) -> auto& { return c.train.knn; }),
      number<std::uint64_t>("seed", [](RunConfig& c) -> auto& { return c.train.seed; }),
      number<double>("ic_min", [](RunConfig& c) -> auto& { return c.train.ic_min; }),
      number<double>("nov_min", [](RunConfig& c) -> auto& { return c.train.nov_min; }),
      number<double>("reward_floor", [](RunConfig& c) -> auto& { return c.train.reward_floor; }),
      number<std::int64_t>("checkpoint_every",
                           [](RunConfig& c) -> auto& { return c.train.checkpoint_every; }),
      {"windows",
       [](RunConfig& c, const std::string& v) { c.train.windows = parse_int_list("windows", v); },
       [](const RunConfig& c) { return join(c.train.windows); }},
      text("panel", [](RunConfig& c) -> auto& { return c.panel; }),
      text("labels", [](RunConfig& c) -> auto& { return c.labels; }),
      number<std::uint64_t>("data_seed", [](RunConfig& c) -> auto& { return c.synthetic.seed; }),
      number<int>("days", [](RunConfig& c) -> auto& { return c.synthetic.days; }),
      number<int>("assets", [](RunConfig& c) -> auto& { return c.synthetic.assets; }),
      {"planted",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) {
           c.synthetic.planted.reset();
         } else {
           c.synthetic.planted = v;
         }
       },
       [](const RunConfig& c) { return c.synthetic.planted.value_or(""); }},
      number<double>("noise", [](RunConfig& c) -> auto& { return c.synthetic.noise; }),
      {"target_ic",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) {
           c.target_ic.reset();
         } else {
           c.target_ic = parse_number<double>("target_ic", v);
         }
       },
       [](const RunConfig& c) { return c.target_ic ? format_double(*c.target_ic) : std::string(); }},
      number<int>("horizon", [](RunConfig& c) -> auto& { return c.horizon; }),
      text("out", [](RunConfig& c) -> auto& { return c.out; }),
      {"market",
       [](RunConfig& c, const std::string& v) {
         if (v == "long_only") {
           c.market = MarketMode::LongOnly;
         } else if (v == "long_short") {
           c.market = MarketMode::LongShort;
         } else {
           throw ConfigError("market must be long_only or long_short, got '" + v + "'");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.market == MarketMode::LongOnly ? "long_only" : "long_short");
       }},
      number<double>("cost_bps", [](RunConfig& c) -> auto& { return c.cost_bps; }),
      number<int>("combiner_lookback", [](RunConfig& c) -> auto& { return c.combiner.lookback; }),
      number<int>("combiner_top_k", [](RunConfig& c) -> auto& { return c.combiner.top_k; }),
      number<int>("combiner_rebalance",
                  [](RunConfig& c) -> auto& { return c.combiner.rebalance; }),
  };
  return f;
}

const Field& field(const std::string& key) {
  for (const Field& f : fields()) {
    if (key == f.name) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.emplace_back(f.name);
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, value);
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

void RunConfig::load(std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  load(in, path);
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + assignment);
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::write(std::ostream& out) const {
  for (const Field& f : fields()) out << f.name << " = " << f.get(*this) << '\n';
}

SyntheticConfig RunConfig::synthetic_config() const {
  SyntheticConfig s = synthetic;
  s.horizon = horizon;
  if (target_ic) s.noise = noise_for_ic(*target_ic);
  return s;
}

BacktestConfig RunConfig::backtest_config() const {
  BacktestConfig b = market == MarketMode::LongOnly ? BacktestConfig::long_only()
                                                    : BacktestConfig::long_short();
  b.hold = horizon;
  b.cost_bps = cost_bps;
  return b;
}

void RunConfig::validate() const {
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (synthetic.days < 2) throw ConfigError("days must be >= 2");
  if (synthetic.assets < 2) throw ConfigError("assets must be >= 2");
  if (synthetic.noise < 0.0) throw ConfigError("noise must be >= 0");
  if (target_ic && !(*target_ic > 0.0 && *target_ic <= 1.0)) {
    throw ConfigError("target_ic must lie in (0, 1]");
  }
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (cost_bps < 0.0) throw ConfigError("cost_bps must be >= 0");
  if (combiner.lookback < 1 || combiner.top_k < 1 || combiner.rebalance < 1) {
    throw ConfigError("combiner settings must be >= 1");
  }
}

}  // namespace gfnalpha
