#include "gfnalpha/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gfnalpha {

namespace {

constexpr char kCheckpointMagic[8] = {'A', 'S', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > (1u << 26)) throw std::runtime_error("implausible string length in checkpoint");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("truncated checkpoint");
  return s;
}

}  // namespace

double TrainConfig::anneal_horizon() const {
  if (t_anneal > 0) return static_cast<double>(t_anneal);
  return static_cast<double>(std::max<std::int64_t>(episodes, 1));
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (episodes < 0) fail("episodes must be >= 0");
  if (max_len < 1) fail("max_len must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (layers < 0) fail("layers must be >= 0");
  if (entropy_coef < 0.0) fail("entropy_coef must be >= 0");
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (!(logz_lr > 0.0)) fail("logz_lr must be > 0");
  if (sa_weight < 0.0 || nov_weight < 0.0) fail("reward weights must be >= 0");
  if (pool_capacity < 1) fail("pool_capacity must be >= 1");
  if (t_anneal < 0) fail("t_anneal must be >= 0");
  if (knn < 1) fail("knn must be >= 1");
  if (!(reward_floor > 0.0)) fail("reward_floor must be > 0");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
  if (windows.empty()) fail("windows must not be empty");
  for (int w : windows) {
    if (w < 1) fail("windows must be >= 1");
  }
}

Tensor tb_loss(const Tensor& log_z, const Tensor& log_pf, double reward) {
  if (!(reward > 0.0)) throw std::invalid_argument("reward must be positive");
  return square(add_scalar(add(log_z, log_pf), -std::log(reward)));
}

Tensor entropy_loss(const std::vector<Tensor>& step_entropies) {
  if (step_entropies.empty()) return Tensor::scalar(0.0);
  return scale(add_all(step_entropies), -1.0);
}

Tensor final_loss(const Tensor& tb, const Tensor& ent, double beta) {
  if (beta == 0.0) return tb;
  return add(tb, scale(ent, beta));
}

Adam make_optimizer(const PolicyNet& policy, double lr, double logz_lr) {
  Adam adam(policy.parameters(), AdamConfig{lr});
  adam.set_lr("logZ", logz_lr);
  return adam;
}

TbStepResult tb_train_step(const PolicyNet& policy, Adam& optimizer, const ActionSpace& space,
                           std::mt19937_64& rng,
                           const std::function<double(const ExprTree&)>& reward, double beta,
                           int batch) {
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  std::vector<Tensor> losses;
  TbStepResult res;
  for (int b = 0; b < batch; ++b) {
    TrajectoryGraph graph;
    const Trajectory traj = sample_trajectory(policy, space, rng, &graph);
    const Tensor tb = tb_loss(policy.log_z(), graph.log_pf, reward(traj.terminal));
    res.tb_loss += tb.item() / batch;
    losses.push_back(final_loss(tb, entropy_loss(graph.entropies), beta));
  }
  const Tensor loss = scale(add_all(losses), 1.0 / batch);
  res.loss = loss.item();
  optimizer.zero_grad();
  if (std::isfinite(res.loss)) {
    backward(loss);
    res.applied = optimizer.step();
  } else {
    res.applied = false;
  }
  return res;
}

void write_log_header(std::ostream& out) {
  out << "episode,length,r_ic,r_sa,r_nov,total,tb_loss,logZ,admitted,alpha\n";
}

void write_log_row(std::ostream& out, const EpisodeRecord& rec) {
  out << rec.episode << ',' << rec.length << ',' << format_double(rec.reward.r_ic) << ','
      << format_double(rec.reward.r_sa) << ',' << format_double(rec.reward.r_nov) << ','
      << format_double(rec.reward.total) << ',' << format_double(rec.tb_loss) << ','
      << format_double(rec.log_z) << ',' << (rec.admitted ? 1 : 0) << ",\"" << rec.rpn << "\"\n";
}

namespace {

ActionSpace make_space(const TrainConfig& config) {
  config.validate();
  return ActionSpace(Vocabulary(config.windows), config.max_len);
}

std::uint64_t sampler_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

}  // namespace

Miner::Miner(TrainConfig config, const Panel& panel)
    : config_(std::move(config)),
      panel_(&panel),
      space_(make_space(config_)),
      policy_(space_.vocab(), RgcnConfig{config_.hidden, config_.layers}, config_.seed),
      optimizer_(make_optimizer(policy_, config_.lr, config_.logz_lr)),
      rng_(sampler_seed(config_.seed)),
      pool_(config_.pool_capacity) {
  if (panel.labels.rows() != panel.num_days() || panel.labels.cols() != panel.num_assets()) {
    throw std::invalid_argument("panel has no labels");
  }
}

EpisodeRecord Miner::run_episode() {
  EpisodeRecord rec;
  rec.episode = episode_;
  TrajectoryGraph graph;
  const Trajectory traj = sample_trajectory(policy_, space_, rng_, &graph);
  rec.length = traj.terminal.size();
  rec.rpn = to_rpn(traj.terminal);

  bool degenerate = true;
  double ric = 0.0, rsa = 1.0, rnov = 1.0;
  Signal signal;
  if (traj.terminal.lookback() < panel_->num_days()) {
    signal = evaluate(traj.terminal, *panel_);
    if (!signal.degenerate) {
      const IcScore ic = r_ic(signal, panel_->labels);
      degenerate = ic.degenerate;
      ric = ic.value;
    }
  }
  const Eigen::RowVectorXd embedding = graph.terminal_embedding.value();
  if (!degenerate) {
    rsa = r_sa(embedding, signal, pool_, config_.knn);
    rnov = r_nov(signal, pool_);
  }
  rec.reward = combined(ric, rsa, rnov, static_cast<double>(episode_), config_.anneal_horizon(),
                        config_.sa_weight, config_.nov_weight, degenerate, config_.reward_floor);

  if (!degenerate && ric >= config_.ic_min && rnov >= config_.nov_min) {
    PoolEntry entry;
    entry.tree = traj.terminal;
    entry.rpn = canonical_rpn(traj.terminal);
    entry.embedding = embedding;
    entry.signal = std::move(signal);
    entry.r_ic = ric;
    entry.admit_step = episode_;
    rec.admitted = pool_.admit(std::move(entry)).admitted;
  }

  const Tensor tb = tb_loss(policy_.log_z(), graph.log_pf, rec.reward.total);
  const Tensor loss = final_loss(tb, entropy_loss(graph.entropies), config_.entropy_coef);
  rec.tb_loss = tb.item();
  optimizer_.zero_grad();
  if (std::isfinite(loss.item())) {
    backward(loss);
    rec.applied = optimizer_.step();
  } else {
    rec.applied = false;
  }
  rec.log_z = policy_.log_z().item();
  ++episode_;
  return rec;
}

void Miner::run(const std::function<void(const EpisodeRecord&)>& on_episode) {
  while (episode_ < config_.episodes) {
    const EpisodeRecord rec = run_episode();
    if (on_episode) on_episode(rec);
  }
}

void Miner::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::int64_t>(out, episode_);
  write_parameters(out, policy_.parameters());
  put<std::int64_t>(out, optimizer_.step_count());
  const auto& m = optimizer_.first_moments();
  const auto& v = optimizer_.second_moments();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    write_matrix(out, m[i]);
    write_matrix(out, v[i]);
  }
  std::ostringstream rng_text;
  rng_text << rng_;
  put_string(out, rng_text.str());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(pool_.size()));
  for (const PoolEntry& e : pool_.entries()) {
    put_string(out, to_rpn(e.tree));
    put<std::int64_t>(out, e.admit_step);
    put<double>(out, e.r_ic);
    write_matrix(out, e.embedding);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void Miner::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  if (get<std::uint32_t>(in) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  const auto episode = get<std::int64_t>(in);
  read_parameters(in, policy_.parameters());
  const auto steps = get<std::int64_t>(in);
  auto& m = optimizer_.first_moments();
  auto& v = optimizer_.second_moments();
  if (get<std::uint32_t>(in) != m.size()) throw std::runtime_error("optimizer state mismatch");
  for (std::size_t i = 0; i < m.size(); ++i) {
    Eigen::MatrixXd mi = read_matrix(in);
    Eigen::MatrixXd vi = read_matrix(in);
    if (mi.rows() != m[i].rows() || mi.cols() != m[i].cols() || vi.rows() != v[i].rows() ||
        vi.cols() != v[i].cols()) {
      throw std::runtime_error("optimizer state shape mismatch");
    }
    m[i] = std::move(mi);
    v[i] = std::move(vi);
  }
  optimizer_.set_step_count(steps);
  std::istringstream rng_text(get_string(in));
  rng_text >> rng_;
  if (!rng_text) throw std::runtime_error("corrupt sampler state in checkpoint");

  AlphaPool pool(config_.pool_capacity);
  const auto count = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    PoolEntry e;
    e.tree = parse_rpn(get_string(in));
    e.rpn = canonical_rpn(e.tree);
    e.admit_step = get<std::int64_t>(in);
    e.r_ic = get<double>(in);
    e.embedding = read_matrix(in);
    e.signal = evaluate(e.tree, *panel_);
    pool.admit(std::move(e));
  }
  pool_ = std::move(pool);
  episode_ = episode;
}

AlphaPool mine(const TrainConfig& config, const Panel& panel) {
  Miner miner(config, panel);
  miner.run();
  return miner.pool();
}

}  // namespace gfnalpha
