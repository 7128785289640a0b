#include "gfnalpha/rgcn.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace gfnalpha {

namespace {

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated parameter stream");
  return v;
}

constexpr char kMagic[8] = {'A', 'S', 'G', 'P', 'A', 'R', 'M', '1'};

}  // namespace

Encoded rgcn_forward(const ExprTree& tree, const std::vector<RelationEdge>& edges,
                     const RgcnParams& params, const Vocabulary& vocab) {
  if (tree.empty()) return {Tensor(), params.start};
  const int n = tree.size();
  std::vector<int> ids(n);
  for (int v = 0; v < n; ++v) {
    ids[v] = vocab.index_of(tree.node(v).token);
    if (ids[v] < 0) {
      throw std::invalid_argument("token " + token_text(tree.node(v).token) +
                                  " is not in the vocabulary");
    }
  }
  // Row-normalized adjacency per relation, edges taken in both directions.
  std::array<Eigen::MatrixXd, kNumRelations> adj;
  std::array<bool, kNumRelations> present{};
  for (const RelationEdge& e : edges) {
    const int r = static_cast<int>(e.relation);
    if (!present[r]) {
      adj[r] = Eigen::MatrixXd::Zero(n, n);
      present[r] = true;
    }
    adj[r](e.parent, e.child) += 1.0;
    adj[r](e.child, e.parent) += 1.0;
  }
  std::array<Tensor, kNumRelations> adj_t;
  for (int r = 0; r < kNumRelations; ++r) {
    if (!present[r]) continue;
    Eigen::VectorXd deg = adj[r].rowwise().sum();
    for (int v = 0; v < n; ++v) {
      if (deg(v) > 0.0) adj[r].row(v) /= deg(v);
    }
    adj_t[r] = Tensor::constant(std::move(adj[r]));
  }

  Tensor h = gather_rows(params.embedding, ids);
  for (const RgcnLayer& layer : params.layers) {
    std::vector<Tensor> terms{matmul(h, layer.self_loop)};
    for (int r = 0; r < kNumRelations; ++r) {
      if (!present[r]) continue;
      terms.push_back(matmul(matmul(adj_t[r], h), layer.relation[r]));
    }
    h = relu(add_all(terms));
  }
  return {h, max_rows(h)};
}

Tensor policy_logits(const Tensor& embedding, const PolicyHead& head,
                     const std::vector<bool>& mask) {
  return masked_log_softmax(add_row(matmul(embedding, head.weight), head.bias), mask);
}

PolicyNet::PolicyNet(Vocabulary vocab, RgcnConfig config, std::uint64_t seed)
    : vocab_(std::move(vocab)), config_(config) {
  if (config_.hidden < 1 || config_.layers < 0) {
    throw std::invalid_argument("invalid RGCN dimensions");
  }
  std::mt19937_64 rng(seed);
  const Eigen::Index h = config_.hidden;
  const Eigen::Index v = vocab_.size();
  rgcn_.embedding = Tensor::parameter(glorot(v, h, rng));
  rgcn_.start = Tensor::parameter(glorot(1, h, rng));
  for (int l = 0; l < config_.layers; ++l) {
    RgcnLayer layer;
    for (int r = 0; r < kNumRelations; ++r) {
      layer.relation.push_back(Tensor::parameter(glorot(h, h, rng)));
    }
    layer.self_loop = Tensor::parameter(glorot(h, h, rng));
    rgcn_.layers.push_back(std::move(layer));
  }
  head_.weight = Tensor::parameter(glorot(h, v, rng));
  head_.bias = Tensor::parameter(Eigen::MatrixXd::Zero(1, v));
  head_.log_z = Tensor::scalar(0.0, true);
}

Encoded PolicyNet::encode(const ExprTree& state) const {
  return rgcn_forward(state, relation_edges(state), rgcn_, vocab_);
}

std::vector<NamedParameter> PolicyNet::parameters() const {
  std::vector<NamedParameter> out{{"embedding", rgcn_.embedding}, {"start", rgcn_.start}};
  for (std::size_t l = 0; l < rgcn_.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (int r = 0; r < kNumRelations; ++r) {
      out.push_back({prefix + "rel" + std::to_string(r), rgcn_.layers[l].relation[r]});
    }
    out.push_back({prefix + "self", rgcn_.layers[l].self_loop});
  }
  out.push_back({"head.weight", head_.weight});
  out.push_back({"head.bias", head_.bias});
  out.push_back({"logZ", head_.log_z});
  return out;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
  }
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  if (rows > (1u << 24) || cols > (1u << 24)) throw std::runtime_error("implausible matrix size");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>(in);
  }
  return m;
}

void write_parameters(std::ostream& out, const std::vector<NamedParameter>& params) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_matrix(out, p.tensor.value());
  }
}

void read_parameters(std::istream& in, const std::vector<NamedParameter>& params) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a parameter file (bad magic)");
  }
  if (get<std::uint32_t>(in) != 1) throw std::runtime_error("unsupported parameter file version");
  if (get<std::uint32_t>(in) != params.size()) throw std::runtime_error("parameter count mismatch");
  for (auto p : params) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (name != p.name) throw std::runtime_error("parameter name mismatch: " + name);
    Eigen::MatrixXd m = read_matrix(in);
    if (m.rows() != p.tensor.rows() || m.cols() != p.tensor.cols()) {
      throw std::runtime_error("parameter shape mismatch: " + name);
    }
    p.tensor.mutable_value() = std::move(m);
  }
}

void save_parameters(const std::string& path, const std::vector<NamedParameter>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_parameters(out, params);
}

void load_parameters(const std::string& path, const std::vector<NamedParameter>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  read_parameters(in, params);
}

}  // namespace gfnalpha
