#pragma once

// Relation-typed graph convolution encoder over expression trees and the
// masked action head of the sampling policy.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gfnalpha/formula.hpp"
#include "gfnalpha/tensor.hpp"

namespace gfnalpha {

struct RgcnConfig {
  int hidden = 128;
  int layers = 2;
};

struct RgcnLayer {
  std::vector<Tensor> relation;  // kNumRelations matrices, hidden x hidden
  Tensor self_loop;              // hidden x hidden
};

struct RgcnParams {
  Tensor embedding;  // |vocab| x hidden
  Tensor start;      // 1 x hidden, embedding of the empty state
  std::vector<RgcnLayer> layers;
};

struct PolicyHead {
  Tensor weight;  // hidden x |vocab|
  Tensor bias;    // 1 x |vocab|
  Tensor log_z;   // 1 x 1, shared across states
};

struct Encoded {
  Tensor node_states;  // |V| x hidden; undefined for the empty state
  Tensor embedding;    // 1 x hidden
};

// h^(0) = token embedding rows; per layer
// h_v <- ReLU(sum_r sum_{u in N_r(v)} W_r h_u / |N_r(v)| + W_0 h_v), with
// neighbourhoods taken in both directions of each edge; readout is the
// coordinate-wise max over final node states.
Encoded rgcn_forward(const ExprTree& tree, const std::vector<RelationEdge>& edges,
                     const RgcnParams& params, const Vocabulary& vocab);

// Masked log-probabilities over the vocabulary (-inf where illegal).
Tensor policy_logits(const Tensor& embedding, const PolicyHead& head,
                     const std::vector<bool>& mask);

class PolicyNet {
 public:
  PolicyNet(Vocabulary vocab, RgcnConfig config, std::uint64_t seed);

  const Vocabulary& vocab() const { return vocab_; }
  const RgcnConfig& config() const { return config_; }
  const RgcnParams& rgcn() const { return rgcn_; }
  RgcnParams& rgcn() { return rgcn_; }
  const PolicyHead& head() const { return head_; }
  PolicyHead& head() { return head_; }
  const Tensor& log_z() const { return head_.log_z; }

  Encoded encode(const ExprTree& state) const;
  Tensor log_probs(const Tensor& embedding, const std::vector<bool>& mask) const {
    return policy_logits(embedding, head_, mask);
  }

  // Stable order; names are part of the checkpoint format.
  std::vector<NamedParameter> parameters() const;

 private:
  Vocabulary vocab_;
  RgcnConfig config_;
  RgcnParams rgcn_;
  PolicyHead head_;
};

// Binary parameter file:
//   "ASGPARM1" | u32 version (=1) | u32 count |
//   count x { u32 name_len | name | u64 rows | u64 cols | rows*cols f64 row-major }
// All integers and floats little-endian.
void write_parameters(std::ostream& out, const std::vector<NamedParameter>& params);
// Values are copied into the given tensors; names and shapes must match.
void read_parameters(std::istream& in, const std::vector<NamedParameter>& params);
void save_parameters(const std::string& path, const std::vector<NamedParameter>& params);
void load_parameters(const std::string& path, const std::vector<NamedParameter>& params);

// Raw matrix (u64 rows | u64 cols | row-major f64) helpers shared with the
// trainer checkpoint.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in);

}  // namespace gfnalpha
