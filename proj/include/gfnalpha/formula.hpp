#pragma once

// Token vocabulary, expression trees and the postfix construction state used
// by the sampler.
//
// A state is a stack of finished subtrees (postfix construction). Rolling
// operators are emitted immediately after their data operands and leave one
// open window slot, which must be filled by a TimeWindow token next. The
// on-disk RPN text places the window before its operator instead
// ("close 10 TsMean").

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gfnalpha {

enum class TokenKind : std::uint8_t {
  Feature,
  UnaryOp,
  BinaryOp,
  RollingUnaryOp,
  RollingBinaryOp,
  TimeWindow,
  Sep,
};

enum class Feature : std::uint8_t { Open, Close, High, Low, Vwap, Volume };
inline constexpr int kNumFeatures = 6;

enum class Op : std::uint8_t {
  // unary
  Abs, Slog1p, Inv, Sign, Log, Rank,
  // binary
  Add, Sub, Mul, Div, Pow, Greater, Less,
  // rolling unary
  Ref, TsMean, TsSum, TsStd, TsIr, TsMinMaxDiff, TsMaxDiff, TsMinDiff, TsVar,
  TsSkew, TsKurt, TsMax, TsMin, TsMed, TsMad, TsRank, TsDelta, TsDiv,
  TsPctChange, TsWMA, TsEMA,
  // rolling binary
  TsCov, TsCorr,
};
inline constexpr int kNumOps = 36;

TokenKind op_kind(Op op);
std::string_view op_name(Op op);
std::string_view feature_name(Feature f);
bool is_commutative(Op op);

struct Token {
  TokenKind kind = TokenKind::Sep;
  // Feature / Op enum value, or the window length in days.
  int value = 0;

  static Token feature(Feature f) { return {TokenKind::Feature, static_cast<int>(f)}; }
  static Token op(Op o) { return {op_kind(o), static_cast<int>(o)}; }
  static Token window(int days) { return {TokenKind::TimeWindow, days}; }
  static Token sep() { return {TokenKind::Sep, 0}; }

  Op as_op() const { return static_cast<Op>(value); }
  Feature as_feature() const { return static_cast<Feature>(value); }
  bool is_operator() const;

  friend bool operator==(const Token&, const Token&) = default;
};

std::string token_text(const Token& t);
// Throws std::invalid_argument on unknown text.
Token token_from_text(std::string_view text);

// Number of child slots: data children first, then the window (if rolling).
int arity(const Token& t);
int data_arity(const Token& t);

inline const std::vector<int>& default_windows() {
  static const std::vector<int> w{1, 5, 10, 20, 30, 40, 50};
  return w;
}

// Fixed action index space: features, operators, windows, Sep (last).
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<int> windows = default_windows());

  int size() const { return static_cast<int>(tokens_.size()); }
  const Token& token(int index) const { return tokens_.at(index); }
  // -1 if the token is not part of this vocabulary.
  int index_of(const Token& t) const;
  int sep_index() const { return size() - 1; }
  const std::vector<int>& windows() const { return windows_; }
  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  std::vector<int> windows_;
  std::vector<Token> tokens_;
};

enum class Relation : std::uint8_t {
  UnaryOperand,
  CommutativeOperand,
  NonCommutativeLeft,
  NonCommutativeRight,
  RollingFeatureOperand,
  RollingTimeOperand,
};
inline constexpr int kNumRelations = 6;

struct RelationEdge {
  int parent = 0;
  int child = 0;
  Relation relation = Relation::UnaryOperand;
  friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
};

enum class SlotKind : std::uint8_t { Data, Window };

struct OpenSlot {
  int node = 0;
  int arg = 0;
  SlotKind kind = SlotKind::Window;
};

struct ExprNode {
  Token token;
  // -1 for an unfilled slot; unused entries beyond arity are -1 too.
  std::array<int, 3> children{-1, -1, -1};
};

class ExprTree {
 public:
  ExprTree() = default;

  // Builds a tree from explicit node storage. `roots` is the stack of
  // subtree roots, bottom first. Throws std::invalid_argument if the nodes do
  // not form a forest with those roots or a window sits in a data slot.
  static ExprTree from_nodes(std::vector<ExprNode> nodes, std::vector<int> roots);

  // Appends one token in generation order. Throws std::invalid_argument if
  // the token cannot be placed (stack underflow, window without slot, ...).
  void apply(const Token& t);

  bool empty() const { return nodes_.empty(); }
  // Len(s): number of token nodes including windows.
  int size() const { return static_cast<int>(nodes_.size()); }
  // Stack depth counting a rolling operator awaiting its window.
  int stack_size() const { return static_cast<int>(stack_.size()); }
  bool has_open_slot() const { return open_slot_.has_value(); }
  std::vector<OpenSlot> open_slots() const;
  // A single finished data subtree with no open slot.
  bool is_terminal() const { return stack_.size() == 1 && !open_slot_; }

  int root() const;
  const std::vector<int>& stack() const { return stack_; }
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const ExprNode& node(int i) const { return nodes_.at(i); }

  // Smallest number of further tokens that makes the state terminal.
  int min_completion_cost() const;

  // Largest rolling-window lookback along any root-to-leaf path; the first
  // row of a signal that is not contaminated by warm-up NaNs.
  int lookback() const;

 private:
  int lookback_of(int node) const;

  std::vector<ExprNode> nodes_;
  std::vector<int> stack_;
  std::optional<OpenSlot> open_slot_;
};

// Structural equality: same token shapes, child order respected, storage
// order ignored.
bool structurally_equal(const ExprTree& a, const ExprTree& b);

// Whitespace-separated postfix text. Throws std::invalid_argument on stack
// underflow, leftover stack items, a window in a data position, or an
// unknown token.
ExprTree parse_rpn(std::string_view text);

// Postfix text of a terminal tree in stored child order.
std::string to_rpn(const ExprTree& tree);
// Same, with children of commutative operators sorted by their own
// canonical text, so syntactic variants print identically.
std::string canonical_rpn(const ExprTree& tree);

// Generation-order token sequence that rebuilds `tree` through apply().
std::vector<Token> generation_order(const ExprTree& tree);

// Mask over `vocab`: token legal iff it fits the next slot and the tree
// stays completable within `remaining_budget`. Sep is legal iff the state
// is terminal.
std::vector<bool> legal_actions(const ExprTree& state, int remaining_budget,
                                const Vocabulary& vocab);

// One edge per filled parent->child link, ordered by (parent, argument).
std::vector<RelationEdge> relation_edges(const ExprTree& tree);

}  // namespace gfnalpha
