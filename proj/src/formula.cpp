#include "gfnalpha/formula.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace gfnalpha {

namespace {

constexpr std::array<std::string_view, kNumOps> kOpNames{
    "Abs",     "Slog1p",      "Inv",       "Sign",      "Log",    "Rank",
    "Add",     "Sub",         "Mul",       "Div",       "Pow",    "Greater",
    "Less",    "Ref",         "TsMean",    "TsSum",     "TsStd",  "TsIr",
    "TsMinMaxDiff", "TsMaxDiff", "TsMinDiff", "TsVar", "TsSkew", "TsKurt",
    "TsMax",   "TsMin",       "TsMed",     "TsMad",     "TsRank", "TsDelta",
    "TsDiv",   "TsPctChange", "TsWMA",     "TsEMA",     "TsCov",  "TsCorr",
};

constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "open", "close", "high", "low", "vwap", "volume"};

// Abstract completion cost of a stack of `k` subtrees with `pending` open
// window slots.
int completion_cost(int k, int pending) {
  return pending + (k == 0 ? 1 : k - 1);
}

}  // namespace

TokenKind op_kind(Op op) {
  const int v = static_cast<int>(op);
  if (v <= static_cast<int>(Op::Rank)) return TokenKind::UnaryOp;
  if (v <= static_cast<int>(Op::Less)) return TokenKind::BinaryOp;
  if (v <= static_cast<int>(Op::TsEMA)) return TokenKind::RollingUnaryOp;
  return TokenKind::RollingBinaryOp;
}

std::string_view op_name(Op op) { return kOpNames.at(static_cast<int>(op)); }

std::string_view feature_name(Feature f) {
  return kFeatureNames.at(static_cast<int>(f));
}

bool is_commutative(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Mul:
    case Op::TsCov:
    case Op::TsCorr:
      return true;
    default:
      return false;
  }
}

bool Token::is_operator() const {
  return kind == TokenKind::UnaryOp || kind == TokenKind::BinaryOp ||
         kind == TokenKind::RollingUnaryOp || kind == TokenKind::RollingBinaryOp;
}

std::string token_text(const Token& t) {
  switch (t.kind) {
    case TokenKind::Feature:
      return std::string(feature_name(t.as_feature()));
    case TokenKind::TimeWindow:
      return std::to_string(t.value);
    case TokenKind::Sep:
      return "SEP";
    default:
      return std::string(op_name(t.as_op()));
  }
}

Token token_from_text(std::string_view text) {
  for (int i = 0; i < kNumFeatures; ++i) {
    if (kFeatureNames[i] == text) return Token::feature(static_cast<Feature>(i));
  }
  for (int i = 0; i < kNumOps; ++i) {
    if (kOpNames[i] == text) return Token::op(static_cast<Op>(i));
  }
  if (text == "SEP") return Token::sep();
  int days = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, days);
  if (ec == std::errc() && ptr == end && days > 0) return Token::window(days);
  throw std::invalid_argument("unknown token '" + std::string(text) + "'");
}

int data_arity(const Token& t) {
  switch (t.kind) {
    case TokenKind::UnaryOp:
    case TokenKind::RollingUnaryOp:
      return 1;
    case TokenKind::BinaryOp:
    case TokenKind::RollingBinaryOp:
      return 2;
    default:
      return 0;
  }
}

int arity(const Token& t) {
  const bool rolling = t.kind == TokenKind::RollingUnaryOp ||
                       t.kind == TokenKind::RollingBinaryOp;
  return data_arity(t) + (rolling ? 1 : 0);
}

Vocabulary::Vocabulary(std::vector<int> windows) : windows_(std::move(windows)) {
  for (int w : windows_) {
    if (w <= 0) throw std::invalid_argument("window lengths must be positive");
  }
  for (int i = 0; i < kNumFeatures; ++i) tokens_.push_back(Token::feature(static_cast<Feature>(i)));
  for (int i = 0; i < kNumOps; ++i) tokens_.push_back(Token::op(static_cast<Op>(i)));
  for (int w : windows_) tokens_.push_back(Token::window(w));
  tokens_.push_back(Token::sep());
}

int Vocabulary::index_of(const Token& t) const {
  switch (t.kind) {
    case TokenKind::Feature:
      return t.value;
    case TokenKind::Sep:
      return sep_index();
    case TokenKind::TimeWindow: {
      auto it = std::find(windows_.begin(), windows_.end(), t.value);
      if (it == windows_.end()) return -1;
      return kNumFeatures + kNumOps + static_cast<int>(it - windows_.begin());
    }
    default:
      return kNumFeatures + t.value;
  }
}

// ---------------------------------------------------------------------------
// ExprTree

void ExprTree::apply(const Token& t) {
  const int id = static_cast<int>(nodes_.size());
  if (open_slot_) {
    if (t.kind != TokenKind::TimeWindow) {
      throw std::invalid_argument("open window slot requires a TimeWindow token, got " +
                                  token_text(t));
    }
    nodes_.push_back({t, {-1, -1, -1}});
    nodes_[open_slot_->node].children[open_slot_->arg] = id;
    open_slot_.reset();
    return;
  }
  switch (t.kind) {
    case TokenKind::TimeWindow:
      throw std::invalid_argument("window " + token_text(t) + " in a data position");
    case TokenKind::Sep:
      throw std::invalid_argument("SEP is not a tree token");
    case TokenKind::Feature:
      nodes_.push_back({t, {-1, -1, -1}});
      stack_.push_back(id);
      return;
    default:
      break;
  }
  const int n_data = data_arity(t);
  if (stack_size() < n_data) {
    throw std::invalid_argument("stack underflow at " + token_text(t));
  }
  ExprNode node{t, {-1, -1, -1}};
  for (int a = n_data - 1; a >= 0; --a) {
    node.children[a] = stack_.back();
    stack_.pop_back();
  }
  nodes_.push_back(node);
  stack_.push_back(id);
  if (arity(t) > n_data) open_slot_ = OpenSlot{id, n_data, SlotKind::Window};
}

std::vector<OpenSlot> ExprTree::open_slots() const {
  if (open_slot_) return {*open_slot_};
  return {};
}

int ExprTree::root() const {
  if (!is_terminal()) throw std::logic_error("root() on a non-terminal tree");
  return stack_.front();
}

int ExprTree::min_completion_cost() const {
  return completion_cost(stack_size(), open_slot_ ? 1 : 0);
}

int ExprTree::lookback_of(int n) const {
  const ExprNode& node = nodes_[n];
  int child_lb = 0;
  for (int a = 0; a < data_arity(node.token); ++a) {
    child_lb = std::max(child_lb, lookback_of(node.children[a]));
  }
  if (node.token.kind != TokenKind::RollingUnaryOp &&
      node.token.kind != TokenKind::RollingBinaryOp) {
    return child_lb;
  }
  const int wslot = node.children[data_arity(node.token)];
  if (wslot < 0) return child_lb;
  const int w = nodes_[wslot].token.value;
  switch (node.token.as_op()) {
    case Op::Ref:
    case Op::TsDelta:
    case Op::TsDiv:
    case Op::TsPctChange:
      return child_lb + w;
    default:
      return child_lb + w - 1;
  }
}

int ExprTree::lookback() const {
  int lb = 0;
  for (int r : stack_) lb = std::max(lb, lookback_of(r));
  return lb;
}

ExprTree ExprTree::from_nodes(std::vector<ExprNode> nodes, std::vector<int> roots) {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> parent_count(n, 0);
  std::optional<OpenSlot> open;
  for (int i = 0; i < n; ++i) {
    const Token& t = nodes[i].token;
    if (t.kind == TokenKind::Sep) throw std::invalid_argument("SEP node");
    const int ar = arity(t);
    for (int a = 0; a < 3; ++a) {
      const int c = nodes[i].children[a];
      if (a >= ar) {
        if (c != -1) throw std::invalid_argument("child beyond arity");
        continue;
      }
      const bool window_slot = a == data_arity(t);
      if (c == -1) {
        if (!window_slot || open) throw std::invalid_argument("unfilled data slot");
        open = OpenSlot{i, a, SlotKind::Window};
        continue;
      }
      if (c < 0 || c >= n) throw std::invalid_argument("child index out of range");
      const bool is_window = nodes[c].token.kind == TokenKind::TimeWindow;
      if (is_window != window_slot) {
        throw std::invalid_argument("window/data slot mismatch");
      }
      ++parent_count[c];
    }
  }
  for (int r : roots) {
    if (r < 0 || r >= n) throw std::invalid_argument("root index out of range");
    if (nodes[r].token.kind == TokenKind::TimeWindow) {
      throw std::invalid_argument("window in a data position");
    }
    ++parent_count[r];
  }
  for (int c : parent_count) {
    if (c != 1) throw std::invalid_argument("nodes do not form a forest");
  }
  if (open && (roots.empty() || roots.back() != open->node)) {
    throw std::invalid_argument("open window slot must belong to the stack top");
  }
  // Reject cycles: every node must be reachable from a root.
  std::vector<bool> seen(n, false);
  std::vector<int> todo(roots.begin(), roots.end());
  int visited = 0;
  while (!todo.empty()) {
    const int v = todo.back();
    todo.pop_back();
    if (seen[v]) throw std::invalid_argument("cycle in node graph");
    seen[v] = true;
    ++visited;
    for (int c : nodes[v].children) {
      if (c >= 0) todo.push_back(c);
    }
  }
  if (visited != n) throw std::invalid_argument("unreachable nodes");

  ExprTree tree;
  tree.nodes_ = std::move(nodes);
  tree.stack_ = std::move(roots);
  tree.open_slot_ = open;
  return tree;
}

namespace {

bool subtree_equal(const ExprTree& a, int na, const ExprTree& b, int nb) {
  if (na < 0 || nb < 0) return na == nb;
  const ExprNode& x = a.node(na);
  const ExprNode& y = b.node(nb);
  if (!(x.token == y.token)) return false;
  for (int i = 0; i < arity(x.token); ++i) {
    if (!subtree_equal(a, x.children[i], b, y.children[i])) return false;
  }
  return true;
}

void emit_rpn(const ExprTree& tree, int n, bool canonical, std::string& out) {
  const ExprNode& node = tree.node(n);
  const int n_data = data_arity(node.token);
  std::vector<std::string> parts;
  for (int a = 0; a < n_data; ++a) {
    std::string child;
    emit_rpn(tree, node.children[a], canonical, child);
    parts.push_back(std::move(child));
  }
  if (canonical && node.token.is_operator() && is_commutative(node.token.as_op())) {
    std::sort(parts.begin(), parts.end());
  }
  for (auto& p : parts) {
    out += p;
    out += ' ';
  }
  if (arity(node.token) > n_data) {
    const int w = node.children[n_data];
    if (w < 0) throw std::logic_error("printing a tree with an open window slot");
    out += token_text(tree.node(w).token);
    out += ' ';
  }
  out += token_text(node.token);
}

std::string print(const ExprTree& tree, bool canonical) {
  if (!tree.is_terminal()) throw std::invalid_argument("cannot print a non-terminal tree");
  std::string out;
  emit_rpn(tree, tree.root(), canonical, out);
  return out;
}

void emit_generation(const ExprTree& tree, int n, std::vector<Token>& out) {
  const ExprNode& node = tree.node(n);
  const int n_data = data_arity(node.token);
  for (int a = 0; a < n_data; ++a) emit_generation(tree, node.children[a], out);
  out.push_back(node.token);
  if (arity(node.token) > n_data && node.children[n_data] >= 0) {
    out.push_back(tree.node(node.children[n_data]).token);
  }
}

}  // namespace

bool structurally_equal(const ExprTree& a, const ExprTree& b) {
  if (a.stack_size() != b.stack_size() || a.size() != b.size()) return false;
  for (int i = 0; i < a.stack_size(); ++i) {
    if (!subtree_equal(a, a.stack()[i], b, b.stack()[i])) return false;
  }
  return true;
}

std::string to_rpn(const ExprTree& tree) { return print(tree, false); }

std::string canonical_rpn(const ExprTree& tree) { return print(tree, true); }

std::vector<Token> generation_order(const ExprTree& tree) {
  std::vector<Token> out;
  for (int r : tree.stack()) emit_generation(tree, r, out);
  return out;
}

ExprTree parse_rpn(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<Token> tokens;
  for (std::string word; in >> word;) tokens.push_back(token_from_text(word));
  if (tokens.empty()) throw std::invalid_argument("empty expression");

  // On disk the window precedes its rolling operator; in generation order it
  // follows it.
  ExprTree tree;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.kind == TokenKind::Sep) throw std::invalid_argument("SEP inside expression");
    if (t.kind == TokenKind::TimeWindow) {
      const bool next_rolling =
          i + 1 < tokens.size() && (tokens[i + 1].kind == TokenKind::RollingUnaryOp ||
                                    tokens[i + 1].kind == TokenKind::RollingBinaryOp);
      if (!next_rolling) {
        throw std::invalid_argument("window " + token_text(t) + " in a data position");
      }
      tree.apply(tokens[i + 1]);
      tree.apply(t);
      ++i;
      continue;
    }
    if (t.kind == TokenKind::RollingUnaryOp || t.kind == TokenKind::RollingBinaryOp) {
      throw std::invalid_argument("rolling operator " + token_text(t) + " without a window");
    }
    tree.apply(t);
  }
  if (tree.stack_size() != 1) {
    throw std::invalid_argument("leftover stack items: " + std::to_string(tree.stack_size()));
  }
  return tree;
}

std::vector<bool> legal_actions(const ExprTree& state, int remaining_budget,
                                const Vocabulary& vocab) {
  std::vector<bool> mask(vocab.size(), false);
  const int k = state.stack_size();
  const bool pending = state.has_open_slot();
  for (int i = 0; i < vocab.size(); ++i) {
    const Token& t = vocab.token(i);
    if (pending) {
      mask[i] = t.kind == TokenKind::TimeWindow &&
                1 + completion_cost(k, 0) <= remaining_budget;
      continue;
    }
    int k_after = k;
    int pending_after = 0;
    switch (t.kind) {
      case TokenKind::Sep:
        mask[i] = state.is_terminal();
        continue;
      case TokenKind::TimeWindow:
        continue;
      case TokenKind::Feature:
        k_after = k + 1;
        break;
      case TokenKind::UnaryOp:
        if (k < 1) continue;
        break;
      case TokenKind::BinaryOp:
        if (k < 2) continue;
        k_after = k - 1;
        break;
      case TokenKind::RollingUnaryOp:
        if (k < 1) continue;
        pending_after = 1;
        break;
      case TokenKind::RollingBinaryOp:
        if (k < 2) continue;
        k_after = k - 1;
        pending_after = 1;
        break;
    }
    mask[i] = 1 + completion_cost(k_after, pending_after) <= remaining_budget;
  }
  return mask;
}

std::vector<RelationEdge> relation_edges(const ExprTree& tree) {
  std::vector<RelationEdge> edges;
  for (int p = 0; p < tree.size(); ++p) {
    const ExprNode& node = tree.node(p);
    const Token& t = node.token;
    for (int a = 0; a < arity(t); ++a) {
      const int c = node.children[a];
      if (c < 0) continue;
      Relation r = Relation::UnaryOperand;
      switch (t.kind) {
        case TokenKind::UnaryOp:
          r = Relation::UnaryOperand;
          break;
        case TokenKind::BinaryOp:
          if (is_commutative(t.as_op())) {
            r = Relation::CommutativeOperand;
          } else {
            r = a == 0 ? Relation::NonCommutativeLeft : Relation::NonCommutativeRight;
          }
          break;
        default:
          r = a == data_arity(t) ? Relation::RollingTimeOperand
                                 : Relation::RollingFeatureOperand;
          break;
      }
      edges.push_back({p, c, r});
    }
  }
  return edges;
}

}  // namespace gfnalpha
