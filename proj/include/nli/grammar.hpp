#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "nli/errors.hpp"
#include "nli/lexicon.hpp"

namespace nli {

/// A predicate occurrence, optionally under `not`.
struct Predicate {
  std::string name;
  bool negated = false;

  auto operator<=>(const Predicate&) const = default;
};

// (quantifier arg1) arg2 -- the only sentence shape of the language.
struct Sentence {
  Quantifier quantifier;
  Predicate arg1;
  Predicate arg2;

  auto operator<=>(const Sentence&) const = default;
};

inline std::string serialize(const Predicate& p) {
  return p.negated ? "(not " + p.name + ")" : p.name;
}

/// Canonical surface form, e.g. "(no puppy) (not bark)".
inline std::string serialize(const Sentence& s) {
  return "(" + std::string(name(s.quantifier)) + " " + serialize(s.arg1) + ") " + serialize(s.arg2);
}

inline std::ostream& operator<<(std::ostream& os, const Sentence& s) { return os << serialize(s); }

namespace detail {

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    if (ch == '(' || ch == ')') {
      flush();
      out.emplace_back(1, ch);
    } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      flush();
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

class SentenceParser {
 public:
  SentenceParser(std::string_view text, const LexicalRelationTable* lex)
      : text_(text), tokens_(tokenize(text)), lex_(lex) {}

  Sentence run() {
    expect("(");
    auto q = quantifier_from_name(next("quantifier"));
    if (!q) fail("expected a quantifier after '('");
    Predicate a1 = argument();
    expect(")");
    Predicate a2 = argument();
    if (pos_ != tokens_.size()) fail("trailing tokens");
    return {*q, std::move(a1), std::move(a2)};
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError("cannot parse sentence \"" + std::string(text_) + "\": " + why);
  }

  const std::string& next(const char* what) {
    if (pos_ >= tokens_.size()) fail(std::string("unexpected end of input, expected ") + what);
    return tokens_[pos_++];
  }

  void expect(const char* tok) {
    if (next(tok) != tok) fail(std::string("expected '") + tok + "'");
  }

  std::string word() {
    const std::string& w = next("a predicate");
    if (w == "(" || w == ")") fail("unbalanced parentheses");
    if (w == kNotToken) fail("negation is only allowed directly around a predicate");
    if (quantifier_from_name(w)) fail("quantifier '" + w + "' in argument position");
    if (lex_ && !lex_->contains(w)) fail("unknown token '" + w + "'");
    return w;
  }

  Predicate argument() {
    if (pos_ < tokens_.size() && tokens_[pos_] == "(") {
      ++pos_;
      if (next("not") != kNotToken) fail("only (not <predicate>) may be parenthesized in argument position");
      Predicate p{word(), true};
      expect(")");
      return p;
    }
    return {word(), false};
  }

  std::string_view text_;
  std::vector<std::string> tokens_;
  const LexicalRelationTable* lex_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Whitespace-insensitive parser for the parenthesized surface form.
/// With a lexicon, predicate names are checked against it.
inline Sentence parse_sentence(std::string_view text, const LexicalRelationTable* lex = nullptr) {
  return detail::SentenceParser(text, lex).run();
}

inline Sentence parse_sentence(std::string_view text, const LexicalRelationTable& lex) {
  return parse_sentence(text, &lex);
}

// ---------------------------------------------------------------------------
// Composition trees

/// Which composition function a node uses in the untied model.
enum class CompositionContext : std::uint8_t { Negation = 0, QuantifierFirst = 1, QuantifierSecond = 2 };

inline constexpr int kNumContexts = 3;

inline std::string_view name(CompositionContext c) {
  switch (c) {
    case CompositionContext::Negation: return "negation";
    case CompositionContext::QuantifierFirst: return "q-first-arg";
    case CompositionContext::QuantifierSecond: return "q-second-arg";
  }
  return "?";
}

struct TreeNode {
  std::string token;  // leaves only
  int left = -1;
  int right = -1;
  CompositionContext context = CompositionContext::Negation;  // internal nodes only

  bool is_leaf() const { return left < 0; }
};

// Binary tree stored in post-order: children always precede their parent
// and the root is the last node.
struct CompositionTree {
  std::vector<TreeNode> nodes;

  int root() const { return static_cast<int>(nodes.size()) - 1; }

  std::vector<std::string> leaves() const {
    std::vector<std::string> out;
    for (const auto& n : nodes)
      if (n.is_leaf()) out.push_back(n.token);
    return out;
  }

  int depth() const { return depth_of(root()); }

  /// Bracketed rendering, e.g. "((all (not dog)) bark)".
  std::string to_string() const { return render(root()); }

 private:
  int depth_of(int i) const {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 1;
    return 1 + std::max(depth_of(n.left), depth_of(n.right));
  }
  std::string render(int i) const {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return n.token;
    return "(" + render(n.left) + " " + render(n.right) + ")";
  }
};

namespace detail {
inline int push_leaf(CompositionTree& t, std::string token) {
  t.nodes.push_back({std::move(token), -1, -1, CompositionContext::Negation});
  return static_cast<int>(t.nodes.size()) - 1;
}
inline int push_node(CompositionTree& t, int l, int r, CompositionContext c) {
  t.nodes.push_back({{}, l, r, c});
  return static_cast<int>(t.nodes.size()) - 1;
}
inline int push_argument(CompositionTree& t, const Predicate& p) {
  if (!p.negated) return push_leaf(t, p.name);
  int n = push_leaf(t, std::string(kNotToken));
  int w = push_leaf(t, p.name);
  return push_node(t, n, w, CompositionContext::Negation);
}
}  // namespace detail

inline CompositionTree to_tree(const Sentence& s) {
  CompositionTree t;
  int q = detail::push_leaf(t, std::string(name(s.quantifier)));
  int a1 = detail::push_argument(t, s.arg1);
  int qp = detail::push_node(t, q, a1, CompositionContext::QuantifierFirst);
  int a2 = detail::push_argument(t, s.arg2);
  detail::push_node(t, qp, a2, CompositionContext::QuantifierSecond);
  return t;
}

}  // namespace nli
