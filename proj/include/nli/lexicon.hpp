#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nli/errors.hpp"
#include "nli/relation.hpp"

namespace nli {

enum class Quantifier : std::uint8_t { All, Some, No, Most, Two, Three };

inline constexpr std::array<Quantifier, 6> kAllQuantifiers = {
    Quantifier::All, Quantifier::Some, Quantifier::No,
    Quantifier::Most, Quantifier::Two, Quantifier::Three};

inline std::string_view name(Quantifier q) {
  switch (q) {
    case Quantifier::All: return "all";
    case Quantifier::Some: return "some";
    case Quantifier::No: return "no";
    case Quantifier::Most: return "most";
    case Quantifier::Two: return "two";
    case Quantifier::Three: return "three";
  }
  return "?";
}

inline std::optional<Quantifier> quantifier_from_name(std::string_view s) {
  for (Quantifier q : kAllQuantifiers)
    if (name(q) == s) return q;
  return std::nullopt;
}

inline constexpr std::string_view kNotToken = "not";

/// One `<word> <relation> <word>` line of the lexicon file.
struct LexicalEntry {
  std::string left;
  Relation relation;
  std::string right;
};

// A literal over predicate membership of a single entity: "the entity is
// (or is not) in the extension of predicate `pred`".
struct Literal {
  int pred;
  bool positive;
};

// Predicate inventory plus the lexical relations among predicates.
//
// Every entry is compiled into universally quantified clauses over the
// membership type of a single entity (p ⊏ q gives ¬p ∨ q, p | q gives
// ¬p ∨ ¬q, ...) plus existential witnesses (strictness of ⊏, a point
// outside both sides of |, ...). Every predicate is additionally required
// to be neither empty nor universal. Because the clauses are binary, the
// question "can some entity have membership type T" is 2-SAT, and a model
// exists iff every witness is individually satisfiable: the model is the
// disjoint union of one witness entity per requirement.
class LexicalRelationTable {
 public:
  LexicalRelationTable() = default;

  static LexicalRelationTable from_entries(std::vector<std::string> words,
                                           std::vector<LexicalEntry> entries) {
    LexicalRelationTable t;
    for (auto& w : words) t.add_word(w);
    for (auto& e : entries) {
      t.add_word(e.left);
      t.add_word(e.right);
    }
    t.entries_ = std::move(entries);
    t.compile();
    return t;
  }

  static LexicalRelationTable parse(std::istream& in) {
    std::vector<LexicalEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string f;
      while (std::getline(ss, f, '\t')) {
        auto b = f.find_first_not_of(' ');
        auto e = f.find_last_not_of(' ');
        fields.push_back(b == std::string::npos ? std::string{} : f.substr(b, e - b + 1));
      }
      if (fields.size() != 3 || fields[0].empty() || fields[2].empty())
        throw LexiconError("lexicon line " + std::to_string(lineno) +
                           ": expected <word>\\t<relation>\\t<word>");
      auto r = relation_from_symbol(fields[1]);
      if (!r)
        throw LexiconError("lexicon line " + std::to_string(lineno) + ": unknown relation symbol '" +
                           fields[1] + "'");
      if (fields[0] == fields[2] && *r != Relation::Equivalence)
        throw LexiconError("lexicon line " + std::to_string(lineno) + ": word related to itself");
      entries.push_back({fields[0], *r, fields[2]});
    }
    return from_entries({}, std::move(entries));
  }

  static LexicalRelationTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LexiconError("cannot open lexicon file: " + path);
    return parse(in);
  }

  const std::vector<std::string>& words() const { return words_; }
  const std::vector<LexicalEntry>& entries() const { return entries_; }
  std::size_t size() const { return words_.size(); }

  bool contains(std::string_view w) const { return index_.count(std::string(w)) != 0; }

  int index(std::string_view w) const {
    auto it = index_.find(std::string(w));
    if (it == index_.end()) throw LexiconError("unknown predicate: " + std::string(w));
    return it->second;
  }

  /// Strongest relation between the two predicates entailed by the table.
  Relation relation(std::string_view p, std::string_view q) const {
    return derived_[static_cast<std::size_t>(index(p)) * words_.size() +
                    static_cast<std::size_t>(index(q))];
  }
  Relation relation(int p, int q) const {
    return derived_[static_cast<std::size_t>(p) * words_.size() + static_cast<std::size_t>(q)];
  }

  bool independent(std::string_view p, std::string_view q) const {
    return p != q && relation(p, q) == Relation::Independence;
  }

  /// Can a single entity have all of the given memberships?
  bool satisfiable(const std::vector<Literal>& assumptions) const {
    const int n = static_cast<int>(words_.size());
    // Implication graph over 2n nodes: node 2i = "i in", 2i+1 = "i out".
    std::vector<std::vector<int>> adj = graph_;
    for (const auto& a : assumptions) {
      int lit = 2 * a.pred + (a.positive ? 0 : 1);
      adj[static_cast<std::size_t>(lit ^ 1)].push_back(lit);  // ¬l → l
    }
    auto comp = strongly_connected(adj);
    for (int i = 0; i < n; ++i)
      if (comp[static_cast<std::size_t>(2 * i)] == comp[static_cast<std::size_t>(2 * i + 1)])
        return false;
    return true;
  }

 private:
  void add_word(const std::string& w) {
    if (index_.emplace(w, static_cast<int>(words_.size())).second) words_.push_back(w);
  }

  void add_clause(int lit_a, int lit_b) {
    // (a ∨ b) ≡ (¬a → b) ∧ (¬b → a)
    graph_[static_cast<std::size_t>(lit_a ^ 1)].push_back(lit_b);
    graph_[static_cast<std::size_t>(lit_b ^ 1)].push_back(lit_a);
  }

  static int pos(int p) { return 2 * p; }
  static int neg(int p) { return 2 * p + 1; }

  void compile() {
    const int n = static_cast<int>(words_.size());
    graph_.assign(static_cast<std::size_t>(2 * n), {});
    std::vector<std::vector<Literal>> witnesses;
    for (int p = 0; p < n; ++p) {
      witnesses.push_back({{p, true}});
      witnesses.push_back({{p, false}});
    }
    for (const auto& e : entries_) {
      int p = index(e.left), q = index(e.right);
      switch (e.relation) {
        case Relation::Equivalence:
          add_clause(neg(p), pos(q));
          add_clause(neg(q), pos(p));
          break;
        case Relation::Forward:
          add_clause(neg(p), pos(q));
          witnesses.push_back({{p, false}, {q, true}});
          break;
        case Relation::Reverse:
          add_clause(neg(q), pos(p));
          witnesses.push_back({{q, false}, {p, true}});
          break;
        case Relation::Alternation:
          add_clause(neg(p), neg(q));
          witnesses.push_back({{p, false}, {q, false}});
          break;
        case Relation::Negation:
          add_clause(neg(p), neg(q));
          add_clause(pos(p), pos(q));
          break;
        case Relation::Cover:
          add_clause(pos(p), pos(q));
          witnesses.push_back({{p, true}, {q, true}});
          break;
        case Relation::Independence:
          for (bool a : {true, false})
            for (bool b : {true, false}) witnesses.push_back({{p, a}, {q, b}});
          break;
      }
    }
    for (const auto& w : witnesses) {
      if (!satisfiable(w)) {
        std::string what;
        for (const auto& l : w) what += (l.positive ? " " : " not-") + words_[static_cast<std::size_t>(l.pred)];
        throw LexiconError("inconsistent lexicon: no entity can be" + what);
      }
    }
    derived_.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), Relation::Independence);
    for (int p = 0; p < n; ++p) {
      for (int q = 0; q < n; ++q) {
        bool both = satisfiable({{p, true}, {q, true}});
        bool only_p = satisfiable({{p, true}, {q, false}});
        bool only_q = satisfiable({{p, false}, {q, true}});
        bool neither = satisfiable({{p, false}, {q, false}});
        derived_[static_cast<std::size_t>(p * n + q)] = relation_from_regions(both, only_p, only_q, neither);
      }
    }
    for (const auto& e : entries_) {
      if (relation(e.left, e.right) != e.relation)
        throw LexiconError("inconsistent lexicon: " + e.left + " " + symbol(e.relation) + " " + e.right +
                           " conflicts with derived relation " + symbol(relation(e.left, e.right)));
    }
  }

  static std::vector<int> strongly_connected(const std::vector<std::vector<int>>& adj) {
    // Iterative Tarjan.
    const int n = static_cast<int>(adj.size());
    std::vector<int> idx(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
        comp(static_cast<std::size_t>(n), -1);
    std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    std::vector<std::pair<int, std::size_t>> call;
    int counter = 0, ncomp = 0;
    for (int s = 0; s < n; ++s) {
      if (idx[static_cast<std::size_t>(s)] != -1) continue;
      call.push_back({s, 0});
      while (!call.empty()) {
        auto& [v, child] = call.back();
        auto uv = static_cast<std::size_t>(v);
        if (child == 0 && idx[uv] == -1) {
          idx[uv] = low[uv] = counter++;
          stack.push_back(v);
          on_stack[uv] = 1;
        }
        if (child < adj[uv].size()) {
          int w = adj[uv][child++];
          auto uw = static_cast<std::size_t>(w);
          if (idx[uw] == -1) {
            call.push_back({w, 0});
          } else if (on_stack[uw]) {
            low[uv] = std::min(low[uv], idx[uw]);
          }
          continue;
        }
        if (low[uv] == idx[uv]) {
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = 0;
            comp[static_cast<std::size_t>(w)] = ncomp;
          } while (w != v);
          ++ncomp;
        }
        int finished = v;
        call.pop_back();
        if (!call.empty()) {
          auto up = static_cast<std::size_t>(call.back().first);
          low[up] = std::min(low[up], low[static_cast<std::size_t>(finished)]);
        }
      }
    }
    return comp;
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  std::vector<LexicalEntry> entries_;
  std::vector<std::vector<int>> graph_;
  std::vector<Relation> derived_;
};

}  // namespace nli
