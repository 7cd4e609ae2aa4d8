#pragma once

#include <array>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "nli/errors.hpp"
#include "nli/grammar.hpp"
#include "nli/lexicon.hpp"
#include "nli/relation.hpp"

namespace nli {

/// Extensions as bitmasks over a universe of at most 64 entities.
using Extensions = std::map<std::string, std::uint64_t>;

namespace detail {
constexpr bool quantifier_holds(Quantifier q, int both, int only_first) {
  switch (q) {
    case Quantifier::All: return only_first == 0;
    case Quantifier::Some: return both > 0;
    case Quantifier::No: return both == 0;
    case Quantifier::Most: return both > only_first;
    case Quantifier::Two: return both >= 2;
    case Quantifier::Three: return both >= 3;
  }
  return false;
}
}  // namespace detail

/// Truth of a sentence in one model. Negated predicates denote the
/// complement within `universe`.
inline bool eval_sentence(const Sentence& s, const Extensions& ext, std::uint64_t universe) {
  auto lookup = [&](const Predicate& p) {
    auto it = ext.find(p.name);
    if (it == ext.end()) throw DataError("no extension for predicate '" + p.name + "'");
    std::uint64_t set = it->second & universe;
    return p.negated ? (universe & ~set) : set;
  };
  const std::uint64_t x = lookup(s.arg1), y = lookup(s.arg2);
  return detail::quantifier_holds(s.quantifier, std::popcount(x & y), std::popcount(x & ~y));
}

/// Which joint truth values (A, B) occur across the admissible models.
struct TruthPatternSet {
  bool tt = false, tf = false, ft = false, ff = false;

  bool empty() const { return !(tt || tf || ft || ff); }
  bool left_degenerate() const { return !(tt || tf) || !(ft || ff); }
  bool right_degenerate() const { return !(tt || ft) || !(tf || ff); }
  bool degenerate() const { return empty() || left_degenerate() || right_degenerate(); }

  // x = models of A, y = models of B, D = all models.
  Relation relation() const { return relation_from_regions(tt, tf, ft, ff); }

  TruthPatternSet& operator|=(const TruthPatternSet& o) {
    tt |= o.tt;
    tf |= o.tf;
    ft |= o.ft;
    ff |= o.ff;
    return *this;
  }
  bool operator==(const TruthPatternSet&) const = default;
};

class DegenerateSentenceError : public DataError {
 public:
  using DataError::DataError;
};

struct ModelCheckResult {
  TruthPatternSet patterns;
  bool degenerate = false;
  Relation relation = Relation::Independence;  // meaningful only when !degenerate
};

inline const std::vector<int>& default_domain_sizes() {
  static const std::vector<int> sizes = {1, 2, 3, 4, 5, 6, 7, 8};
  return sizes;
}

// Bounded model checker for sentence pairs.
//
// Models assign every predicate of the pair a non-empty, non-universal
// extension; the pairwise set relation between any two of them must equal
// the lexicon's derived relation unless that is #, and every entity must
// have a membership type the lexicon allows. Sentences only look at
// cardinalities of Venn regions, so models are enumerated up to
// permutation of entities: a model of size n is a vector of entity counts
// over the allowed regions summing to n.
//
// Results are cached by the pair's shape after renaming predicates, so a
// checker instance is not thread-safe; use one per thread.
class ModelChecker {
 public:
  explicit ModelChecker(const LexicalRelationTable& lex, std::vector<int> domain_sizes = default_domain_sizes())
      : lex_(&lex), sizes_(std::move(domain_sizes)) {}

  ModelCheckResult check(const Sentence& a, const Sentence& b) {
    Shape shape = make_shape(a, b);
    auto it = cache_.find(shape.key);
    if (it != cache_.end()) return it->second;
    ModelCheckResult res;
    for (int n : sizes_) res.patterns |= enumerate(shape, n);
    res.degenerate = res.patterns.degenerate();
    if (!res.degenerate) res.relation = res.patterns.relation();
    cache_.emplace(shape.key, res);
    return res;
  }

  std::size_t cache_size() const { return cache_.size(); }

 private:
  struct Atom {
    int pred;
    bool negated;
  };
  struct Shape {
    int k = 0;
    std::array<Quantifier, 2> quantifier{};
    std::array<Atom, 4> atoms{};  // a.arg1 a.arg2 b.arg1 b.arg2
    std::vector<int> regions;     // allowed membership types over the k predicates
    std::vector<Relation> pairwise;  // k*k derived relations
    std::string key;
  };

  Shape make_shape(const Sentence& a, const Sentence& b) const {
    Shape s;
    std::vector<std::string> names;
    auto atom = [&](const Predicate& p) {
      lex_->index(p.name);
      auto it = std::find(names.begin(), names.end(), p.name);
      int idx = static_cast<int>(it - names.begin());
      if (it == names.end()) names.push_back(p.name);
      return Atom{idx, p.negated};
    };
    s.atoms = {atom(a.arg1), atom(a.arg2), atom(b.arg1), atom(b.arg2)};
    s.quantifier = {a.quantifier, b.quantifier};
    s.k = static_cast<int>(names.size());
    s.pairwise.resize(static_cast<std::size_t>(s.k * s.k));
    for (int i = 0; i < s.k; ++i)
      for (int j = 0; j < s.k; ++j)
        s.pairwise[static_cast<std::size_t>(i * s.k + j)] =
            i == j ? Relation::Equivalence
                   : lex_->relation(names[static_cast<std::size_t>(i)], names[static_cast<std::size_t>(j)]);
    for (int r = 0; r < (1 << s.k); ++r) {
      std::vector<Literal> lits;
      for (int i = 0; i < s.k; ++i) lits.push_back({lex_->index(names[static_cast<std::size_t>(i)]), ((r >> i) & 1) != 0});
      if (lex_->satisfiable(lits)) s.regions.push_back(r);
    }
    s.key.push_back(static_cast<char>('0' + s.k));
    for (auto q : s.quantifier) s.key.push_back(static_cast<char>('a' + static_cast<int>(q)));
    for (auto at : s.atoms) {
      s.key.push_back(static_cast<char>('0' + at.pred));
      s.key.push_back(at.negated ? '-' : '+');
    }
    for (auto r : s.pairwise) s.key.push_back(symbol(r));
    for (int r : s.regions) s.key.push_back(static_cast<char>('A' + r));
    return s;
  }

  TruthPatternSet enumerate(const Shape& s, int n) const {
    TruthPatternSet out;
    const std::size_t m = s.regions.size();
    if (m == 0) return out;
    std::vector<int> counts(m, 0);
    // Enumerate compositions of n into m non-negative parts.
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
      if (i + 1 == m) {
        counts[i] = left;
        visit(s, counts, n, out);
        return;
      }
      for (int c = 0; c <= left; ++c) {
        counts[i] = c;
        rec(i + 1, left - c);
      }
    };
    rec(0, n);
    return out;
  }

  void visit(const Shape& s, const std::vector<int>& counts, int n, TruthPatternSet& out) const {
    // Per-predicate cardinality and pairwise region occupancy.
    std::array<int, 4> size{};
    std::array<std::array<std::array<int, 4>, 4>, 4> cell{};  // [i][j][type] with type = 2*in_i + in_j
    for (std::size_t t = 0; t < counts.size(); ++t) {
      const int c = counts[t];
      if (c == 0) continue;
      const int r = s.regions[t];
      for (int i = 0; i < s.k; ++i) {
        const int in_i = (r >> i) & 1;
        size[static_cast<std::size_t>(i)] += in_i * c;
        for (int j = 0; j < s.k; ++j) {
          const int in_j = (r >> j) & 1;
          cell[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(2 * in_i + in_j)] += c;
        }
      }
    }
    for (int i = 0; i < s.k; ++i)
      if (size[static_cast<std::size_t>(i)] == 0 || size[static_cast<std::size_t>(i)] == n) return;
    for (int i = 0; i < s.k; ++i) {
      for (int j = i + 1; j < s.k; ++j) {
        Relation want = s.pairwise[static_cast<std::size_t>(i * s.k + j)];
        if (want == Relation::Independence) continue;
        const auto& c = cell[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (relation_from_regions(c[3] > 0, c[2] > 0, c[1] > 0, c[0] > 0) != want) return;
      }
    }
    auto holds = [&](Quantifier q, Atom x, Atom y) {
      int both = 0, only_x = 0;
      for (std::size_t t = 0; t < counts.size(); ++t) {
        const int r = s.regions[t];
        const bool in_x = (((r >> x.pred) & 1) != 0) != x.negated;
        const bool in_y = (((r >> y.pred) & 1) != 0) != y.negated;
        if (in_x && in_y) both += counts[t];
        if (in_x && !in_y) only_x += counts[t];
      }
      return detail::quantifier_holds(q, both, only_x);
    };
    const bool ta = holds(s.quantifier[0], s.atoms[0], s.atoms[1]);
    const bool tb = holds(s.quantifier[1], s.atoms[2], s.atoms[3]);
    if (ta && tb) out.tt = true;
    if (ta && !tb) out.tf = true;
    if (!ta && tb) out.ft = true;
    if (!ta && !tb) out.ff = true;
  }

  const LexicalRelationTable* lex_;
  std::vector<int> sizes_;
  std::map<std::string, ModelCheckResult> cache_;
};

// Relation between two sentences read off the truth-value patterns they
// jointly take across all admissible models. Throws on a sentence that is
// true in every model or false in every model.
inline Relation label_pair_modelcheck(const Sentence& a, const Sentence& b, const LexicalRelationTable& lex,
                                      const std::vector<int>& domain_sizes = default_domain_sizes()) {
  ModelChecker checker(lex, domain_sizes);
  auto res = checker.check(a, b);
  if (res.degenerate)
    throw DegenerateSentenceError("degenerate sentence in pair " + serialize(a) + " / " + serialize(b));
  return res.relation;
}

}  // namespace nli
