#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nli/errors.hpp"
#include "nli/grammar.hpp"
#include "nli/lexicon.hpp"
#include "nli/relation.hpp"

namespace nli {

enum class ArgPosition : std::uint8_t { First, Second };

/// Natural-logic derivation outside the supported fragment.
class NatlogError : public DataError {
 public:
  using DataError::DataError;
};

namespace detail {
using R = Relation;

// Projectivity signatures, columns in relation order ⊏ ⊐ ≡ | ^ ⌣ #.
// Rows: one per (quantifier, position). The other argument is assumed
// non-empty, non-universal and independent of the substituted pair.
inline constexpr std::array<std::array<std::array<R, kNumRelations>, 2>, 6> projectivity = {{
    // all: downward / upward
    {{{B, F, E, I, A, A, I}, {F, B, E, A, A, I, I}}},
    // some: upward / upward
    {{{F, B, E, I, C, C, I}, {F, B, E, I, C, C, I}}},
    // no: downward / downward
    {{{B, F, E, I, A, A, I}, {B, F, E, I, A, A, I}}},
    // most: non-monotone / upward
    {{{I, I, E, I, I, I, I}, {F, B, E, A, A, I, I}}},
    // two: upward / upward
    {{{F, B, E, I, I, I, I}, {F, B, E, I, I, I, I}}},
    // three: upward / upward
    {{{F, B, E, I, I, I, I}, {F, B, E, I, I, I, I}}},
}};

// Q1(x, y) vs Q2(x, y); rows Q1, columns Q2 in quantifier order
// all some no most two three.
inline constexpr std::array<std::array<R, 6>, 6> quantifier_same = {{
    {E, F, A, F, I, I},
    {B, E, N, B, B, B},
    {A, N, E, A, A, A},
    {B, F, A, E, I, I},
    {I, F, A, I, E, B},
    {I, F, A, I, F, E},
}};

// Q1(x, y) vs Q2(x, not y).
inline constexpr std::array<std::array<R, 6>, 6> quantifier_cross = {{
    {A, N, E, A, A, A},
    {N, C, B, C, I, I},
    {E, F, A, F, I, I},
    {A, C, B, A, I, I},
    {A, I, I, I, I, I},
    {A, I, I, I, I, I},
}};
}  // namespace detail

/// Relation between Q(.., x, ..) and Q(.., y, ..) given x r y in the
/// given argument position.
constexpr Relation project_quantifier(Quantifier q, ArgPosition pos, Relation r) {
  return detail::projectivity[static_cast<int>(q)][static_cast<int>(pos)][index_of(r)];
}

inline Relation project_quantifier(std::string_view quantifier, ArgPosition pos, Relation r) {
  auto q = quantifier_from_name(quantifier);
  if (!q) throw NatlogError("unsupported quantifier: " + std::string(quantifier));
  return project_quantifier(*q, pos, r);
}

/// Relation between `a x y` and `b x y`, where either side's second
/// argument may carry a negation (inner_negated_*) and the arguments
/// are otherwise identical and independent.
constexpr Relation quantifier_substitution(Quantifier a, bool a_inner_negated, Quantifier b,
                                           bool b_inner_negated) {
  const int i = static_cast<int>(a), j = static_cast<int>(b);
  return a_inner_negated == b_inner_negated ? detail::quantifier_same[i][j]
                                            : detail::quantifier_cross[i][j];
}

/// Lexical relation between two predicate occurrences; negation is applied
/// by joining with ^, which loses no information.
inline Relation predicate_relation(const Predicate& a, const Predicate& b, const LexicalRelationTable& lex) {
  Relation base = a.name == b.name ? Relation::Equivalence : lex.relation(a.name, b.name);
  if (a.negated && b.negated) return project_negation(base);
  if (a.negated) return join(Relation::Negation, base);
  if (b.negated) return join(base, Relation::Negation);
  return base;
}

namespace detail {

// Sentence state with any second-argument negation moved into the
// quantifier: (Q x) (not y) is handled as the compound quantifier "Q..not".
struct NatlogState {
  Quantifier quantifier;
  bool inner_negated;
  Predicate first;
  std::string second;
};

inline NatlogState normalize(const Sentence& s) {
  return {s.quantifier, s.arg2.negated, s.arg1, s.arg2.name};
}

enum class Edit { Quantifier, First, Second };

inline bool arguments_independent(const Predicate& first, const std::string& second,
                                  const LexicalRelationTable& lex) {
  return lex.independent(first.name, second);
}

// Relation contributed by applying `edit` to `state` toward `target`;
// nullopt when the edit leaves the supported fragment.
inline std::optional<Relation> apply_edit(NatlogState& state, const NatlogState& target, Edit edit,
                                          const LexicalRelationTable& lex) {
  Relation r = Relation::Equivalence;
  switch (edit) {
    case Edit::Quantifier:
      if (!arguments_independent(state.first, state.second, lex)) return std::nullopt;
      r = quantifier_substitution(state.quantifier, state.inner_negated, target.quantifier,
                                  target.inner_negated);
      state.quantifier = target.quantifier;
      state.inner_negated = target.inner_negated;
      break;
    case Edit::First:
      if (!arguments_independent(state.first, state.second, lex) ||
          !arguments_independent(target.first, state.second, lex))
        return std::nullopt;
      r = project_quantifier(state.quantifier, ArgPosition::First,
                             predicate_relation(state.first, target.first, lex));
      state.first = target.first;
      break;
    case Edit::Second: {
      if (!arguments_independent(state.first, state.second, lex) ||
          !arguments_independent(state.first, target.second, lex))
        return std::nullopt;
      Relation lexical = lex.relation(state.second, target.second);
      if (state.inner_negated) lexical = project_negation(lexical);
      r = project_quantifier(state.quantifier, ArgPosition::Second, lexical);
      state.second = target.second;
      break;
    }
  }
  return r;
}

}  // namespace detail

// Labels a sentence pair the way a natural-logic engine would: split the
// difference into atomic edits (quantifier substitution, first-argument
// substitution, second-argument substitution; negation counts as a
// substitution of `p` by `not p`), project each edit's lexical relation
// through its context and fold the per-edit relations with join.
//
// Every ordering of the edits is a valid derivation. Joins can only lose
// information, so the most specific relation over all orderings is
// returned; two orderings yielding different specific relations would
// mean a broken table and raise NatlogError.
inline Relation label_pair_natlog(const Sentence& a, const Sentence& b, const LexicalRelationTable& lex) {
  for (const Predicate* p : {&a.arg1, &a.arg2, &b.arg1, &b.arg2}) lex.index(p->name);
  using detail::Edit;
  const detail::NatlogState start = detail::normalize(a);
  const detail::NatlogState target = detail::normalize(b);

  std::vector<Edit> edits;
  if (start.quantifier != target.quantifier || start.inner_negated != target.inner_negated)
    edits.push_back(Edit::Quantifier);
  if (start.first != target.first) edits.push_back(Edit::First);
  if (start.second != target.second) edits.push_back(Edit::Second);
  if (edits.empty()) return Relation::Equivalence;

  std::sort(edits.begin(), edits.end());
  std::optional<Relation> best;
  bool any_derivation = false;
  do {
    detail::NatlogState state = start;
    Relation acc = Relation::Equivalence;
    bool ok = true;
    for (Edit e : edits) {
      auto r = detail::apply_edit(state, target, e, lex);
      if (!r) {
        ok = false;
        break;
      }
      acc = join(acc, *r);
    }
    if (!ok) continue;
    any_derivation = true;
    if (acc == Relation::Independence) continue;
    if (best && *best != acc)
      throw NatlogError("conflicting derivations for " + serialize(a) + " / " + serialize(b));
    best = acc;
  } while (std::next_permutation(edits.begin(), edits.end()));

  if (!any_derivation)
    throw NatlogError("no derivation with independent arguments for " + serialize(a) + " / " + serialize(b));
  return best.value_or(Relation::Independence);
}

}  // namespace nli
