#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nli {

// The seven entailment relations. Enumerator order is the table order
// (entailment first, independence last) and doubles as the class index
// of the classifier and the argmax tie-break order.
enum class Relation : std::uint8_t {
  Forward = 0,      // x ⊏ y   (strict subset)
  Reverse = 1,      // x ⊐ y   (strict superset)
  Equivalence = 2,  // x ≡ y
  Alternation = 3,  // x | y   (disjoint, not exhaustive)
  Negation = 4,     // x ^ y   (disjoint, exhaustive)
  Cover = 5,        // x ⌣ y   (overlapping, exhaustive)
  Independence = 6  // x # y   (everything else)
};

inline constexpr int kNumRelations = 7;

inline constexpr std::array<Relation, kNumRelations> kAllRelations = {
    Relation::Forward,     Relation::Reverse,  Relation::Equivalence,
    Relation::Alternation, Relation::Negation, Relation::Cover,
    Relation::Independence};

constexpr int index_of(Relation r) { return static_cast<int>(r); }

inline Relation relation_from_index(int i) {
  if (i < 0 || i >= kNumRelations) throw std::out_of_range("relation index out of range");
  return static_cast<Relation>(i);
}

/// ASCII symbol used in every data file: = < > | ^ v #
constexpr char symbol(Relation r) {
  switch (r) {
    case Relation::Forward: return '<';
    case Relation::Reverse: return '>';
    case Relation::Equivalence: return '=';
    case Relation::Alternation: return '|';
    case Relation::Negation: return '^';
    case Relation::Cover: return 'v';
    case Relation::Independence: return '#';
  }
  return '?';
}

inline std::optional<Relation> relation_from_symbol(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  switch (s[0]) {
    case '<': return Relation::Forward;
    case '>': return Relation::Reverse;
    case '=': return Relation::Equivalence;
    case '|': return Relation::Alternation;
    case '^': return Relation::Negation;
    case 'v': return Relation::Cover;
    case '#': return Relation::Independence;
    default: return std::nullopt;
  }
}

inline std::string_view name(Relation r) {
  switch (r) {
    case Relation::Forward: return "entailment";
    case Relation::Reverse: return "reverse-entailment";
    case Relation::Equivalence: return "equivalence";
    case Relation::Alternation: return "alternation";
    case Relation::Negation: return "negation";
    case Relation::Cover: return "cover";
    case Relation::Independence: return "independence";
  }
  return "?";
}

inline std::ostream& operator<<(std::ostream& os, Relation r) { return os << symbol(r); }

/// Swaps ⊏ and ⊐, fixes everything else.
constexpr Relation converse(Relation r) {
  if (r == Relation::Forward) return Relation::Reverse;
  if (r == Relation::Reverse) return Relation::Forward;
  return r;
}

// Classifies two sets by which of the four Venn regions are inhabited:
// both = x∩y, only_x = x\y, only_y = y\x, neither = D\(x∪y).
// Precedence ≡, ⊏, ⊐, ^, |, ⌣, # makes the function total; on sets that
// are neither empty nor the whole universe exactly one definition matches.
constexpr Relation relation_from_regions(bool both, bool only_x, bool only_y, bool neither) {
  if (!only_x && !only_y) return Relation::Equivalence;
  if (!only_x) return Relation::Forward;
  if (!only_y) return Relation::Reverse;
  if (!both && !neither) return Relation::Negation;
  if (!both) return Relation::Alternation;
  if (!neither) return Relation::Cover;
  return Relation::Independence;
}

/// Sets given as bitmasks over a universe of at most 64 elements.
constexpr Relation relation_of_sets(std::uint64_t x, std::uint64_t y, std::uint64_t universe) {
  x &= universe;
  y &= universe;
  return relation_from_regions((x & y) != 0, (x & ~y) != 0, (y & ~x) != 0,
                               (universe & ~(x | y)) != 0);
}

namespace detail {
using R = Relation;
constexpr R F = R::Forward, B = R::Reverse, E = R::Equivalence, A = R::Alternation,
            N = R::Negation, C = R::Cover, I = R::Independence;

// join_table[r1][r2]: relation between x and z given x r1 y and y r2 z, over
// non-empty proper subsets; # wherever more than one relation is attainable.
inline constexpr std::array<std::array<R, kNumRelations>, kNumRelations> join_table = {{
    //        ⊏  ⊐  ≡  |  ^  ⌣  #
    /* ⊏ */ {F, I, F, A, A, I, I},
    /* ⊐ */ {I, B, B, I, C, C, I},
    /* ≡ */ {F, B, E, A, N, C, I},
    /* | */ {I, A, A, I, F, F, I},
    /* ^ */ {C, A, N, B, E, F, I},
    /* ⌣ */ {C, I, C, B, B, I, I},
    /* # */ {I, I, I, I, I, I, I},
}};
}  // namespace detail

/// Composition of relations along a chain x r1 y r2 z.
constexpr Relation join(Relation r1, Relation r2) {
  return detail::join_table[index_of(r1)][index_of(r2)];
}

/// Relation between (not p) and (not q) given p r q.
constexpr Relation project_negation(Relation r) {
  switch (r) {
    case Relation::Forward: return Relation::Reverse;
    case Relation::Reverse: return Relation::Forward;
    case Relation::Alternation: return Relation::Cover;
    case Relation::Cover: return Relation::Alternation;
    default: return r;
  }
}

}  // namespace nli
