#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nli/errors.hpp"
#include "nli/grammar.hpp"
#include "nli/lexicon.hpp"
#include "nli/modelcheck.hpp"
#include "nli/natlog.hpp"
#include "nli/relation.hpp"
#include "nli/rng.hpp"

namespace nli {

enum class DatasetClass : std::uint8_t { Monotonicity, QuantifierSubstitution, MonoQuantSubstitution, Negation };

inline std::string_view name(DatasetClass c) {
  switch (c) {
    case DatasetClass::Monotonicity: return "mono";
    case DatasetClass::QuantifierSubstitution: return "quant-subst";
    case DatasetClass::MonoQuantSubstitution: return "mono-quant-subst";
    case DatasetClass::Negation: return "negation-variant";
  }
  return "?";
}

inline std::optional<DatasetClass> dataset_class_from_name(std::string_view s) {
  for (auto c : {DatasetClass::Monotonicity, DatasetClass::QuantifierSubstitution,
                 DatasetClass::MonoQuantSubstitution, DatasetClass::Negation})
    if (name(c) == s) return c;
  return std::nullopt;
}

struct LabeledPair {
  Sentence left;
  Sentence right;
  Relation gold;
  std::string dataset_id;
};

// A family of pairs instantiating one reasoning pattern. `schema` is the
// pattern with its fixed filler words abstracted away: two datasets with
// equal schema differ only in `filler`.
struct Dataset {
  std::string id;
  DatasetClass cls;
  std::string schema;
  std::string filler;
  Relation gold = Relation::Independence;
  std::vector<LabeledPair> pairs;
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  std::vector<std::string> second_args = {"bark", "mobile", "European"};
  std::vector<std::pair<std::string, std::string>> second_pairs = {
      {"bark", "animate"}, {"French", "European"}, {"Parisian", "French"}};
  std::pair<std::string, std::string> both_args_pair = {"French", "European"};
  int mono_quant_per_pair = 2;
  // Mono-quant-subst patterns always included, by dataset id.
  std::vector<std::string> mono_quant_required = {"mqs-all-some-arg2-French-European"};
  // Negation variants are built from the quantifier-substitution datasets
  // with these second arguments, one quantifier order per pair.
  std::vector<std::string> negation_second_args = {"bark"};
};

struct GenerationLog {
  std::size_t candidates = 0;
  std::size_t degenerate = 0;
  std::size_t unsupported = 0;
  std::vector<std::string> disagreements;
  std::vector<std::string> aborted_variants;
};

// Gold labeling with both oracles. A candidate is kept only when natural
// logic derives a relation, no sentence is degenerate, and both agree.
class PairLabeler {
 public:
  explicit PairLabeler(const LexicalRelationTable& lex) : lex_(&lex), checker_(lex) {}

  enum class Outcome { Labeled, Degenerate, Unsupported, Disagreement };

  struct Result {
    Outcome outcome;
    Relation relation = Relation::Independence;
    Relation model_relation = Relation::Independence;
  };

  Result classify(const Sentence& a, const Sentence& b) {
    Relation derived;
    try {
      derived = label_pair_natlog(a, b, *lex_);
    } catch (const NatlogError&) {
      return {Outcome::Unsupported};
    }
    auto mc = checker_.check(a, b);
    if (mc.degenerate) return {Outcome::Degenerate, derived};
    if (mc.relation != derived) return {Outcome::Disagreement, derived, mc.relation};
    return {Outcome::Labeled, derived, mc.relation};
  }

  std::optional<Relation> label(const Sentence& a, const Sentence& b, GenerationLog& log) {
    ++log.candidates;
    auto r = classify(a, b);
    switch (r.outcome) {
      case Outcome::Labeled: return r.relation;
      case Outcome::Degenerate: ++log.degenerate; return std::nullopt;
      case Outcome::Unsupported: ++log.unsupported; return std::nullopt;
      case Outcome::Disagreement:
        log.disagreements.push_back(serialize(a) + "\t" + serialize(b) + "\tnatlog=" + symbol(r.relation) +
                                    "\tmodelcheck=" + symbol(r.model_relation));
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  const LexicalRelationTable* lex_;
  ModelChecker checker_;
};

namespace detail {

inline std::string qname(Quantifier q) { return std::string(name(q)); }

inline std::vector<std::string> sorted_words(const LexicalRelationTable& lex) {
  auto w = lex.words();
  std::sort(w.begin(), w.end());
  return w;
}

/// Ordered (specific, general) pairs with specific ⊏ general.
inline std::vector<std::pair<std::string, std::string>> entailment_pairs(const LexicalRelationTable& lex) {
  std::vector<std::pair<std::string, std::string>> out;
  auto words = sorted_words(lex);
  for (const auto& p : words)
    for (const auto& q : words)
      if (p != q && lex.relation(p, q) == Relation::Forward) out.emplace_back(p, q);
  return out;
}

inline bool independent_of_all(const LexicalRelationTable& lex, const std::string& w,
                               std::initializer_list<std::string> others) {
  for (const auto& o : others)
    if (!lex.independent(w, o)) return false;
  return true;
}

using Candidate = std::pair<Sentence, Sentence>;

inline std::optional<Dataset> build_dataset(std::string id, DatasetClass cls, std::string schema,
                                            std::string filler, const std::vector<Candidate>& candidates,
                                            PairLabeler& labeler, GenerationLog& log) {
  Dataset d{std::move(id), cls, std::move(schema), std::move(filler), Relation::Independence, {}};
  for (const auto& [a, b] : candidates) {
    auto r = labeler.label(a, b, log);
    if (!r) continue;
    if (!d.pairs.empty() && *r != d.gold)
      throw DataError("dataset " + d.id + " mixes gold labels: " + serialize(a) + " / " + serialize(b) + " is " +
                      symbol(*r) + ", expected " + symbol(d.gold));
    d.gold = *r;
    d.pairs.push_back({a, b, *r, d.id});
  }
  if (d.pairs.empty()) return std::nullopt;
  return d;
}

inline Sentence sent(Quantifier q, const std::string& a1, const std::string& a2) {
  return {q, {a1, false}, {a2, false}};
}

}  // namespace detail

// Basic monotonicity: one argument (or both) alternates between a
// predicate and one it entails, the quantifier stays fixed.
inline std::vector<Dataset> gen_monotonicity(const LexicalRelationTable& lex, const GeneratorConfig& cfg,
                                             PairLabeler& labeler, GenerationLog& log) {
  using namespace detail;
  std::vector<Dataset> out;
  const auto pairs = entailment_pairs(lex);
  const auto words = sorted_words(lex);
  for (Quantifier q : kAllQuantifiers) {
    // First argument: (q general) y vs (q specific) y.
    for (const auto& y : cfg.second_args) {
      std::vector<Candidate> c;
      for (const auto& [spec, gen] : pairs)
        if (independent_of_all(lex, spec, {y}) && independent_of_all(lex, gen, {y}))
          c.push_back({sent(q, gen, y), sent(q, spec, y)});
      if (auto d = build_dataset("mono-arg1-" + qname(q) + "-" + y, DatasetClass::Monotonicity,
                                 "mono-arg1:" + qname(q), y, c, labeler, log))
        out.push_back(std::move(*d));
    }
    // Second argument: (q x) specific vs (q x) general for every x.
    for (const auto& [spec, gen] : cfg.second_pairs) {
      std::vector<Candidate> c;
      for (const auto& x : words)
        if (independent_of_all(lex, x, {spec, gen})) c.push_back({sent(q, x, spec), sent(q, x, gen)});
      if (auto d = build_dataset("mono-arg2-" + qname(q) + "-" + spec + "-" + gen, DatasetClass::Monotonicity,
                                 "mono-arg2:" + qname(q), spec + "+" + gen, c, labeler, log))
        out.push_back(std::move(*d));
    }
    // Both arguments, lexical relations pointing the same or opposite ways.
    const auto& [yspec, ygen] = cfg.both_args_pair;
    for (bool same : {true, false}) {
      std::vector<Candidate> c;
      for (const auto& [spec, gen] : pairs) {
        if (!independent_of_all(lex, spec, {yspec, ygen}) || !independent_of_all(lex, gen, {yspec, ygen})) continue;
        if (same)
          c.push_back({sent(q, spec, yspec), sent(q, gen, ygen)});
        else
          c.push_back({sent(q, spec, ygen), sent(q, gen, yspec)});
      }
      const std::string kind = same ? "same" : "opposite";
      if (auto d = build_dataset("mono-both-" + qname(q) + "-" + kind, DatasetClass::Monotonicity,
                                 "mono-both:" + qname(q) + ":" + kind, yspec + "+" + ygen, c, labeler, log))
        out.push_back(std::move(*d));
    }
  }
  return out;
}

/// (q1 x) y vs (q2 x) y for every ordered pair of distinct quantifiers.
inline std::vector<Dataset> gen_quantifier_substitution(const LexicalRelationTable& lex, const GeneratorConfig& cfg,
                                                        PairLabeler& labeler, GenerationLog& log) {
  using namespace detail;
  std::vector<Dataset> out;
  const auto words = sorted_words(lex);
  for (Quantifier q1 : kAllQuantifiers) {
    for (Quantifier q2 : kAllQuantifiers) {
      if (q1 == q2) continue;
      for (const auto& y : cfg.second_args) {
        std::vector<Candidate> c;
        for (const auto& x : words)
          if (independent_of_all(lex, x, {y})) c.push_back({sent(q1, x, y), sent(q2, x, y)});
        if (auto d = build_dataset("qs-" + qname(q1) + "-" + qname(q2) + "-" + y,
                                   DatasetClass::QuantifierSubstitution, "qs:" + qname(q1) + ":" + qname(q2), y, c,
                                   labeler, log))
          out.push_back(std::move(*d));
      }
    }
  }
  return out;
}

// Differing quantifiers and differing arguments, sampled: for every
// unordered quantifier pair, `mono_quant_per_pair` patterns drawn from
// (order) x (second-argument alternation | first-argument alternation).
// First arguments alternate along an entailment in either direction or
// between distinct equivalent predicates.
// Throws if the sample misses a quantifier pair or a relation other than ≡.
inline std::vector<Dataset> gen_mono_quant_substitution(const LexicalRelationTable& lex, const GeneratorConfig& cfg,
                                                        PairLabeler& labeler, GenerationLog& log) {
  using namespace detail;
  const auto pairs = entailment_pairs(lex);
  const auto words = sorted_words(lex);
  std::vector<std::pair<std::string, std::string>> synonyms;
  for (const auto& p : words)
    for (const auto& q : words)
      if (p != q && lex.relation(p, q) == Relation::Equivalence) synonyms.emplace_back(p, q);

  enum class Dir { Up, Down, Synonym };
  auto dir_name = [](Dir d) { return d == Dir::Up ? "up" : d == Dir::Down ? "down" : "synonym"; };
  struct Spec {
    Quantifier left, right;
    bool second_arg;   // alternation in the second argument, else the first
    std::string a, b;  // second_arg: specific/general pair; else a = second argument
    Dir dir;
  };
  auto spec_id = [&](const Spec& s) {
    std::string id = "mqs-" + qname(s.left) + "-" + qname(s.right);
    if (s.second_arg) {
      const bool down = s.dir == Dir::Down;
      return id + "-arg2-" + (down ? s.b : s.a) + "-" + (down ? s.a : s.b);
    }
    return id + "-arg1-" + s.a + "-" + dir_name(s.dir);
  };
  auto build = [&](const Spec& s, GenerationLog& blog) -> std::optional<Dataset> {
    std::vector<Candidate> c;
    std::string id = spec_id(s);
    std::string schema = "mqs:" + qname(s.left) + ":" + qname(s.right);
    std::string filler;
    if (s.second_arg) {
      const std::string& ya = s.dir == Dir::Down ? s.b : s.a;
      const std::string& yb = s.dir == Dir::Down ? s.a : s.b;
      for (const auto& x : words)
        if (independent_of_all(lex, x, {ya, yb})) c.push_back({sent(s.left, x, ya), sent(s.right, x, yb)});
      schema += ":arg2:" + std::string(dir_name(s.dir));
      filler = ya + "+" + yb;
    } else {
      const auto& source = s.dir == Dir::Synonym ? synonyms : pairs;
      for (const auto& [spec, gen] : source) {
        if (!independent_of_all(lex, spec, {s.a}) || !independent_of_all(lex, gen, {s.a})) continue;
        if (s.dir == Dir::Down)
          c.push_back({sent(s.left, gen, s.a), sent(s.right, spec, s.a)});
        else
          c.push_back({sent(s.left, spec, s.a), sent(s.right, gen, s.a)});
      }
      schema += ":arg1:" + std::string(dir_name(s.dir));
      filler = s.a;
    }
    return build_dataset(id, DatasetClass::MonoQuantSubstitution, schema, filler, c, labeler, blog);
  };

  const std::set<Relation> required = {Relation::Forward,  Relation::Reverse, Relation::Alternation,
                                       Relation::Negation, Relation::Cover,   Relation::Independence};
  constexpr int kAttempts = 64;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Rng rng(derive_seed(cfg.seed, "mono-quant-subst/" + std::to_string(attempt)));
    std::vector<Dataset> out;
    std::set<Relation> seen;
    GenerationLog attempt_log;
    for (std::size_t i = 0; i < kAllQuantifiers.size(); ++i) {
      for (std::size_t j = i + 1; j < kAllQuantifiers.size(); ++j) {
        std::vector<Spec> options;
        for (bool swap : {false, true}) {
          Quantifier l = swap ? kAllQuantifiers[j] : kAllQuantifiers[i];
          Quantifier r = swap ? kAllQuantifiers[i] : kAllQuantifiers[j];
          for (const auto& [spec, gen] : cfg.second_pairs)
            for (Dir d : {Dir::Up, Dir::Down}) options.push_back({l, r, true, spec, gen, d});
          for (const auto& y : cfg.second_args)
            for (Dir d : {Dir::Up, Dir::Down, Dir::Synonym}) options.push_back({l, r, false, y, {}, d});
        }
        rng.shuffle(options);
        std::stable_partition(options.begin(), options.end(), [&](const Spec& o) {
          auto id = spec_id(o);
          return std::find(cfg.mono_quant_required.begin(), cfg.mono_quant_required.end(), id) !=
                 cfg.mono_quant_required.end();
        });
        int taken = 0;
        for (const auto& opt : options) {
          if (taken == cfg.mono_quant_per_pair) break;
          auto d = build(opt, attempt_log);
          if (!d) continue;
          seen.insert(d->gold);
          out.push_back(std::move(*d));
          ++taken;
        }
        if (taken < cfg.mono_quant_per_pair)
          throw DataError("mono-quant-subst: not enough patterns for quantifier pair " +
                          qname(kAllQuantifiers[i]) + "/" + qname(kAllQuantifiers[j]));
      }
    }
    if (std::includes(seen.begin(), seen.end(), required.begin(), required.end())) {
      log.candidates += attempt_log.candidates;
      log.degenerate += attempt_log.degenerate;
      log.unsupported += attempt_log.unsupported;
      log.disagreements.insert(log.disagreements.end(), attempt_log.disagreements.begin(),
                               attempt_log.disagreements.end());
      return out;
    }
  }
  throw DataError("mono-quant-subst: sampling failed to cover every relation but equivalence");
}

enum class NegatedPosition : std::uint8_t { LeftFirst, LeftSecond, RightFirst, RightSecond };

inline constexpr std::array<NegatedPosition, 4> kAllNegatedPositions = {
    NegatedPosition::LeftFirst, NegatedPosition::LeftSecond, NegatedPosition::RightFirst,
    NegatedPosition::RightSecond};

inline std::string_view name(NegatedPosition p) {
  switch (p) {
    case NegatedPosition::LeftFirst: return "l1";
    case NegatedPosition::LeftSecond: return "l2";
    case NegatedPosition::RightFirst: return "r1";
    case NegatedPosition::RightSecond: return "r2";
  }
  return "?";
}

/// Toggles `not` on one argument position of a pair.
inline std::pair<Sentence, Sentence> toggle_negation(Sentence left, Sentence right, NegatedPosition pos) {
  switch (pos) {
    case NegatedPosition::LeftFirst: left.arg1.negated = !left.arg1.negated; break;
    case NegatedPosition::LeftSecond: left.arg2.negated = !left.arg2.negated; break;
    case NegatedPosition::RightFirst: right.arg1.negated = !right.arg1.negated; break;
    case NegatedPosition::RightSecond: right.arg2.negated = !right.arg2.negated; break;
  }
  return {std::move(left), std::move(right)};
}

// One variant per (base dataset, argument position) with that position
// negated and every pair relabeled. A variant in which any pair fails to
// label is dropped whole and recorded in log.aborted_variants.
inline std::vector<Dataset> gen_negation_variants(const std::vector<Dataset>& base,
                                                  const std::vector<NegatedPosition>& positions,
                                                  PairLabeler& labeler, GenerationLog& log) {
  std::vector<Dataset> out;
  for (const auto& d : base) {
    for (NegatedPosition pos : positions) {
      Dataset v{"neg-" + std::string(name(pos)) + "-" + d.id, DatasetClass::Negation,
                "neg:" + std::string(name(pos)) + ":" + d.schema, d.filler, Relation::Independence, {}};
      bool ok = true;
      for (const auto& p : d.pairs) {
        auto [l, r] = toggle_negation(p.left, p.right, pos);
        auto rel = labeler.label(l, r, log);
        if (!rel || (!v.pairs.empty() && *rel != v.gold)) {
          ok = false;
          break;
        }
        v.gold = *rel;
        v.pairs.push_back({std::move(l), std::move(r), *rel, v.id});
      }
      if (!ok || v.pairs.empty()) {
        log.aborted_variants.push_back(v.id);
        continue;
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus

struct Corpus {
  std::vector<Dataset> datasets;  // sorted by id

  std::size_t pair_count() const {
    std::size_t n = 0;
    for (const auto& d : datasets) n += d.pairs.size();
    return n;
  }

  const Dataset* find(std::string_view id) const {
    for (const auto& d : datasets)
      if (d.id == id) return &d;
    return nullptr;
  }

  void sort() {
    std::sort(datasets.begin(), datasets.end(), [](const Dataset& a, const Dataset& b) { return a.id < b.id; });
  }
};

struct GeneratedCorpus {
  Corpus corpus;
  GenerationLog log;
};

inline GeneratedCorpus generate_corpus(const LexicalRelationTable& lex, const GeneratorConfig& cfg = {}) {
  GeneratedCorpus g;
  PairLabeler labeler(lex);
  auto& ds = g.corpus.datasets;
  auto append = [&](std::vector<Dataset> v) {
    for (auto& d : v) ds.push_back(std::move(d));
  };
  append(gen_monotonicity(lex, cfg, labeler, g.log));
  auto qs = gen_quantifier_substitution(lex, cfg, labeler, g.log);
  std::vector<Dataset> negation_base;
  for (const auto& d : qs) {
    const auto& p = d.pairs.front();
    bool arg_ok = std::find(cfg.negation_second_args.begin(), cfg.negation_second_args.end(), d.filler) !=
                  cfg.negation_second_args.end();
    if (arg_ok && static_cast<int>(p.left.quantifier) < static_cast<int>(p.right.quantifier))
      negation_base.push_back(d);
  }
  append(std::move(qs));
  append(gen_mono_quant_substitution(lex, cfg, labeler, g.log));
  append(gen_negation_variants(negation_base, {kAllNegatedPositions.begin(), kAllNegatedPositions.end()}, labeler,
                               g.log));
  std::set<std::string> ids;
  for (const auto& d : ds)
    if (!ids.insert(d.id).second) throw DataError("duplicate dataset id " + d.id);
  g.corpus.sort();
  return g;
}

namespace detail {
inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}
}  // namespace detail

/// One pair per line: <relation> TAB <left> TAB <right> TAB <dataset-id>.
inline void write_corpus(std::ostream& os, const Corpus& c) {
  for (const auto& d : c.datasets)
    for (const auto& p : d.pairs)
      os << symbol(p.gold) << '\t' << serialize(p.left) << '\t' << serialize(p.right) << '\t' << d.id << '\n';
}

/// Dataset metadata: id, class, schema, filler, gold, pair count.
inline void write_dataset_index(std::ostream& os, const Corpus& c) {
  os << "id\tclass\tschema\tfiller\tgold\tpairs\n";
  for (const auto& d : c.datasets)
    os << d.id << '\t' << name(d.cls) << '\t' << d.schema << '\t' << d.filler << '\t' << symbol(d.gold) << '\t'
       << d.pairs.size() << '\n';
}

inline Corpus read_corpus(std::istream& corpus_in, std::istream& index_in, const LexicalRelationTable* lex) {
  Corpus c;
  std::map<std::string, std::size_t> pos;
  std::string line;
  bool header = true;
  while (std::getline(index_in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("id\t", 0) == 0) continue;
    }
    auto f = detail::split_tabs(line);
    if (f.size() != 6) throw DataError("dataset index: malformed line: " + line);
    auto cls = dataset_class_from_name(f[1]);
    auto gold = relation_from_symbol(f[4]);
    if (!cls || !gold) throw DataError("dataset index: bad class or relation: " + line);
    if (!pos.emplace(f[0], c.datasets.size()).second) throw DataError("dataset index: duplicate id " + f[0]);
    c.datasets.push_back({f[0], *cls, f[2], f[3], *gold, {}});
  }
  int lineno = 0;
  while (std::getline(corpus_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = detail::split_tabs(line);
    if (f.size() != 4) throw DataError("corpus line " + std::to_string(lineno) + ": expected 4 fields");
    auto gold = relation_from_symbol(f[0]);
    if (!gold) throw DataError("corpus line " + std::to_string(lineno) + ": bad relation symbol");
    auto it = pos.find(f[3]);
    if (it == pos.end()) throw DataError("corpus line " + std::to_string(lineno) + ": unknown dataset " + f[3]);
    auto& d = c.datasets[it->second];
    if (*gold != d.gold) throw DataError("corpus line " + std::to_string(lineno) + ": label differs from dataset");
    d.pairs.push_back({parse_sentence(f[1], lex), parse_sentence(f[2], lex), *gold, f[3]});
  }
  c.sort();
  return c;
}

/// Reads `<dir>/corpus.tsv` + `<dir>/datasets.tsv`; a path to corpus.tsv itself also works.
inline Corpus load_corpus(const std::filesystem::path& path, const LexicalRelationTable* lex = nullptr) {
  std::filesystem::path dir = std::filesystem::is_directory(path) ? path : path.parent_path();
  std::filesystem::path corpus_file = std::filesystem::is_directory(path) ? dir / "corpus.tsv" : path;
  std::ifstream cin(corpus_file), iin(dir / "datasets.tsv");
  if (!cin) throw DataError("cannot open corpus file " + corpus_file.string());
  if (!iin) throw DataError("cannot open dataset index " + (dir / "datasets.tsv").string());
  return read_corpus(cin, iin, lex);
}

inline void write_generation_report(std::ostream& os, const Corpus& c, const GenerationLog& log) {
  std::map<DatasetClass, std::pair<std::size_t, std::size_t>> by_class;
  std::array<std::size_t, kNumRelations> hist{};
  for (const auto& d : c.datasets) {
    by_class[d.cls].first += 1;
    by_class[d.cls].second += d.pairs.size();
    hist[static_cast<std::size_t>(index_of(d.gold))] += d.pairs.size();
  }
  os << "datasets\t" << c.datasets.size() << "\n";
  os << "pairs\t" << c.pair_count() << "\n";
  for (const auto& [cls, n] : by_class)
    os << "class\t" << name(cls) << "\t" << n.first << " datasets\t" << n.second << " pairs\n";
  for (Relation r : kAllRelations) os << "label\t" << symbol(r) << "\t" << hist[static_cast<std::size_t>(index_of(r))] << "\n";
  os << "candidates\t" << log.candidates << "\n";
  os << "skipped_degenerate\t" << log.degenerate << "\n";
  os << "skipped_unsupported\t" << log.unsupported << "\n";
  os << "aborted_variants\t" << log.aborted_variants.size() << "\n";
  for (const auto& v : log.aborted_variants) os << "aborted\t" << v << "\n";
  os << "oracle_disagreements\t" << log.disagreements.size() << "\n";
  for (const auto& d : log.disagreements) os << "disagreement\t" << d << "\n";
}

// ---------------------------------------------------------------------------
// Train/test splits

enum class Setting : std::uint8_t { AllSplit, SetOut, SubclassOut, PairOut };

inline std::string_view name(Setting s) {
  switch (s) {
    case Setting::AllSplit: return "all-split";
    case Setting::SetOut: return "set-out";
    case Setting::SubclassOut: return "subclass-out";
    case Setting::PairOut: return "pair-out";
  }
  return "?";
}

inline std::optional<Setting> setting_from_name(std::string_view s) {
  for (auto v : {Setting::AllSplit, Setting::SetOut, Setting::SubclassOut, Setting::PairOut})
    if (name(v) == s) return v;
  return std::nullopt;
}

struct SplitSpec {
  Setting setting = Setting::AllSplit;
  std::string target;  // dataset id; optional for all-split
  std::uint64_t seed = 1;
  double train_fraction = 0.85;
};

enum class DatasetRole : std::uint8_t { Split, HeldOut, Target };

inline std::string_view name(DatasetRole r) {
  switch (r) {
    case DatasetRole::Split: return "split";
    case DatasetRole::HeldOut: return "held-out";
    case DatasetRole::Target: return "target";
  }
  return "?";
}

struct TestExample {
  LabeledPair pair;
  bool target = false;    // from the target dataset
  bool held_out = false;  // from a dataset withheld from training entirely
};

struct Split {
  SplitSpec spec;
  std::vector<LabeledPair> train;
  std::vector<TestExample> test;
  // Manifest: per dataset, its role and a train(1)/test(0) flag per pair.
  std::vector<std::tuple<std::string, DatasetRole, std::string>> manifest;
};

namespace detail {
inline std::pair<Quantifier, Quantifier> quantifier_pair(const Dataset& d) {
  const auto& p = d.pairs.front();
  return {p.left.quantifier, p.right.quantifier};
}

inline Split assemble_split(const Corpus& corpus, const SplitSpec& spec,
                            const std::map<std::string, std::pair<DatasetRole, std::string>>& roles) {
  Split s;
  s.spec = spec;
  for (const auto& d : corpus.datasets) {
    const auto& [role, flags] = roles.at(d.id);
    if (flags.size() != d.pairs.size()) throw DataError("manifest flags do not match dataset " + d.id);
    for (std::size_t i = 0; i < d.pairs.size(); ++i) {
      if (flags[i] == '1') {
        if (role != DatasetRole::Split) throw DataError("held-out dataset " + d.id + " has training pairs");
        s.train.push_back(d.pairs[i]);
      } else {
        s.test.push_back({d.pairs[i], d.id == spec.target, role != DatasetRole::Split});
      }
    }
    s.manifest.emplace_back(d.id, role, flags);
  }
  if (s.train.empty()) throw DataError("split leaves no training data");
  return s;
}
}  // namespace detail

// Realizes one of the four settings. Every non-held-out dataset is split
// by a per-dataset shuffled prefix (seeded from the split seed and the
// dataset id); held-out datasets go to test whole.
inline Split make_split(const Corpus& corpus, const SplitSpec& spec) {
  const Dataset* target = nullptr;
  if (!spec.target.empty()) {
    target = corpus.find(spec.target);
    if (!target) throw DataError("unknown target dataset: " + spec.target);
  }
  if (spec.setting != Setting::AllSplit) {
    if (!target) throw DataError(std::string(name(spec.setting)) + " needs a target dataset");
    if (target->cls != DatasetClass::QuantifierSubstitution)
      throw DataError("target must be a quantifier-substitution dataset: " + spec.target);
  }
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) throw DataError("train fraction must be in (0, 1]");

  auto held_out = [&](const Dataset& d) {
    switch (spec.setting) {
      case Setting::AllSplit: return false;
      case Setting::SetOut: return d.id == target->id;
      case Setting::SubclassOut: return d.schema == target->schema;
      case Setting::PairOut: {
        auto [a, b] = detail::quantifier_pair(*target);
        auto [c, e] = detail::quantifier_pair(d);
        return (c == a && e == b) || (c == b && e == a);
      }
    }
    return false;
  };

  std::map<std::string, std::pair<DatasetRole, std::string>> roles;
  for (const auto& d : corpus.datasets) {
    DatasetRole role = DatasetRole::Split;
    if (held_out(d)) role = target && d.id == target->id ? DatasetRole::Target : DatasetRole::HeldOut;
    std::string flags(d.pairs.size(), '0');
    if (role == DatasetRole::Split) {
      std::vector<std::size_t> order(d.pairs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng rng(derive_seed(spec.seed, "split/" + d.id));
      rng.shuffle(order);
      auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(order.size())));
      for (std::size_t i = 0; i < n_train; ++i) flags[order[i]] = '1';
    }
    roles[d.id] = {role, flags};
  }
  return detail::assemble_split(corpus, spec, roles);
}

inline void write_manifest(std::ostream& os, const Split& s) {
  os << "# setting=" << name(s.spec.setting) << " target=" << s.spec.target << " seed=" << s.spec.seed
     << " train_fraction=" << s.spec.train_fraction << "\n";
  for (const auto& [id, role, flags] : s.manifest) os << id << '\t' << name(role) << '\t' << flags << '\n';
}

/// Rebuilds the exact split recorded by write_manifest.
inline Split read_manifest(std::istream& in, const Corpus& corpus) {
  SplitSpec spec;
  std::map<std::string, std::pair<DatasetRole, std::string>> roles;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string kv;
      while (ss >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        auto k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "setting") {
          auto st = setting_from_name(v);
          if (!st) throw DataError("manifest: unknown setting " + v);
          spec.setting = *st;
        } else if (k == "target") {
          spec.target = v;
        } else if (k == "seed") {
          spec.seed = std::stoull(v);
        } else if (k == "train_fraction") {
          spec.train_fraction = std::stod(v);
        }
      }
      continue;
    }
    auto f = detail::split_tabs(line);
    if (f.size() != 3) throw DataError("manifest: malformed line: " + line);
    DatasetRole role;
    if (f[1] == "split") role = DatasetRole::Split;
    else if (f[1] == "held-out") role = DatasetRole::HeldOut;
    else if (f[1] == "target") role = DatasetRole::Target;
    else throw DataError("manifest: unknown role " + f[1]);
    roles[f[0]] = {role, f[2]};
  }
  for (const auto& d : corpus.datasets)
    if (!roles.count(d.id)) throw DataError("manifest does not cover dataset " + d.id);
  if (roles.size() != corpus.datasets.size()) throw DataError("manifest names datasets missing from the corpus");
  return detail::assemble_split(corpus, spec, roles);
}

}  // namespace nli
