#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "nli/datagen.hpp"
#include "nli/modelcheck.hpp"
#include "nli/natlog.hpp"

using nli::Relation;

namespace {
const nli::LexicalRelationTable& lex() {
  static const auto t = nli::LexicalRelationTable::load(NLI_DEFAULT_LEXICON);
  return t;
}
const nli::GeneratedCorpus& generated() {
  static const auto g = nli::generate_corpus(lex());
  return g;
}
const nli::Corpus& corpus() { return generated().corpus; }

std::optional<Relation> gold_of(const std::string& left, const std::string& right) {
  for (const auto& d : corpus().datasets)
    for (const auto& p : d.pairs)
      if (nli::serialize(p.left) == left && nli::serialize(p.right) == right) return p.gold;
  return std::nullopt;
}

std::string corpus_text(const nli::Corpus& c) {
  std::ostringstream os;
  nli::write_corpus(os, c);
  nli::write_dataset_index(os, c);
  return os.str();
}
}  // namespace

TEST(Datagen, CorpusScale) {
  EXPECT_GE(corpus().datasets.size(), 150u);
  EXPECT_LE(corpus().datasets.size(), 250u);
  EXPECT_GE(corpus().pair_count(), 8000u);
  EXPECT_LE(corpus().pair_count(), 16000u);
}

TEST(Datagen, EveryClassAndEveryRelationOccurs) {
  std::set<nli::DatasetClass> classes;
  std::set<Relation> labels;
  for (const auto& d : corpus().datasets) {
    classes.insert(d.cls);
    labels.insert(d.gold);
  }
  EXPECT_EQ(classes.size(), 4u);
  EXPECT_EQ(labels.size(), nli::kNumRelations);
}

TEST(Datagen, NoSkipsOrDisagreements) {
  const auto& log = generated().log;
  EXPECT_TRUE(log.disagreements.empty());
  EXPECT_TRUE(log.aborted_variants.empty());
  EXPECT_EQ(log.candidates, corpus().pair_count() + log.degenerate + log.unsupported);
}

// Each dataset shares one relation and one schema; ids are unique and sorted.
TEST(Datagen, DatasetsAreHomogeneous) {
  std::string prev;
  for (const auto& d : corpus().datasets) {
    EXPECT_LT(prev, d.id);
    prev = d.id;
    ASSERT_FALSE(d.pairs.empty()) << d.id;
    std::set<std::string> seen;
    for (const auto& p : d.pairs) {
      EXPECT_EQ(p.gold, d.gold) << d.id;
      EXPECT_EQ(p.dataset_id, d.id);
      EXPECT_TRUE(seen.insert(nli::serialize(p.left) + "|" + nli::serialize(p.right)).second) << d.id;
    }
  }
}

TEST(Datagen, ExamplePairsCarryTheirLabels) {
  const std::pair<const char*, const char*> reverse[] = {{"(some dog) mobile", "(some puppy) mobile"},
                                                         {"(some animal) mobile", "(some cat) mobile"},
                                                         {"(some Asian) mobile", "(some Thai) mobile"}};
  for (auto [l, r] : reverse) EXPECT_EQ(gold_of(l, r), Relation::Reverse) << l << " / " << r;
  for (const char* x : {"puppy", "cat", "hippo"}) {
    const std::string X(x);
    EXPECT_EQ(gold_of("(all " + X + ") bark", "(some " + X + ") bark"), Relation::Forward) << x;
    EXPECT_EQ(gold_of("(all " + X + ") French", "(some " + X + ") European"), Relation::Forward) << x;
    EXPECT_EQ(gold_of("(all " + X + ") bark", "(no " + X + ") (not bark)"), Relation::Equivalence) << x;
  }
  EXPECT_EQ(gold_of("(some dog) French", "(some animal) European"), Relation::Forward);
  EXPECT_EQ(gold_of("(some dog) European", "(some animal) French"), Relation::Independence);
}

// Gold labels are recomputed from scratch by both oracles.
TEST(Datagen, GoldLabelsMatchBothOracles) {
  nli::ModelChecker mc(lex());
  std::size_t checked = 0;
  for (const auto& d : corpus().datasets)
    for (std::size_t i = 0; i < d.pairs.size(); i += 7) {
      const auto& p = d.pairs[i];
      EXPECT_EQ(nli::label_pair_natlog(p.left, p.right, lex()), p.gold) << d.id;
      auto r = mc.check(p.left, p.right);
      EXPECT_FALSE(r.degenerate);
      EXPECT_EQ(r.relation, p.gold) << d.id;
      ++checked;
    }
  EXPECT_GT(checked, 1000u);
}

TEST(Datagen, MonoQuantSubstitutionCoversPairsAndRelations) {
  std::set<std::pair<nli::Quantifier, nli::Quantifier>> unordered;
  std::set<Relation> labels;
  for (const auto& d : corpus().datasets) {
    if (d.cls != nli::DatasetClass::MonoQuantSubstitution) continue;
    auto a = d.pairs.front().left.quantifier, b = d.pairs.front().right.quantifier;
    EXPECT_NE(a, b);
    unordered.insert(std::minmax(a, b));
    labels.insert(d.gold);
  }
  EXPECT_EQ(unordered.size(), 15u);
  for (Relation r : {Relation::Forward, Relation::Reverse, Relation::Alternation, Relation::Negation,
                     Relation::Cover, Relation::Independence})
    EXPECT_TRUE(labels.count(r)) << nli::symbol(r);
  EXPECT_FALSE(labels.count(Relation::Equivalence));
  EXPECT_NE(corpus().find("mqs-all-some-arg2-French-European"), nullptr);
}

TEST(Datagen, QuantifierSubstitutionCoversAllOrderedPairs) {
  std::map<std::string, int> per_filler;
  for (const auto& d : corpus().datasets)
    if (d.cls == nli::DatasetClass::QuantifierSubstitution) ++per_filler[d.filler];
  for (const auto& f : nli::GeneratorConfig{}.second_args) EXPECT_EQ(per_filler[f], 30) << f;
}

TEST(Datagen, NegationToggleIsAnInvolution) {
  auto s = nli::parse_sentence("(most dog) bark"), t = nli::parse_sentence("(some (not cat)) (not mobile)");
  for (auto pos : nli::kAllNegatedPositions) {
    auto once = nli::toggle_negation(s, t, pos);
    EXPECT_NE(once, std::make_pair(s, t));
    EXPECT_EQ(nli::toggle_negation(once.first, once.second, pos), std::make_pair(s, t));
  }
}

// Every variant is its base with one argument toggled, pair for pair.
TEST(Datagen, NegationVariantsMirrorTheirBase) {
  for (const auto& d : corpus().datasets) {
    if (d.cls != nli::DatasetClass::Negation) continue;
    auto first_dash = d.id.find('-', 4);
    ASSERT_NE(first_dash, std::string::npos);
    const auto base = d.id.substr(first_dash + 1);
    const auto* b = corpus().find(base);
    ASSERT_NE(b, nullptr) << d.id;
    ASSERT_EQ(b->pairs.size(), d.pairs.size());
    const auto pos_name = d.id.substr(4, first_dash - 4);
    for (auto pos : nli::kAllNegatedPositions) {
      if (nli::name(pos) != pos_name) continue;
      for (std::size_t i = 0; i < d.pairs.size(); ++i)
        EXPECT_EQ(nli::toggle_negation(b->pairs[i].left, b->pairs[i].right, pos),
                  std::make_pair(d.pairs[i].left, d.pairs[i].right)) << d.id;
    }
  }
}

TEST(Datagen, GenerationIsDeterministic) {
  EXPECT_EQ(corpus_text(nli::generate_corpus(lex()).corpus), corpus_text(corpus()));
}

TEST(Datagen, CorpusRoundTripsThroughFiles) {
  std::ostringstream c, i;
  nli::write_corpus(c, corpus());
  nli::write_dataset_index(i, corpus());
  std::istringstream ci(c.str()), ii(i.str());
  auto back = nli::read_corpus(ci, ii, &lex());
  ASSERT_EQ(back.datasets.size(), corpus().datasets.size());
  for (std::size_t k = 0; k < back.datasets.size(); ++k) {
    const auto &a = back.datasets[k], &b = corpus().datasets[k];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.cls, b.cls);
    EXPECT_EQ(a.schema, b.schema);
    EXPECT_EQ(a.gold, b.gold);
    ASSERT_EQ(a.pairs.size(), b.pairs.size());
    for (std::size_t j = 0; j < a.pairs.size(); ++j) {
      EXPECT_EQ(a.pairs[j].left, b.pairs[j].left);
      EXPECT_EQ(a.pairs[j].right, b.pairs[j].right);
    }
  }
}

TEST(Datagen, MalformedCorpusIsRejected) {
  std::istringstream index("id\tclass\tschema\tfiller\tgold\tpairs\nd1\tmono\ts\tbark\t<\t1\n");
  auto read = [&](const std::string& body) {
    std::istringstream ci(body), ii(index.str());
    return nli::read_corpus(ci, ii, &lex());
  };
  EXPECT_NO_THROW(read("<\t(all dog) bark\t(some dog) bark\td1\n"));
  EXPECT_THROW(read("<\t(all dog) bark\td1\n"), nli::DataError);
  EXPECT_THROW(read("?\t(all dog) bark\t(some dog) bark\td1\n"), nli::DataError);
  EXPECT_THROW(read(">\t(all dog) bark\t(some dog) bark\td1\n"), nli::DataError);
  EXPECT_THROW(read("<\t(all dog) bark\t(some dog) bark\td2\n"), nli::DataError);
  EXPECT_THROW(read("<\t(all wolf) bark\t(some dog) bark\td1\n"), nli::DataError);
}

// ---- splits ----

namespace {
void expect_partition(const nli::Split& s) {
  EXPECT_EQ(s.train.size() + s.test.size(), corpus().pair_count());
  std::multiset<std::string> all, parts;
  for (const auto& d : corpus().datasets)
    for (const auto& p : d.pairs) all.insert(d.id + nli::serialize(p.left) + nli::serialize(p.right));
  for (const auto& p : s.train) parts.insert(p.dataset_id + nli::serialize(p.left) + nli::serialize(p.right));
  for (const auto& t : s.test)
    parts.insert(t.pair.dataset_id + nli::serialize(t.pair.left) + nli::serialize(t.pair.right));
  EXPECT_EQ(all, parts);
}

std::map<std::string, nli::DatasetRole> roles(const nli::Split& s) {
  std::map<std::string, nli::DatasetRole> m;
  for (const auto& [id, role, flags] : s.manifest) m[id] = role;
  return m;
}
}  // namespace

TEST(Split, AllSplitPartitionsEveryDataset) {
  auto s = nli::make_split(corpus(), {nli::Setting::AllSplit, "", 3});
  expect_partition(s);
  std::map<std::string, std::size_t> train_counts;
  for (const auto& p : s.train) ++train_counts[p.dataset_id];
  for (const auto& d : corpus().datasets) {
    const double expect = 0.85 * static_cast<double>(d.pairs.size());
    EXPECT_LE(std::abs(static_cast<double>(train_counts[d.id]) - expect), 0.5 + 1e-9) << d.id;
  }
  for (const auto& t : s.test) EXPECT_FALSE(t.held_out);
}

TEST(Split, SetOutHoldsOutOnlyTheTarget) {
  auto s = nli::make_split(corpus(), {nli::Setting::SetOut, "qs-most-no-bark", 1});
  expect_partition(s);
  for (const auto& p : s.train) EXPECT_NE(p.dataset_id, "qs-most-no-bark");
  std::size_t held = 0;
  for (const auto& t : s.test) {
    EXPECT_EQ(t.held_out, t.pair.dataset_id == "qs-most-no-bark");
    EXPECT_EQ(t.target, t.held_out);
    held += t.held_out;
  }
  EXPECT_EQ(held, corpus().find("qs-most-no-bark")->pairs.size());
  EXPECT_EQ(roles(s).at("qs-most-no-bark"), nli::DatasetRole::Target);
}

TEST(Split, SubclassOutHoldsOutTheSchema) {
  auto s = nli::make_split(corpus(), {nli::Setting::SubclassOut, "qs-some-no-bark", 1});
  expect_partition(s);
  for (const auto& [id, role] : roles(s)) {
    const bool same_schema = corpus().find(id)->schema == "qs:some:no";
    EXPECT_EQ(role != nli::DatasetRole::Split, same_schema) << id;
  }
  for (const auto& p : s.train) EXPECT_NE(corpus().find(p.dataset_id)->schema, "qs:some:no");
}

TEST(Split, PairOutHoldsOutBothOrdersOfThePair) {
  auto s = nli::make_split(corpus(), {nli::Setting::PairOut, "qs-two-all-bark", 1});
  expect_partition(s);
  std::size_t held_datasets = 0;
  for (const auto& [id, role] : roles(s)) {
    const auto& p = corpus().find(id)->pairs.front();
    const bool pair = std::minmax(p.left.quantifier, p.right.quantifier) ==
                      std::minmax(nli::Quantifier::Two, nli::Quantifier::All);
    EXPECT_EQ(role != nli::DatasetRole::Split, pair) << id;
    held_datasets += pair;
  }
  EXPECT_GT(held_datasets, 6u);  // both orders of qs, plus mqs and negation variants
  for (const auto& p : s.train)
    EXPECT_NE(std::minmax(p.left.quantifier, p.right.quantifier),
              std::minmax(nli::Quantifier::Two, nli::Quantifier::All));
}

TEST(Split, SeededAndDeterministic) {
  auto a = nli::make_split(corpus(), {nli::Setting::AllSplit, "", 1});
  auto b = nli::make_split(corpus(), {nli::Setting::AllSplit, "", 1});
  auto c = nli::make_split(corpus(), {nli::Setting::AllSplit, "", 2});
  EXPECT_EQ(a.manifest, b.manifest);
  EXPECT_NE(a.manifest, c.manifest);
}

TEST(Split, ManifestRoundTrip) {
  auto s = nli::make_split(corpus(), {nli::Setting::SubclassOut, "qs-some-no-bark", 5});
  std::stringstream ss;
  nli::write_manifest(ss, s);
  auto back = nli::read_manifest(ss, corpus());
  EXPECT_EQ(back.manifest, s.manifest);
  EXPECT_EQ(back.spec.setting, s.spec.setting);
  EXPECT_EQ(back.spec.target, s.spec.target);
  EXPECT_EQ(back.spec.seed, s.spec.seed);
  ASSERT_EQ(back.test.size(), s.test.size());
  for (std::size_t i = 0; i < s.test.size(); ++i) {
    EXPECT_EQ(back.test[i].target, s.test[i].target);
    EXPECT_EQ(back.test[i].held_out, s.test[i].held_out);
  }
}

TEST(Split, RejectsBadRequests) {
  EXPECT_THROW(nli::make_split(corpus(), {nli::Setting::SetOut, "", 1}), nli::DataError);
  EXPECT_THROW(nli::make_split(corpus(), {nli::Setting::SetOut, "qs-nope", 1}), nli::DataError);
  EXPECT_THROW(nli::make_split(corpus(), {nli::Setting::SetOut, "mono-arg1-all-bark", 1}), nli::DataError);
  EXPECT_THROW(nli::make_split(corpus(), {nli::Setting::AllSplit, "", 1, 0.0}), nli::DataError);
  std::istringstream bad("qs-most-no-bark\tsplit\t1\n");
  EXPECT_THROW(nli::read_manifest(bad, corpus()), nli::DataError);
}
