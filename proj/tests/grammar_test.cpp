#include <gtest/gtest.h>

#include "nli/grammar.hpp"
#include "nli/lexicon.hpp"
#include "nli/rng.hpp"

using nli::CompositionContext;
using nli::Quantifier;
using nli::Sentence;

namespace {
const nli::LexicalRelationTable& lex() {
  static const auto t = nli::LexicalRelationTable::load(NLI_DEFAULT_LEXICON);
  return t;
}
}  // namespace

TEST(Grammar, ParsesPlainAndNegatedArguments) {
  EXPECT_EQ(nli::parse_sentence("(all puppy) bark"), (Sentence{Quantifier::All, {"puppy", false}, {"bark", false}}));
  EXPECT_EQ(nli::parse_sentence("(no cat) (not bark)"), (Sentence{Quantifier::No, {"cat", false}, {"bark", true}}));
  EXPECT_EQ(nli::parse_sentence("  ( most ( not   dog ) )  mobile "),
            (Sentence{Quantifier::Most, {"dog", true}, {"mobile", false}}));
}

TEST(Grammar, SerializesCanonically) {
  EXPECT_EQ(nli::serialize(Sentence{Quantifier::Some, {"dog", false}, {"mobile", false}}), "(some dog) mobile");
  EXPECT_EQ(nli::serialize(Sentence{Quantifier::No, {"puppy", false}, {"bark", true}}), "(no puppy) (not bark)");
}

TEST(Grammar, RoundTripOverRandomSentences) {
  nli::Rng rng(5);
  const auto& w = lex().words();
  for (int i = 0; i < 500; ++i) {
    Sentence s{nli::kAllQuantifiers[rng.index(6)], {w[rng.index(w.size())], rng.index(2) == 1},
               {w[rng.index(w.size())], rng.index(2) == 1}};
    EXPECT_EQ(nli::parse_sentence(nli::serialize(s), lex()), s);
  }
}

TEST(Grammar, RejectsMalformedInput) {
  for (const char* bad : {"(all dog bark", "all dog) bark", "(all dog) bark)", "(all (not (not dog))) bark",
                          "(all dog) some", "(not dog) bark", "(all dog) bark extra", "", "(all) bark",
                          "(all dog) (not)", "(dog all) bark"})
    EXPECT_THROW(nli::parse_sentence(bad), nli::ParseError) << bad;
}

TEST(Grammar, LexiconChecksPredicates) {
  EXPECT_THROW(nli::parse_sentence("(all unicorn) bark", lex()), nli::ParseError);
  EXPECT_NO_THROW(nli::parse_sentence("(all unicorn) bark"));
}

TEST(Grammar, TreeShape) {
  auto t = nli::to_tree(nli::parse_sentence("(all dog) bark"));
  EXPECT_EQ(t.to_string(), "((all dog) bark)");
  EXPECT_EQ(t.nodes.size(), 5u);
  EXPECT_EQ(t.nodes.back().context, CompositionContext::QuantifierSecond);
  EXPECT_EQ(t.depth(), 3);
  EXPECT_EQ(t.leaves(), (std::vector<std::string>{"all", "dog", "bark"}));

  auto n = nli::to_tree(nli::parse_sentence("(no (not cat)) (not bark)"));
  EXPECT_EQ(n.to_string(), "((no (not cat)) (not bark))");
  int negation_nodes = 0;
  for (const auto& node : n.nodes) {
    if (node.is_leaf()) continue;
    if (node.context == CompositionContext::Negation) {
      ++negation_nodes;
      EXPECT_EQ(n.nodes[static_cast<std::size_t>(node.left)].token, "not");
    }
  }
  EXPECT_EQ(negation_nodes, 2);
  EXPECT_EQ(n.depth(), 4);
}

TEST(Grammar, ChildrenPrecedeParents) {
  auto t = nli::to_tree(nli::parse_sentence("(two (not hippo)) (not mobile)"));
  for (std::size_t i = 0; i < t.nodes.size(); ++i)
    if (!t.nodes[i].is_leaf()) {
      EXPECT_LT(static_cast<std::size_t>(t.nodes[i].left), i);
      EXPECT_LT(static_cast<std::size_t>(t.nodes[i].right), i);
    }
}
