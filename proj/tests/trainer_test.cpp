#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nli/datagen.hpp"
#include "nli/trainer.hpp"

using nli::ModelParams;
using nli::Relation;
using nli::Variant;

namespace {
const nli::LexicalRelationTable& lex() {
  static const auto t = nli::LexicalRelationTable::load(NLI_DEFAULT_LEXICON);
  return t;
}
const std::vector<std::string>& vocab() {
  static const auto v = nli::default_vocabulary(lex());
  return v;
}
nli::Example E(const char* a, const char* b, Relation r) {
  return {nli::to_tree(nli::parse_sentence(a, lex())), nli::to_tree(nli::parse_sentence(b, lex())), r};
}

std::vector<nli::Example> toy_set() {
  return {E("(all dog) bark", "(some dog) bark", Relation::Forward),
          E("(some dog) bark", "(all dog) bark", Relation::Reverse),
          E("(some cat) mobile", "(no cat) mobile", Relation::Negation),
          E("(all cat) bark", "(no cat) (not bark)", Relation::Equivalence),
          E("(most hippo) bark", "(no hippo) bark", Relation::Alternation),
          E("(some hippo) bark", "(some hippo) (not bark)", Relation::Independence),
          E("(some puppy) mobile", "(some dog) mobile", Relation::Forward),
          E("(no dog) European", "(no puppy) European", Relation::Forward),
          E("(two dog) mobile", "(all dog) mobile", Relation::Independence),
          E("(some (not cat)) bark", "(all (not cat)) (not bark)", Relation::Cover)};
}

nli::TrainConfig small_config() {
  nli::TrainConfig c;
  c.word_dim = 6;
  c.comparison_dim = 10;
  c.max_epochs = 20;
  c.batch_size = 4;
  return c;
}

double flat_max_abs_diff(const ModelParams& a, const ModelParams& b) {
  std::vector<const std::vector<double>*> bs;
  b.for_each_tensor([&](std::string_view, const std::vector<double>& d) { bs.push_back(&d); });
  double m = 0.0;
  std::size_t k = 0;
  a.for_each_tensor([&](std::string_view, const std::vector<double>& d) {
    for (std::size_t i = 0; i < d.size(); ++i) m = std::max(m, std::abs(d[i] - (*bs[k])[i]));
    ++k;
  });
  return m;
}
}  // namespace

TEST(Config, ParsesKeyValueLinesAndComments) {
  std::istringstream in(
      "# training\n"
      "batch_size = 8\n"
      "base_learning_rate=0.05   # inline comment\n"
      "\n"
      "variant = untied\n"
      "gradient_pooling = sum\n");
  auto c = nli::parse_config(in);
  EXPECT_EQ(c.batch_size, 8u);
  EXPECT_DOUBLE_EQ(c.base_learning_rate, 0.05);
  EXPECT_EQ(c.variant, Variant::Untied);
  EXPECT_EQ(c.gradient_pooling, nli::Pooling::Sum);
  EXPECT_EQ(c.l2_lambda, nli::TrainConfig{}.l2_lambda);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {"learning_rate = 0.1\n", "batch_size = 0\n", "batch_size = eight\n", "variant = shared\n",
                           "patience = 0\n", "no equals sign\n", "gradient_pooling = max\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(nli::parse_config(in), nli::DataError) << text;
  }
}

TEST(Config, WriteThenParseIsIdentity) {
  nli::TrainConfig c;
  c.base_learning_rate = 0.1234567890123;
  c.variant = Variant::Untied;
  c.seed = 99;
  std::stringstream ss;
  nli::write_config(ss, c);
  EXPECT_EQ(nli::parse_config(ss), c);
}

TEST(Trainer, BatchOfOneEqualsBackward) {
  auto p = ModelParams::random(vocab(), Variant::Tied, 2, 4, 5, 0.5);
  auto ex = toy_set();
  auto [loss, g] = nli::batch_gradient(std::vector<nli::Example>{ex[0]}, p, 0.0);
  auto [l2, g2] = nli::backward(nli::forward(ex[0].left, ex[0].right, p), ex[0].gold, p);
  EXPECT_EQ(loss, l2);
  EXPECT_EQ(g, g2);
}

TEST(Trainer, PoolingIsSumOrMeanOfPerExampleGradients) {
  auto p = ModelParams::random(vocab(), Variant::Untied, 2, 4, 5, 0.5);
  auto ex = toy_set();
  auto [ls, sum] = nli::batch_gradient(ex, p, 0.0, nli::Pooling::Sum);
  auto [lm, mean] = nli::batch_gradient(ex, p, 0.0, nli::Pooling::Mean);
  EXPECT_DOUBLE_EQ(ls, lm);
  auto manual = p.zeros_like();
  for (const auto& e : ex) nli::backward(nli::forward(e.left, e.right, p), e.gold, p, manual);
  EXPECT_LT(flat_max_abs_diff(manual, sum), 1e-14);
  nli::scale(manual, 1.0 / static_cast<double>(ex.size()));
  EXPECT_LT(flat_max_abs_diff(manual, mean), 1e-15);
}

TEST(Trainer, L2TermAddsLambdaTheta) {
  auto p = ModelParams::random(vocab(), Variant::Tied, 2, 4, 5, 0.5);
  auto ex = toy_set();
  auto [l0, g0] = nli::batch_gradient(ex, p, 0.0);
  auto [l1, g1] = nli::batch_gradient(ex, p, 0.25);
  EXPECT_EQ(l0, l1);
  nli::scale(g0, -1.0);
  nli::scale(g1, 1.0);
  // g1 - g0 == 0.25 * theta
  std::vector<const std::vector<double>*> th;
  p.for_each_tensor([&](std::string_view, const std::vector<double>& d) { th.push_back(&d); });
  std::size_t k = 0;
  g1.zip_tensors(g0, [&](std::string_view, std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i] + b[i], 0.25 * (*th[k])[i], 1e-15);
    ++k;
  });
}

TEST(Trainer, AdaGradStepExamples) {
  auto p = ModelParams::zeros({"a"}, Variant::Tied, 1, 1);
  auto g = p.zeros_like();
  auto state = p.zeros_like();
  p.V(0, 0) = 1.0;
  g.V(0, 0) = 2.0;
  g.classifier.b[3] = -0.5;
  nli::adagrad_update(p, g, state, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(state.V(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(p.V(0, 0), 1.0 - 0.1 / 2.0 * 2.0);
  EXPECT_DOUBLE_EQ(p.classifier.b[3], 0.1);
  EXPECT_DOUBLE_EQ(p.classifier.b[0], 0.0);  // zero gradient: untouched
  EXPECT_DOUBLE_EQ(state.classifier.b[0], 0.0);
  g.V(0, 0) = 0.0;
  nli::adagrad_update(p, g, state, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(p.V(0, 0), 0.9);
  g.V(0, 0) = 3.0;
  nli::adagrad_update(p, g, state, 0.1, 0.0);
  EXPECT_DOUBLE_EQ(state.V(0, 0), 13.0);
  EXPECT_DOUBLE_EQ(p.V(0, 0), 0.9 - 0.1 / std::sqrt(13.0) * 3.0);
}

TEST(Trainer, AccumulatorIsMonotone) {
  auto cfg = small_config();
  auto p = ModelParams::random(vocab(), Variant::Tied, 1, cfg.word_dim, cfg.comparison_dim);
  auto state = p.zeros_like();
  auto ex = toy_set();
  auto prev = state;
  for (int step = 0; step < 10; ++step) {
    auto [l, g] = nli::batch_gradient(ex, p, cfg.l2_lambda);
    nli::adagrad_update(p, g, state, cfg);
    std::vector<const std::vector<double>*> pv;
    prev.for_each_tensor([&](std::string_view, const std::vector<double>& d) { pv.push_back(&d); });
    std::size_t k = 0;
    state.for_each_tensor([&](std::string_view, const std::vector<double>& d) {
      for (std::size_t i = 0; i < d.size(); ++i) ASSERT_GE(d[i], (*pv[k])[i]);
      ++k;
    });
    prev = state;
  }
}

TEST(Trainer, InitialLossIsNearLogSeven) {
  auto cfg = small_config();
  cfg.max_epochs = 0;
  cfg.word_dim = 16;
  cfg.comparison_dim = 45;
  auto r = nli::train(toy_set(), {}, vocab(), cfg);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].epoch, 0);
  EXPECT_NEAR(r.history[0].train_loss, std::log(7.0), 0.05);
}

TEST(Trainer, FitsATinyTrainingSet) {
  nli::TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.batch_size = 10;
  auto r = nli::train(toy_set(), toy_set(), vocab(), cfg);
  const auto& best = r.history[static_cast<std::size_t>(r.best_epoch)];
  EXPECT_DOUBLE_EQ(best.train_acc, 1.0);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_DOUBLE_EQ(nli::measure(toy_set(), r.best).ratio(), 1.0);
}

TEST(Trainer, TrainingIsDeterministic) {
  auto cfg = small_config();
  auto a = nli::train(toy_set(), toy_set(), vocab(), cfg);
  auto b = nli::train(toy_set(), toy_set(), vocab(), cfg);
  std::ostringstream ha, hb;
  nli::write_history(ha, a.history);
  nli::write_history(hb, b.history);
  EXPECT_EQ(ha.str(), hb.str());
  EXPECT_EQ(a.best, b.best);
  cfg.seed = 2;
  auto c = nli::train(toy_set(), toy_set(), vocab(), cfg);
  EXPECT_NE(a.best, c.best);
}

TEST(Trainer, BestCheckpointAndEarlyStop) {
  auto cfg = small_config();
  cfg.max_epochs = 400;
  cfg.patience = 5;
  cfg.batch_size = 10;
  auto r = nli::train(toy_set(), {}, vocab(), cfg);
  EXPECT_TRUE(r.early_stopped);
  double best_acc = -1.0;
  int best_epoch = -1;
  for (const auto& s : r.history)
    if (s.train_acc > best_acc) {
      best_acc = s.train_acc;
      best_epoch = s.epoch;
    }
  EXPECT_EQ(r.history.back().epoch - best_epoch, cfg.patience);
  EXPECT_DOUBLE_EQ(r.history[static_cast<std::size_t>(r.best_epoch)].train_acc, best_acc);
  for (const auto& s : r.history)
    if (s.train_acc == best_acc) {
      EXPECT_GE(s.train_loss, r.history[static_cast<std::size_t>(r.best_epoch)].train_loss);
    }
  EXPECT_DOUBLE_EQ(nli::measure(toy_set(), r.best).ratio(), best_acc);
}

TEST(Trainer, DivergenceRaisesNumericError) {
  auto cfg = small_config();
  cfg.base_learning_rate = 1e200;
  cfg.adagrad_epsilon = 0.0;
  cfg.init_scale = 1e120;
  EXPECT_THROW(nli::train(toy_set(), {}, vocab(), cfg), nli::NumericError);
}

TEST(Trainer, EmptyTrainingSetIsRejected) {
  EXPECT_THROW(nli::train({}, toy_set(), vocab(), small_config()), nli::DataError);
}

// ---- gradient check ----

namespace {
nli::GradCheckOptions gc_options(nli::Pooling pooling, double lambda) {
  nli::GradCheckOptions o;
  o.pooling = pooling;
  o.lambda = lambda;
  return o;
}
}  // namespace

// Summed over many examples the objective grows, and so does its rounding
// noise at a fixed epsilon; the sum path is therefore checked one example at
// a time and the mean path on the whole batch.
TEST(GradCheck, PassesForBothVariantsAndPoolings) {
  const auto ex = nli::random_examples(lex(), 10, 3);
  for (Variant v : {Variant::Tied, Variant::Untied}) {
    auto p = ModelParams::random(vocab(), v, 3, 4, 6, 0.5);
    auto rep = nli::grad_check(p, ex, gc_options(nli::Pooling::Mean, 0.0002));
    EXPECT_LT(rep.max_rel_error(), 1e-4) << name(v) << " mean";
    std::size_t checked = 0;
    for (const auto& t : rep.tensors) {
      checked += t.checked;
      EXPECT_GT(t.checked, 0u) << t.name;
    }
    EXPECT_GT(checked, 200u);
    for (std::size_t i = 0; i < ex.size(); ++i) {
      auto one = nli::grad_check(p, {ex[i]}, gc_options(nli::Pooling::Sum, 0.0002));
      EXPECT_LT(one.max_rel_error(), 1e-4) << name(v) << " sum, example " << i;
    }
  }
}

TEST(GradCheck, RandomExamplesIncludeNegation) {
  const auto ex = nli::random_examples(lex(), 10, 3);
  auto has_not = [](const nli::CompositionTree& t) {
    for (const auto& leaf : t.leaves())
      if (leaf == "not") return true;
    return false;
  };
  EXPECT_TRUE(has_not(ex[0].left) && has_not(ex[0].right));
  EXPECT_FALSE(has_not(ex[1].left) || has_not(ex[1].right));
}

TEST(GradCheck, DetectsAnInjectedFault) {
  const auto ex = nli::random_examples(lex(), 10, 3);
  auto p = ModelParams::random(vocab(), Variant::Tied, 3, 4, 6, 0.5);
  auto opt = gc_options(nli::Pooling::Mean, 0.0);
  opt.corrupt = [](nli::Gradients& g) {
    for (double& x : g.composition[0].B.data) x *= 1.5;
  };
  auto rep = nli::grad_check(p, ex, opt);
  EXPECT_GT(rep.max_rel_error(), 1e-2);
  for (const auto& t : rep.tensors)
    if (t.name != "composition.B") {
      EXPECT_LT(t.max_rel_error, 1e-4) << t.name;
    }
}

// Truncation error dominates for large epsilon, rounding error for tiny
// epsilon, so the absolute error is smallest in between.
TEST(GradCheck, EpsilonSweepHasAnInteriorMinimum) {
  const auto ex = nli::random_examples(lex(), 6, 4);
  auto p = ModelParams::random(vocab(), Variant::Untied, 4, 4, 6, 0.5);
  auto sweep = nli::epsilon_sweep(p, ex, {1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-9}, gc_options(nli::Pooling::Sum, 0.0));
  ASSERT_EQ(sweep.size(), 6u);
  double interior = std::min({sweep[1].max_abs_error, sweep[2].max_abs_error, sweep[3].max_abs_error});
  EXPECT_GT(sweep[0].max_abs_error, interior);
  EXPECT_GT(sweep[5].max_abs_error, interior);
}

TEST(GradCheck, ReportFormat) {
  const auto ex = nli::random_examples(lex(), 2, 1);
  auto p = ModelParams::random(vocab(), Variant::Tied, 1, 2, 3, 0.5);
  std::ostringstream os;
  nli::write_grad_check(os, nli::grad_check(p, ex));
  EXPECT_NE(os.str().find("tensor\tchecked\tskipped"), std::string::npos);
  EXPECT_NE(os.str().find("classifier.b\t7\t"), std::string::npos);
}
