// Command-line driver: generate, train, eval, gradcheck.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nli/datagen.hpp"
#include "nli/evaluate.hpp"
#include "nli/experiment.hpp"
#include "nli/lexicon.hpp"
#include "nli/model.hpp"
#include "nli/trainer.hpp"

#ifndef NLI_DEFAULT_LEXICON
#define NLI_DEFAULT_LEXICON "data/lexicon.tsv"
#endif

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Options {
  std::string lexicon = NLI_DEFAULT_LEXICON;
  std::string corpus;
  std::string setting = "all-split";
  std::string target;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string config;
  std::string out;
  std::string variant;
  int seeds = 1;
  std::string checkpoint;
  std::string manifest;
  bool inject_fault = false;
  bool quiet = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nli::TrainConfig resolve_config(const Options& o) {
  nli::TrainConfig cfg;
  if (!o.config.empty()) cfg = nli::load_config(o.config);
  if (o.seed_given) cfg.seed = o.seed;
  if (!o.variant.empty()) cfg.variant = *nli::variant_from_name(o.variant);
  return cfg;
}

int cmd_generate(const Options& o) {
  if (o.out.empty()) throw UsageError("generate needs --out");
  auto lex = nli::LexicalRelationTable::load(o.lexicon);
  nli::GeneratorConfig gc;
  gc.seed = o.seed;
  auto g = nli::generate_corpus(lex, gc);
  nli::write_generated(o.out, g);
  nli::write_generation_report(std::cout, g.corpus, g.log);
  if (!g.log.disagreements.empty()) {
    std::cerr << "error: " << g.log.disagreements.size() << " oracle disagreements, see "
              << (fs::path(o.out) / "disagreements.tsv").string() << "\n";
    return kData;
  }
  return kOk;
}

int cmd_train(const Options& o) {
  if (o.corpus.empty() || o.out.empty()) throw UsageError("train needs --corpus and --out");
  if (o.seeds < 1) throw UsageError("--seeds must be at least 1");
  const auto setting = *nli::setting_from_name(o.setting);
  auto lex = nli::LexicalRelationTable::load(o.lexicon);
  auto corpus = nli::load_corpus(o.corpus, &lex);
  const auto vocab = nli::default_vocabulary(lex);
  const nli::TrainConfig base = resolve_config(o);

  std::vector<std::pair<std::uint64_t, nli::EvaluationReport>> runs;
  for (int k = 0; k < o.seeds; ++k) {
    nli::TrainConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(k);
    fs::path dir = o.seeds == 1 ? fs::path(o.out) : fs::path(o.out) / ("seed-" + std::to_string(cfg.seed));
    auto progress = [&](const nli::EpochStats& s) {
      if (o.quiet) return;
      std::fprintf(stderr, "seed %llu epoch %d loss %.6f train %.4f test %.4f\n",
                   static_cast<unsigned long long>(cfg.seed), s.epoch, s.train_loss, s.train_acc, s.test_acc);
    };
    auto r = nli::run_experiment(corpus, vocab, setting, o.target, cfg, progress);
    nli::write_run(dir, r, cfg);
    std::cout << "== seed " << cfg.seed << " (" << dir.string() << ")\n";
    nli::write_report(std::cout, r.report);
    runs.emplace_back(cfg.seed, std::move(r.report));
  }
  if (o.seeds > 1) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
      if (runs[i].second.all_test.ratio() > runs[best].second.all_test.ratio()) best = i;
    nli::write_text_file(fs::path(o.out) / "summary.tsv", [&](std::ostream& os) {
      os << "seed\ttarget_only\tall_held_out\tall_test\tbest\n";
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i].second;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%llu\t%.6f\t%.6f\t%.6f\t%d\n", static_cast<unsigned long long>(runs[i].first),
                      r.target_only.ratio(), r.held_out.ratio(), r.all_test.ratio(), i == best ? 1 : 0);
        os << buf;
      }
    });
    std::cout << "best seed by all-test accuracy: " << runs[best].first << "\n";
  }
  return kOk;
}

int cmd_eval(const Options& o) {
  if (o.checkpoint.empty() || o.corpus.empty() || o.manifest.empty())
    throw UsageError("eval needs --checkpoint, --corpus and --manifest");
  auto lex = nli::LexicalRelationTable::load(o.lexicon);
  auto corpus = nli::load_corpus(o.corpus, &lex);
  std::ifstream mf(o.manifest);
  if (!mf) throw nli::DataError("cannot open manifest " + o.manifest);
  auto split = nli::read_manifest(mf, corpus);
  auto params = nli::load_checkpoint(o.checkpoint);
  auto report = nli::evaluate(params, split);
  nli::write_report(std::cout, report);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    nli::write_text_file(fs::path(o.out) / "report.txt", [&](std::ostream& os) { nli::write_report(os, report); });
    nli::write_text_file(fs::path(o.out) / "report.tsv",
                         [&](std::ostream& os) { nli::write_report_tsv(os, report); });
  }
  return kOk;
}

// Small random model (N=4, C=6) on random pairs with and without negation.
int cmd_gradcheck(const Options& o) {
  auto lex = nli::LexicalRelationTable::load(o.lexicon);
  const auto vocab = nli::default_vocabulary(lex);
  const nli::TrainConfig cfg = resolve_config(o);
  std::vector<nli::Variant> variants = {nli::Variant::Tied, nli::Variant::Untied};
  if (!o.variant.empty() || !o.config.empty()) variants = {cfg.variant};
  const std::uint64_t seed = cfg.seed;
  const auto examples = nli::random_examples(lex, 10, seed);
  double worst = 0.0;
  for (auto v : variants) {
    auto params = nli::ModelParams::random(vocab, v, seed, 4, 6, 0.5);
    nli::GradCheckOptions opt;
    opt.seed = seed;
    opt.lambda = cfg.l2_lambda;
    opt.pooling = cfg.gradient_pooling;
    if (o.inject_fault)
      opt.corrupt = [](nli::Gradients& g) {
        for (double& x : g.composition[0].B.data) x *= 1.5;
      };
    auto rep = nli::grad_check(params, examples, opt);
    std::cout << "variant\t" << nli::name(v) << "\n";
    nli::write_grad_check(std::cout, rep);
    worst = std::max(worst, rep.max_rel_error());
  }
  const bool ok = worst < 1e-4;
  std::cout << (ok ? "PASS" : "FAIL") << " max relative error " << worst << " (threshold 1e-4)\n";
  return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural-logic inference corpus generator and RNTN trainer"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--lexicon", o.lexicon, "lexical relation table (TSV)")->check(CLI::ExistingFile);
  };
  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "random seed")->each([&](const std::string&) { o.seed_given = true; });
  };

  auto* gen = app.add_subcommand("generate", "generate the labeled corpus");
  add_common(gen);
  add_seed(gen);
  gen->add_option("--out", o.out, "output directory")->required();

  const std::vector<std::string> settings = {"all-split", "set-out", "subclass-out", "pair-out"};
  auto* tr = app.add_subcommand("train", "train and evaluate in one experimental setting");
  add_common(tr);
  add_seed(tr);
  tr->add_option("--corpus", o.corpus, "corpus directory or corpus.tsv")->required();
  tr->add_option("--setting", o.setting, "experimental setting")->check(CLI::IsMember(settings));
  tr->add_option("--target", o.target, "target dataset id");
  tr->add_option("--config", o.config, "key=value training config")->check(CLI::ExistingFile);
  tr->add_option("--out", o.out, "output directory")->required();
  tr->add_option("--variant", o.variant, "tied or untied composition")->check(CLI::IsMember({"tied", "untied"}));
  tr->add_option("--seeds", o.seeds, "number of consecutive seeds to run");
  tr->add_flag("--quiet", o.quiet, "no per-epoch progress");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a recorded split");
  add_common(ev);
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint.bin")->required()->check(CLI::ExistingFile);
  ev->add_option("--corpus", o.corpus, "corpus directory or corpus.tsv")->required();
  ev->add_option("--manifest", o.manifest, "manifest.tsv of the run")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "write report files here");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
  add_common(gc);
  add_seed(gc);
  gc->add_option("--config", o.config, "variant, seed and L2 settings")->check(CLI::ExistingFile);
  gc->add_option("--variant", o.variant, "check one variant only")->check(CLI::IsMember({"tied", "untied"}));
  gc->add_flag("--inject-fault", o.inject_fault, "corrupt the composition B gradient (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*tr) return cmd_train(o);
    if (*ev) return cmd_eval(o);
    if (*gc) return cmd_gradcheck(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const nli::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const nli::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
