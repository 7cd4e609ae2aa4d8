#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "nli/datagen.hpp"
#include "nli/evaluate.hpp"
#include "nli/model.hpp"
#include "nli/trainer.hpp"

namespace nli {

struct RunResult {
  Split split;
  TrainResult training;
  EvaluationReport report;
};

// make_split + train + evaluate. The split and the initialization both
// follow `cfg.seed`.
inline RunResult run_experiment(const Corpus& corpus, const std::vector<std::string>& vocab, Setting setting,
                                const std::string& target, const TrainConfig& cfg,
                                const std::function<void(const EpochStats&)>& on_epoch = {}) {
  SplitSpec spec{setting, target, cfg.seed};
  RunResult r{make_split(corpus, spec), {}, {}};
  std::vector<LabeledPair> test;
  test.reserve(r.split.test.size());
  for (const auto& t : r.split.test) test.push_back(t.pair);
  r.training = train(make_examples(r.split.train), make_examples(test), vocab, cfg, on_epoch);
  r.report = evaluate(r.training.best, r.split);
  return r;
}

inline void write_text_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  body(os);
  if (!os) throw DataError("failed writing " + path.string());
}

/// checkpoint.bin, history.tsv, manifest.tsv, config.txt, report.txt, report.tsv
inline void write_run(const std::filesystem::path& dir, const RunResult& r, const TrainConfig& cfg) {
  std::filesystem::create_directories(dir);
  save_checkpoint((dir / "checkpoint.bin").string(), r.training.best);
  write_text_file(dir / "history.tsv", [&](std::ostream& os) { write_history(os, r.training.history); });
  write_text_file(dir / "manifest.tsv", [&](std::ostream& os) { write_manifest(os, r.split); });
  write_text_file(dir / "config.txt", [&](std::ostream& os) { write_config(os, cfg); });
  write_text_file(dir / "report.txt", [&](std::ostream& os) {
    write_report(os, r.report);
    os << "best epoch: " << r.training.best_epoch << " of " << r.training.history.back().epoch
       << (r.training.early_stopped ? " (early stop)" : "") << "\n";
  });
  write_text_file(dir / "report.tsv", [&](std::ostream& os) { write_report_tsv(os, r.report); });
}

/// corpus.tsv, datasets.tsv, generation-report.txt, disagreements.tsv
inline void write_generated(const std::filesystem::path& dir, const GeneratedCorpus& g) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "corpus.tsv", [&](std::ostream& os) { write_corpus(os, g.corpus); });
  write_text_file(dir / "datasets.tsv", [&](std::ostream& os) { write_dataset_index(os, g.corpus); });
  write_text_file(dir / "generation-report.txt",
                  [&](std::ostream& os) { write_generation_report(os, g.corpus, g.log); });
  write_text_file(dir / "disagreements.tsv", [&](std::ostream& os) {
    for (const auto& d : g.log.disagreements) os << d << "\n";
  });
}

}  // namespace nli
