#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "nli/datagen.hpp"
#include "nli/model.hpp"
#include "nli/relation.hpp"

namespace nli {

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;

  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  void add(bool ok) {
    correct += ok ? 1 : 0;
    ++total;
  }
};

struct DatasetScore {
  Relation gold = Relation::Independence;
  DatasetRole role = DatasetRole::Split;
  Tally tally;
  std::array<std::size_t, kNumRelations> predicted{};
};

struct EvaluationReport {
  Setting setting = Setting::AllSplit;
  std::string target;
  Tally target_only;
  Tally held_out;
  Tally split_test;  // 15% portions of the split datasets
  Tally all_test;
  std::map<std::string, DatasetScore> per_dataset;
  std::array<std::array<std::size_t, kNumRelations>, kNumRelations> confusion{};  // [gold][predicted]
  std::array<std::size_t, kNumRelations> target_histogram{};
  std::vector<std::string> ties;

  /// Most frequent prediction on the target; ties to the earlier relation.
  Relation target_majority() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumRelations; ++k)
      if (target_histogram[k] > target_histogram[best]) best = k;
    return relation_from_index(static_cast<int>(best));
  }
};

inline EvaluationReport evaluate(const ModelParams& p, const Split& split) {
  EvaluationReport r;
  r.setting = split.spec.setting;
  r.target = split.spec.target;
  std::map<std::string, DatasetRole> roles;
  for (const auto& [id, role, flags] : split.manifest) roles[id] = role;
  for (const auto& ex : split.test) {
    auto t = forward(ex.pair.left, ex.pair.right, p);
    auto pred = predict(t.probs);
    const bool ok = pred.relation == ex.pair.gold;
    if (pred.tie)
      r.ties.push_back(serialize(ex.pair.left) + "\t" + serialize(ex.pair.right) + "\t" + symbol(pred.relation));
    const auto g = static_cast<std::size_t>(index_of(ex.pair.gold));
    const auto k = static_cast<std::size_t>(index_of(pred.relation));
    r.all_test.add(ok);
    if (ex.held_out) r.held_out.add(ok);
    else r.split_test.add(ok);
    if (ex.target) {
      r.target_only.add(ok);
      ++r.target_histogram[k];
    }
    ++r.confusion[g][k];
    auto& d = r.per_dataset[ex.pair.dataset_id];
    d.gold = ex.pair.gold;
    d.role = roles.count(ex.pair.dataset_id) ? roles[ex.pair.dataset_id] : DatasetRole::Split;
    d.tally.add(ok);
    ++d.predicted[k];
  }
  return r;
}

namespace detail {
inline std::string pct(const Tally& t) {
  char buf[64];
  if (t.total == 0) return "n/a";
  std::snprintf(buf, sizeof buf, "%.1f%% (%zu/%zu)", 100.0 * t.ratio(), t.correct, t.total);
  return buf;
}
}  // namespace detail

inline void write_report(std::ostream& os, const EvaluationReport& r) {
  os << "setting: " << name(r.setting) << "\n";
  os << "target: " << (r.target.empty() ? "-" : r.target) << "\n";
  os << "target dataset only:   " << detail::pct(r.target_only) << "\n";
  os << "all held out datasets: " << detail::pct(r.held_out) << "\n";
  os << "all test data:         " << detail::pct(r.all_test) << "\n";
  if (!r.target.empty()) {
    os << "target predictions:";
    for (Relation k : kAllRelations)
      os << " " << symbol(k) << "=" << r.target_histogram[static_cast<std::size_t>(index_of(k))];
    os << "\n";
  }
  os << "confusion (rows gold, columns predicted):\n    ";
  for (Relation k : kAllRelations) os << "\t" << symbol(k);
  os << "\n";
  for (Relation g : kAllRelations) {
    os << "    " << symbol(g);
    for (Relation k : kAllRelations)
      os << "\t" << r.confusion[static_cast<std::size_t>(index_of(g))][static_cast<std::size_t>(index_of(k))];
    os << "\n";
  }
  os << "argmax ties: " << r.ties.size() << "\n";
  for (const auto& t : r.ties) os << "  tie\t" << t << "\n";
}

/// Machine-readable form: subset rows, then one row per dataset.
inline void write_report_tsv(std::ostream& os, const EvaluationReport& r) {
  char buf[64];
  auto ratio = [&](const Tally& t) {
    std::snprintf(buf, sizeof buf, "%.17g", t.ratio());
    return std::string(buf);
  };
  os << "kind\tname\trole\tgold\tcorrect\ttotal\taccuracy\tpredicted\n";
  auto subset = [&](const char* nm, const Tally& t) {
    os << "subset\t" << nm << "\t-\t-\t" << t.correct << "\t" << t.total << "\t" << ratio(t) << "\t-\n";
  };
  subset("target-only", r.target_only);
  subset("all-held-out", r.held_out);
  subset("split-test", r.split_test);
  subset("all-test", r.all_test);
  for (const auto& [id, d] : r.per_dataset) {
    os << "dataset\t" << id << "\t" << name(d.role) << "\t" << symbol(d.gold) << "\t" << d.tally.correct << "\t"
       << d.tally.total << "\t" << ratio(d.tally) << "\t";
    for (Relation k : kAllRelations) {
      if (k != kAllRelations.front()) os << ",";
      os << symbol(k) << "=" << d.predicted[static_cast<std::size_t>(index_of(k))];
    }
    os << "\n";
  }
}

}  // namespace nli
