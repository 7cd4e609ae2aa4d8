#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nli/datagen.hpp"
#include "nli/errors.hpp"
#include "nli/model.hpp"
#include "nli/rng.hpp"

namespace nli {

// How per-example gradients of a minibatch are combined before the L2
// term is added.
enum class Pooling : std::uint8_t { Mean, Sum };

inline std::string_view name(Pooling p) { return p == Pooling::Mean ? "mean" : "sum"; }

struct TrainConfig {
  std::size_t batch_size = 32;
  double base_learning_rate = 0.2;
  double l2_lambda = 0.0002;
  int max_epochs = 500;
  int patience = 50;  // stop after this many epochs without a new best train accuracy
  std::uint64_t seed = 1;
  Variant variant = Variant::Tied;
  double adagrad_epsilon = 1e-6;
  std::size_t word_dim = kDefaultWordDim;
  std::size_t comparison_dim = kDefaultComparisonDim;
  double init_scale = 0.1;
  Pooling gradient_pooling = Pooling::Mean;

  bool operator==(const TrainConfig&) const = default;
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream ss(v);
  T out{};
  ss >> out;
  if (!ss || !ss.eof()) throw DataError("config: bad value for " + key + ": " + v);
  return out;
}
}  // namespace detail

/// Applies one `key = value` setting; unknown keys are rejected.
inline void set_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "batch_size") {
    c.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "base_learning_rate") {
    c.base_learning_rate = parse_number<double>(key, value);
  } else if (key == "l2_lambda") {
    c.l2_lambda = parse_number<double>(key, value);
  } else if (key == "max_epochs") {
    c.max_epochs = parse_number<int>(key, value);
  } else if (key == "patience") {
    c.patience = parse_number<int>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "variant") {
    auto v = variant_from_name(value);
    if (!v) throw DataError("config: variant must be tied or untied");
    c.variant = *v;
  } else if (key == "adagrad_epsilon") {
    c.adagrad_epsilon = parse_number<double>(key, value);
  } else if (key == "word_dim") {
    c.word_dim = parse_number<std::size_t>(key, value);
  } else if (key == "comparison_dim") {
    c.comparison_dim = parse_number<std::size_t>(key, value);
  } else if (key == "init_scale") {
    c.init_scale = parse_number<double>(key, value);
  } else if (key == "gradient_pooling") {
    if (value == "mean") c.gradient_pooling = Pooling::Mean;
    else if (value == "sum") c.gradient_pooling = Pooling::Sum;
    else throw DataError("config: gradient_pooling must be mean or sum");
  } else {
    throw DataError("config: unknown key " + key);
  }
  if (c.batch_size == 0 || c.word_dim == 0 || c.comparison_dim == 0 || c.max_epochs < 0 || c.patience < 1)
    throw DataError("config: " + key + " out of range");
}

inline TrainConfig parse_config(std::istream& in, TrainConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("config line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline TrainConfig load_config(const std::string& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  return parse_config(in, base);
}

inline void write_config(std::ostream& os, const TrainConfig& c) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "batch_size = " << c.batch_size << "\n"
     << "base_learning_rate = " << num(c.base_learning_rate) << "\n"
     << "l2_lambda = " << num(c.l2_lambda) << "\n"
     << "max_epochs = " << c.max_epochs << "\n"
     << "patience = " << c.patience << "\n"
     << "seed = " << c.seed << "\n"
     << "variant = " << name(c.variant) << "\n"
     << "adagrad_epsilon = " << num(c.adagrad_epsilon) << "\n"
     << "word_dim = " << c.word_dim << "\n"
     << "comparison_dim = " << c.comparison_dim << "\n"
     << "init_scale = " << num(c.init_scale) << "\n"
     << "gradient_pooling = " << name(c.gradient_pooling) << "\n";
}

// ---------------------------------------------------------------------------

/// A labeled pair with its composition trees built once.
struct Example {
  CompositionTree left, right;
  Relation gold;
};

inline Example make_example(const LabeledPair& p) { return {to_tree(p.left), to_tree(p.right), p.gold}; }

inline std::vector<Example> make_examples(const std::vector<LabeledPair>& pairs) {
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(make_example(p));
  return out;
}

// Random sentence pairs with random gold labels for gradient checks. The
// first example negates every argument, the second none; the rest negate
// each argument with probability 1/2.
inline std::vector<Example> random_examples(const LexicalRelationTable& lex, std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random-examples"));
  const auto& words = lex.words();
  auto pick = [&](int mode) {
    Predicate p{words[static_cast<std::size_t>(rng.index(words.size()))], false};
    p.negated = mode == 0 || (mode == 2 && rng.index(2) == 1);
    return p;
  };
  std::vector<Example> out;
  for (std::size_t i = 0; i < count; ++i) {
    const int mode = i == 0 ? 0 : i == 1 ? 1 : 2;
    auto sentence = [&] {
      Sentence s;
      s.quantifier = kAllQuantifiers[static_cast<std::size_t>(rng.index(kAllQuantifiers.size()))];
      s.arg1 = pick(mode);
      s.arg2 = pick(mode);
      return s;
    };
    Sentence a = sentence();
    Sentence b = sentence();
    out.push_back({to_tree(a), to_tree(b), relation_from_index(static_cast<int>(rng.index(kNumRelations)))});
  }
  return out;
}

inline double squared_norm(const ModelParams& p) {
  double s = 0.0;
  p.for_each_tensor([&](std::string_view, const std::vector<double>& d) {
    for (double v : d) s += v * v;
  });
  return s;
}

/// Adds lambda * theta to g.
inline void add_l2(Gradients& g, const ModelParams& p, double lambda) {
  if (lambda == 0.0) return;
  g.zip_tensors(p, [&](std::string_view, std::vector<double>& gd, const std::vector<double>& pd) {
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += lambda * pd[i];
  });
}

inline void scale(Gradients& g, double s) {
  g.for_each_tensor([&](std::string_view, std::vector<double>& d) {
    for (double& v : d) v *= s;
  });
}

// Pooled per-example gradients of -log p(gold) plus lambda * theta, and
// the mean unregularized loss. Examples are accumulated in batch order.
inline std::pair<double, Gradients> batch_gradient(const std::vector<const Example*>& batch, const ModelParams& p,
                                                   double lambda, Pooling pooling = Pooling::Mean) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  Gradients g = p.zeros_like();
  double loss = 0.0;
  for (const Example* e : batch) loss += backward(forward(e->left, e->right, p), e->gold, p, g);
  if (pooling == Pooling::Mean) scale(g, 1.0 / static_cast<double>(batch.size()));
  add_l2(g, p, lambda);
  return {loss / static_cast<double>(batch.size()), std::move(g)};
}

inline std::pair<double, Gradients> batch_gradient(const std::vector<Example>& batch, const ModelParams& p,
                                                   double lambda, Pooling pooling = Pooling::Mean) {
  std::vector<const Example*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  return batch_gradient(ptrs, p, lambda, pooling);
}

/// Accumulated squared gradients, same shapes as the parameters.
using AdaGradState = ModelParams;

inline void adagrad_update(ModelParams& p, const Gradients& g, AdaGradState& state, double learning_rate,
                           double epsilon) {
  std::vector<std::vector<double>*> st;
  state.for_each_tensor([&](std::string_view, std::vector<double>& d) { st.push_back(&d); });
  std::size_t k = 0;
  p.zip_tensors(g, [&](std::string_view, std::vector<double>& pd, const std::vector<double>& gd) {
    std::vector<double>& sd = *st[k++];
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double gi = gd[i];
      if (gi == 0.0) continue;
      sd[i] += gi * gi;
      pd[i] -= learning_rate / (std::sqrt(sd[i]) + epsilon) * gi;
    }
  });
}

inline void adagrad_update(ModelParams& p, const Gradients& g, AdaGradState& state, const TrainConfig& c) {
  adagrad_update(p, g, state, c.base_learning_rate, c.adagrad_epsilon);
}

struct Accuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double loss_sum = 0.0;

  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  double mean_loss() const { return total == 0 ? 0.0 : loss_sum / static_cast<double>(total); }
};

inline Accuracy measure(const std::vector<Example>& examples, const ModelParams& p) {
  Accuracy a;
  for (const auto& e : examples) {
    auto t = forward(e.left, e.right, p);
    a.loss_sum += loss_of(t, e.gold);
    a.correct += predict(t.probs).relation == e.gold ? 1 : 0;
    ++a.total;
  }
  return a;
}

struct EpochStats {
  int epoch;
  double train_loss;
  double train_acc;
  double test_acc;
  double train_loss_reg;  // train_loss plus the per-example share of lambda/2 * |theta|^2
};

inline void write_history(std::ostream& os, const std::vector<EpochStats>& h) {
  os << "epoch\ttrain_loss\ttrain_acc\ttest_acc\ttrain_loss_reg\n";
  char buf[160];
  for (const auto& s : h) {
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\t%.17g\n", s.epoch, s.train_loss, s.train_acc, s.test_acc,
                  s.train_loss_reg);
    os << buf;
  }
}

struct TrainResult {
  ModelParams best;  // highest train accuracy, ties to lower train loss
  int best_epoch = 0;
  std::vector<EpochStats> history;  // epoch 0 is the initial model
  bool early_stopped = false;
};

// Minibatch AdaGrad. Each epoch visits the training set in a fresh order
// drawn from (seed, epoch); batches are consecutive slices of that order.
// `on_epoch` is called after every history row.
inline TrainResult train(const std::vector<Example>& train_set, const std::vector<Example>& test_set,
                         const std::vector<std::string>& vocab, const TrainConfig& cfg,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
  if (train_set.empty()) throw DataError("training set is empty");
  ModelParams p = ModelParams::random(vocab, cfg.variant, cfg.seed, cfg.word_dim, cfg.comparison_dim, cfg.init_scale);
  AdaGradState state = p.zeros_like();

  TrainResult res;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_acc = -1.0;
  int since_best = 0;

  auto record = [&](int epoch) {
    Accuracy tr = measure(train_set, p);
    Accuracy te = measure(test_set, p);
    const double per_example = cfg.gradient_pooling == Pooling::Mean ? 1.0 : 1.0 / static_cast<double>(cfg.batch_size);
    EpochStats s{epoch, tr.mean_loss(), tr.ratio(), te.ratio(),
                 tr.mean_loss() + 0.5 * cfg.l2_lambda * squared_norm(p) * per_example};
    if (!std::isfinite(s.train_loss))
      throw NumericError("training diverged: non-finite train loss at epoch " + std::to_string(epoch));
    res.history.push_back(s);
    if (on_epoch) on_epoch(s);
    const bool improved = s.train_acc > best_acc;
    since_best = improved ? 0 : since_best + 1;
    if (improved || (s.train_acc == best_acc && s.train_loss < best_loss)) {
      best_acc = s.train_acc;
      best_loss = s.train_loss;
      res.best = p;
      res.best_epoch = epoch;
    }
  };
  record(0);

  std::vector<const Example*> order;
  for (const auto& e : train_set) order.push_back(&e);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "epoch/" + std::to_string(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const Example*> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                        order.begin() + static_cast<std::ptrdiff_t>(
                                                            std::min(order.size(), start + cfg.batch_size)));
      auto [loss, g] = batch_gradient(batch, p, cfg.l2_lambda, cfg.gradient_pooling);
      if (!std::isfinite(loss))
        throw NumericError("training diverged: non-finite batch loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(start / cfg.batch_size));
      adagrad_update(p, g, state, cfg);
    }
    record(epoch);
    if (since_best >= cfg.patience) {
      res.early_stopped = true;
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a rectifier kink
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  double epsilon = 0.0;
  std::vector<TensorCheck> tensors;

  double max_rel_error() const {
    double m = 0.0;
    for (const auto& t : tensors) m = std::max(m, t.max_rel_error);
    return m;
  }
};

struct GradCheckOptions {
  double epsilon = 1e-6;
  double lambda = 0.0;
  Pooling pooling = Pooling::Sum;
  std::size_t samples_per_tensor = 40;  // bias vectors are always checked in full
  std::uint64_t seed = 1;
  double denominator_floor = 1e-5;
  // Applied to the analytic gradient before comparison (negative controls).
  std::function<void(Gradients&)> corrupt;
};

namespace detail {
inline double objective(const std::vector<Example>& ex, const ModelParams& p, double lambda, Pooling pooling,
                        std::vector<bool>* signs) {
  double j = 0.0;
  if (signs) signs->clear();
  for (const auto& e : ex) {
    auto t = forward(e.left, e.right, p);
    j += loss_of(t, e.gold);
    if (signs)
      for (double v : t.comparison_pre) signs->push_back(v >= 0.0);
  }
  if (pooling == Pooling::Mean) j /= static_cast<double>(ex.size());
  return j + 0.5 * lambda * squared_norm(p);
}

inline bool is_bias(std::string_view name) {
  return name.ends_with(".c") || name.ends_with(".m") || name.ends_with(".b");
}
}  // namespace detail

// Compares the analytic gradient of the pooled loss + lambda/2 |theta|^2
// with central differences. Relative error is |a - n| / max(|a| + |n|, floor).
inline GradCheckReport grad_check(const ModelParams& params, const std::vector<Example>& examples,
                                  const GradCheckOptions& opt = {}) {
  auto [mean_loss, analytic] = batch_gradient(examples, params, opt.lambda, opt.pooling);
  (void)mean_loss;
  if (opt.corrupt) opt.corrupt(analytic);

  std::vector<const std::vector<double>*> grads;
  analytic.for_each_tensor([&](std::string_view, const std::vector<double>& d) { grads.push_back(&d); });

  GradCheckReport rep;
  rep.epsilon = opt.epsilon;
  ModelParams p = params;
  std::vector<bool> base_signs, plus_signs, minus_signs;
  detail::objective(examples, p, opt.lambda, opt.pooling, &base_signs);
  Rng rng(derive_seed(opt.seed, "gradcheck"));

  std::vector<std::pair<std::string, std::vector<double>*>> tensors;
  p.for_each_tensor([&](std::string_view nm, std::vector<double>& d) { tensors.emplace_back(std::string(nm), &d); });
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto& [nm, data] = tensors[t];
    TensorCheck tc{nm};
    std::vector<std::size_t> idx(data->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (!detail::is_bias(nm) && idx.size() > opt.samples_per_tensor) {
      rng.shuffle(idx);
      idx.resize(opt.samples_per_tensor);
      std::sort(idx.begin(), idx.end());
    }
    for (std::size_t i : idx) {
      const double orig = (*data)[i];
      (*data)[i] = orig + opt.epsilon;
      const double jp = detail::objective(examples, p, opt.lambda, opt.pooling, &plus_signs);
      (*data)[i] = orig - opt.epsilon;
      const double jm = detail::objective(examples, p, opt.lambda, opt.pooling, &minus_signs);
      (*data)[i] = orig;
      if (plus_signs != base_signs || minus_signs != base_signs) {
        ++tc.skipped;
        continue;
      }
      const double numeric = (jp - jm) / (2.0 * opt.epsilon);
      const double a = (*grads[t])[i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max(std::abs(a) + std::abs(numeric), opt.denominator_floor);
      tc.max_abs_error = std::max(tc.max_abs_error, abs_err);
      tc.max_rel_error = std::max(tc.max_rel_error, rel);
      ++tc.checked;
    }
    rep.tensors.push_back(std::move(tc));
  }
  return rep;
}

struct SweepPoint {
  double epsilon;
  double max_rel_error;
  double max_abs_error;
};

/// grad_check at each epsilon, same sampled entries throughout.
inline std::vector<SweepPoint> epsilon_sweep(const ModelParams& params, const std::vector<Example>& examples,
                                             const std::vector<double>& epsilons, GradCheckOptions opt = {}) {
  std::vector<SweepPoint> out;
  for (double e : epsilons) {
    opt.epsilon = e;
    auto r = grad_check(params, examples, opt);
    double abs_err = 0.0;
    for (const auto& t : r.tensors) abs_err = std::max(abs_err, t.max_abs_error);
    out.push_back({e, r.max_rel_error(), abs_err});
  }
  return out;
}

inline void write_grad_check(std::ostream& os, const GradCheckReport& r) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "epsilon\t%.3g\n", r.epsilon);
  os << buf;
  os << "tensor\tchecked\tskipped\tmax_rel_error\tmax_abs_error\n";
  for (const auto& t : r.tensors) {
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%zu\t%.3e\t%.3e\n", t.name.c_str(), t.checked, t.skipped,
                  t.max_rel_error, t.max_abs_error);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "max_rel_error\t%.3e\n", r.max_rel_error());
  os << buf;
}

}  // namespace nli
