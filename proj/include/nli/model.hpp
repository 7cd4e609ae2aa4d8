#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nli/errors.hpp"
#include "nli/grammar.hpp"
#include "nli/lexicon.hpp"
#include "nli/relation.hpp"
#include "nli/rng.hpp"
#include "nli/tensor.hpp"

namespace nli {

enum class Variant : std::uint8_t { Tied = 0, Untied = 1 };

inline std::string_view name(Variant v) { return v == Variant::Tied ? "tied" : "untied"; }

inline std::optional<Variant> variant_from_name(std::string_view s) {
  if (s == "tied") return Variant::Tied;
  if (s == "untied") return Variant::Untied;
  return std::nullopt;
}

struct CompositionParams {
  BilinearTensor A;  // N slices of N x N
  Matrix B;          // N x 2N
  Vec c;             // N
  bool operator==(const CompositionParams&) const = default;
};

struct ComparisonParams {
  BilinearTensor K;  // C slices of N x N
  Matrix L;          // C x 2N
  Vec m;             // C
  bool operator==(const ComparisonParams&) const = default;
};

struct ClassifierParams {
  Matrix W;  // 7 x C
  Vec b;     // 7
  bool operator==(const ClassifierParams&) const = default;
};

inline constexpr std::size_t kDefaultWordDim = 16;
inline constexpr std::size_t kDefaultComparisonDim = 45;

/// Every token the grammar can produce: quantifiers, `not`, predicates.
inline std::vector<std::string> default_vocabulary(const LexicalRelationTable& lex) {
  std::vector<std::string> v;
  for (Quantifier q : kAllQuantifiers) v.emplace_back(name(q));
  v.emplace_back(kNotToken);
  for (const auto& w : lex.words()) v.push_back(w);
  return v;
}

// All model parameters. The same type holds gradients and AdaGrad
// accumulators.
struct ModelParams {
  Variant variant = Variant::Tied;
  std::size_t n = kDefaultWordDim;
  std::size_t c = kDefaultComparisonDim;
  std::vector<std::string> vocab;
  Matrix V;  // |vocab| x N
  std::vector<CompositionParams> composition;  // 1, or one per CompositionContext
  ComparisonParams comparison;
  ClassifierParams classifier;

  static ModelParams zeros(std::vector<std::string> vocab, Variant variant, std::size_t n = kDefaultWordDim,
                           std::size_t c = kDefaultComparisonDim) {
    ModelParams p;
    p.variant = variant;
    p.n = n;
    p.c = c;
    p.vocab = std::move(vocab);
    p.V = Matrix(p.vocab.size(), n);
    p.composition.resize(variant == Variant::Tied ? 1 : kNumContexts);
    for (auto& cp : p.composition) cp = {BilinearTensor(n, n), Matrix(n, 2 * n), Vec(n, 0.0)};
    p.comparison = {BilinearTensor(c, n), Matrix(c, 2 * n), Vec(c, 0.0)};
    p.classifier = {Matrix(kNumRelations, c), Vec(kNumRelations, 0.0)};
    p.rebuild_index();
    return p;
  }

  /// Every entry drawn from U[-scale, scale], in for_each_tensor order.
  static ModelParams random(std::vector<std::string> vocab, Variant variant, std::uint64_t seed,
                            std::size_t n = kDefaultWordDim, std::size_t c = kDefaultComparisonDim,
                            double scale = 0.1) {
    ModelParams p = zeros(std::move(vocab), variant, n, c);
    Rng rng(derive_seed(seed, "init"));
    p.for_each_tensor([&](std::string_view, std::vector<double>& d) { init_uniform(d, rng, -scale, scale); });
    return p;
  }

  ModelParams zeros_like() const {
    ModelParams g = *this;
    g.for_each_tensor([](std::string_view, std::vector<double>& d) { std::fill(d.begin(), d.end(), 0.0); });
    return g;
  }

  template <typename F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  /// Visits matching tensors of two same-shaped parameter sets.
  template <typename F>
  void zip_tensors(const ModelParams& other, F&& f) {
    std::vector<const std::vector<double>*> theirs;
    other.for_each_tensor([&](std::string_view, const std::vector<double>& d) { theirs.push_back(&d); });
    std::size_t i = 0;
    for_each_tensor([&](std::string_view nm, std::vector<double>& d) {
      if (i >= theirs.size() || theirs[i]->size() != d.size())
        throw std::invalid_argument("dimension mismatch: parameter sets differ in shape");
      f(nm, d, *theirs[i++]);
    });
  }

  std::size_t parameter_count() const {
    std::size_t k = 0;
    for_each_tensor([&](std::string_view, const std::vector<double>& d) { k += d.size(); });
    return k;
  }

  std::size_t token_index(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) throw DataError("out-of-vocabulary token: " + std::string(token));
    return it->second;
  }

  bool has_token(std::string_view token) const { return index_.count(std::string(token)) != 0; }

  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < vocab.size(); ++i)
      if (!index_.emplace(vocab[i], i).second) throw DataError("duplicate vocabulary token: " + vocab[i]);
  }

  bool operator==(const ModelParams& o) const {
    return variant == o.variant && n == o.n && c == o.c && vocab == o.vocab && V == o.V &&
           composition == o.composition && comparison == o.comparison && classifier == o.classifier;
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& p, F& f) {
    f("V", p.V.data);
    static constexpr const char* kSetNames[] = {"composition", "composition[negation]",
                                                "composition[q-first-arg]", "composition[q-second-arg]"};
    for (std::size_t k = 0; k < p.composition.size(); ++k) {
      const std::string base = p.composition.size() == 1 ? kSetNames[0] : kSetNames[k + 1];
      f(base + ".A", p.composition[k].A.data);
      f(base + ".B", p.composition[k].B.data);
      f(base + ".c", p.composition[k].c);
    }
    f("comparison.K", p.comparison.K.data);
    f("comparison.L", p.comparison.L.data);
    f("comparison.m", p.comparison.m);
    f("classifier.W", p.classifier.W.data);
    f("classifier.b", p.classifier.b);
  }

  std::unordered_map<std::string, std::size_t> index_;
};

using Gradients = ModelParams;

inline std::size_t composition_slot(CompositionContext ctx, const ModelParams& p) {
  if (p.variant == Variant::Tied) return 0;
  if (p.composition.size() != static_cast<std::size_t>(kNumContexts))
    throw DataError("untied model needs one composition set per context");
  return static_cast<std::size_t>(ctx);
}

inline const CompositionParams& select_composition_params(CompositionContext ctx, const ModelParams& p) {
  return p.composition[composition_slot(ctx, p)];
}

inline const CompositionParams& select_composition_params(std::string_view ctx, const ModelParams& p) {
  for (auto c : {CompositionContext::Negation, CompositionContext::QuantifierFirst,
                 CompositionContext::QuantifierSecond})
    if (name(c) == ctx) return select_composition_params(c, p);
  throw DataError("unknown composition context: " + std::string(ctx));
}

/// tanh(xl^T A xr + B [xl; xr] + c)
inline Vec compose(const Vec& xl, const Vec& xr, const CompositionParams& p) {
  Vec pre = affine(p.B, xl, xr, p.c);
  Vec bl = bilinear(p.A, xl, xr);
  for (std::size_t i = 0; i < pre.size(); ++i) pre[i] = std::tanh(pre[i] + bl[i]);
  return pre;
}

inline Vec compare_preactivation(const Vec& xl, const Vec& xr, const ComparisonParams& p) {
  Vec pre = affine(p.L, xl, xr, p.m);
  Vec bl = bilinear(p.K, xl, xr);
  for (std::size_t i = 0; i < pre.size(); ++i) pre[i] += bl[i];
  return pre;
}

/// leaky_relu(xl^T K xr + L [xl; xr] + m)
inline Vec compare(const Vec& xl, const Vec& xr, const ComparisonParams& p) {
  return leaky_relu(compare_preactivation(xl, xr, p));
}

struct SideTrace {
  CompositionTree tree;
  std::vector<std::size_t> token;  // vocabulary row per leaf node
  std::vector<Vec> out;            // activation per node
};

struct ForwardTrace {
  SideTrace left, right;
  Vec comparison_pre;
  Vec comparison_out;
  Vec logits;
  Vec probs;
};

namespace detail {
inline SideTrace encode(const CompositionTree& tree, const ModelParams& p) {
  SideTrace s{tree, std::vector<std::size_t>(tree.nodes.size(), 0), std::vector<Vec>(tree.nodes.size())};
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& node = tree.nodes[i];
    if (node.is_leaf()) {
      s.token[i] = p.token_index(node.token);
      const double* row = p.V.row(s.token[i]);
      s.out[i].assign(row, row + p.n);
    } else {
      s.out[i] = compose(s.out[static_cast<std::size_t>(node.left)], s.out[static_cast<std::size_t>(node.right)],
                         select_composition_params(node.context, p));
    }
  }
  return s;
}

inline void backprop_side(const SideTrace& s, Vec d_root, const ModelParams& p, Gradients& g) {
  std::vector<Vec> d(s.out.size(), Vec(p.n, 0.0));
  d.back() = std::move(d_root);
  for (std::size_t i = s.out.size(); i-- > 0;) {
    const auto& node = s.tree.nodes[i];
    if (node.is_leaf()) {
      double* row = g.V.row(s.token[i]);
      for (std::size_t j = 0; j < p.n; ++j) row[j] += d[i][j];
      continue;
    }
    const std::size_t slot = composition_slot(node.context, p);
    const auto& cp = p.composition[slot];
    auto& gp = g.composition[slot];
    Vec dpre(p.n);
    for (std::size_t j = 0; j < p.n; ++j) dpre[j] = d[i][j] * (1.0 - s.out[i][j] * s.out[i][j]);
    const auto l = static_cast<std::size_t>(node.left), r = static_cast<std::size_t>(node.right);
    bilinear_backward(cp.A, s.out[l], s.out[r], dpre, gp.A, d[l], d[r]);
    affine_backward(cp.B, s.out[l], s.out[r], dpre, gp.B, d[l], d[r], gp.c);
  }
}
}  // namespace detail

inline ForwardTrace forward(const CompositionTree& left, const CompositionTree& right, const ModelParams& p) {
  ForwardTrace t;
  t.left = detail::encode(left, p);
  t.right = detail::encode(right, p);
  const Vec& xl = t.left.out.back();
  const Vec& xr = t.right.out.back();
  t.comparison_pre = compare_preactivation(xl, xr, p.comparison);
  t.comparison_out = leaky_relu(t.comparison_pre);
  t.logits = p.classifier.b;
  for (std::size_t k = 0; k < kNumRelations; ++k) {
    const double* w = p.classifier.W.row(k);
    double acc = 0.0;
    for (std::size_t j = 0; j < p.c; ++j) acc += w[j] * t.comparison_out[j];
    t.logits[k] += acc;
  }
  t.probs = softmax(t.logits);
  return t;
}

inline ForwardTrace forward(const Sentence& left, const Sentence& right, const ModelParams& p) {
  return forward(to_tree(left), to_tree(right), p);
}

inline double loss_of(const ForwardTrace& t, Relation gold) {
  return -std::log(t.probs[static_cast<std::size_t>(index_of(gold))]);
}

/// Adds d(-log p(gold))/d(theta) into `g`; returns the loss.
inline double backward(const ForwardTrace& t, Relation gold, const ModelParams& p, Gradients& g) {
  const auto gi = static_cast<std::size_t>(index_of(gold));
  Vec dlogits = t.probs;
  dlogits[gi] -= 1.0;
  Vec dcmp(p.c, 0.0);
  for (std::size_t k = 0; k < kNumRelations; ++k) {
    g.classifier.b[k] += dlogits[k];
    const double* w = p.classifier.W.row(k);
    double* gw = g.classifier.W.row(k);
    for (std::size_t j = 0; j < p.c; ++j) {
      gw[j] += dlogits[k] * t.comparison_out[j];
      dcmp[j] += dlogits[k] * w[j];
    }
  }
  for (std::size_t j = 0; j < p.c; ++j) dcmp[j] *= leaky_relu_grad(t.comparison_pre[j]);
  const Vec& xl = t.left.out.back();
  const Vec& xr = t.right.out.back();
  Vec dxl(p.n, 0.0), dxr(p.n, 0.0);
  bilinear_backward(p.comparison.K, xl, xr, dcmp, g.comparison.K, dxl, dxr);
  affine_backward(p.comparison.L, xl, xr, dcmp, g.comparison.L, dxl, dxr, g.comparison.m);
  detail::backprop_side(t.left, std::move(dxl), p, g);
  detail::backprop_side(t.right, std::move(dxr), p, g);
  return loss_of(t, gold);
}

inline std::pair<double, Gradients> backward(const ForwardTrace& t, Relation gold, const ModelParams& p) {
  Gradients g = p.zeros_like();
  double loss = backward(t, gold, p, g);
  return {loss, std::move(g)};
}

struct Prediction {
  Relation relation;
  bool tie;  // another relation had the same maximal probability
};

/// Argmax; ties go to the earliest relation in the fixed order.
inline Prediction predict(const Vec& probs) {
  std::size_t best = 0;
  bool tie = false;
  for (std::size_t k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) {
      best = k;
      tie = false;
    } else if (probs[k] == probs[best]) {
      tie = true;
    }
  }
  return {relation_from_index(static_cast<int>(best)), tie};
}

// ---------------------------------------------------------------------------
// Checkpoints. Little-endian layout:
//   8 bytes  magic "NLIRNTN\0"
//   u32      format version (1)
//   u32      N, u32 C, u32 |vocab|, u32 variant (0 tied, 1 untied)
//   per token: u32 byte length, UTF-8 bytes
//   per tensor in for_each_tensor order: u64 entry count, IEEE-754 f64 entries row-major

inline constexpr char kCheckpointMagic[8] = {'N', 'L', 'I', 'R', 'N', 'T', 'N', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("checkpoint truncated");
  return v;
}
}  // namespace detail

inline void save_checkpoint(std::ostream& os, const ModelParams& p) {
  os.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put<std::uint32_t>(os, kCheckpointVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p.n));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p.c));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p.vocab.size()));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(p.variant));
  for (const auto& t : p.vocab) {
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(t.size()));
    os.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  p.for_each_tensor([&](std::string_view, const std::vector<double>& d) {
    detail::put<std::uint64_t>(os, d.size());
    os.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
  });
}

inline ModelParams load_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
    throw DataError("not a checkpoint file");
  if (detail::get<std::uint32_t>(is) != kCheckpointVersion) throw DataError("unsupported checkpoint version");
  const auto n = detail::get<std::uint32_t>(is);
  const auto c = detail::get<std::uint32_t>(is);
  const auto nv = detail::get<std::uint32_t>(is);
  const auto variant = detail::get<std::uint32_t>(is);
  if (variant > 1 || n == 0 || c == 0) throw DataError("corrupt checkpoint header");
  std::vector<std::string> vocab(nv);
  for (auto& t : vocab) {
    const auto len = detail::get<std::uint32_t>(is);
    if (len > (1u << 16)) throw DataError("corrupt checkpoint vocabulary");
    t.resize(len);
    if (!is.read(t.data(), len)) throw DataError("checkpoint truncated");
  }
  ModelParams p = ModelParams::zeros(std::move(vocab), static_cast<Variant>(variant), n, c);
  p.for_each_tensor([&](std::string_view nm, std::vector<double>& d) {
    if (detail::get<std::uint64_t>(is) != d.size())
      throw DataError("checkpoint tensor " + std::string(nm) + " has the wrong size");
    if (!is.read(reinterpret_cast<char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double))))
      throw DataError("checkpoint truncated");
  });
  return p;
}

inline void save_checkpoint(const std::string& path, const ModelParams& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint " + path);
  save_checkpoint(os, p);
  if (!os) throw DataError("failed writing checkpoint " + path);
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  return load_checkpoint(is);
}

}  // namespace nli
