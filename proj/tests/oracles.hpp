#pragma once

// Reference implementations used only by tests: exhaustive set-theoretic
// join, triple-loop kernels, and plain central differences.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "nli/model.hpp"
#include "nli/relation.hpp"
#include "nli/tensor.hpp"

namespace oracle {

using nli::Relation;

/// Relations attainable between x and z over all non-empty, non-universal
/// x, y, z in universes of size 1..max_universe with r1(x, y), r2(y, z).
inline std::array<std::array<std::set<Relation>, nli::kNumRelations>, nli::kNumRelations> attainable_joins(
    int max_universe) {
  std::array<std::array<std::set<Relation>, nli::kNumRelations>, nli::kNumRelations> out;
  for (int n = 1; n <= max_universe; ++n) {
    const std::uint64_t universe = (std::uint64_t{1} << n) - 1;
    std::vector<std::uint64_t> sets;
    for (std::uint64_t s = 1; s < universe; ++s) sets.push_back(s);
    const std::size_t m = sets.size();
    std::vector<Relation> rel(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) rel[i * m + j] = nli::relation_of_sets(sets[i], sets[j], universe);
    for (std::size_t x = 0; x < m; ++x)
      for (std::size_t y = 0; y < m; ++y) {
        const auto r1 = static_cast<std::size_t>(nli::index_of(rel[x * m + y]));
        for (std::size_t z = 0; z < m; ++z)
          out[r1][static_cast<std::size_t>(nli::index_of(rel[y * m + z]))].insert(rel[x * m + z]);
      }
  }
  return out;
}

/// The join read off attainable_joins: the single attainable relation, else #.
inline Relation brute_force_join(const std::set<Relation>& attainable) {
  return attainable.size() == 1 ? *attainable.begin() : Relation::Independence;
}

inline nli::Vec naive_bilinear(const nli::BilinearTensor& t, const nli::Vec& xl, const nli::Vec& xr) {
  nli::Vec out(t.slices, 0.0);
  for (std::size_t k = 0; k < t.slices; ++k)
    for (std::size_t i = 0; i < t.n; ++i)
      for (std::size_t j = 0; j < t.n; ++j) out[k] += xl[i] * t(k, i, j) * xr[j];
  return out;
}

inline nli::Vec naive_affine(const nli::Matrix& m, const nli::Vec& xl, const nli::Vec& xr, const nli::Vec& b) {
  nli::Vec cat(xl);
  cat.insert(cat.end(), xr.begin(), xr.end());
  nli::Vec out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    out[i] = b[i];
    for (std::size_t j = 0; j < m.cols; ++j) out[i] += m(i, j) * cat[j];
  }
  return out;
}

/// Central difference of f with respect to every entry of one tensor.
inline std::vector<double> numeric_gradient(nli::ModelParams& p, std::vector<double>& tensor,
                                            const std::function<double(const nli::ModelParams&)>& f,
                                            double eps = 1e-6) {
  std::vector<double> g(tensor.size());
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const double orig = tensor[i];
    tensor[i] = orig + eps;
    const double up = f(p);
    tensor[i] = orig - eps;
    const double down = f(p);
    tensor[i] = orig;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

inline double rel_error(double a, double b, double floor = 1e-5) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), floor);
}

}  // namespace oracle
