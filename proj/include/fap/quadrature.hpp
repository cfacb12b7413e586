// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_QUADRATURE_HPP
#define FAP_QUADRATURE_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "fap/types.hpp"

namespace fap {

inline constexpr std::uint64_t kDefaultTensorGridCap = std::uint64_t{1} << 20;

/// Gauss-Hermite rule for the weight exp(-x^2) (Golub-Welsch).
struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to sqrt(pi)
};

inline HermiteRule gauss_hermite_rule(int order) {
  if (order < 1) throw std::invalid_argument("Gauss-Hermite order must be >= 1");
  RMatrix jacobi = RMatrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(jacobi);
  HermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const double mu0 = std::sqrt(std::numbers::pi);
  for (int k = 0; k < order; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()(k);
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0;
  }
  return rule;
}

/// Tensor-product rule for E[f(n)], n ~ CN(0, I_dim). Each real coordinate
/// has variance 1/2, which is exactly the exp(-x^2) weight.
struct ComplexGaussianGrid {
  int dimension = 0;
  CMatrix nodes;        // dimension x count
  RVector weights;      // sum to 1
};

/// Nodes lighter than this are dropped from tensor grids (the dropped mass
/// is below 1e-8 for every grid within the default cap).
inline constexpr double kGridPruneWeight = 1e-12;

namespace detail {

inline ComplexGaussianGrid prune_grid(ComplexGaussianGrid grid) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < grid.weights.size(); ++j)
    if (grid.weights(j) >= kGridPruneWeight) keep.push_back(j);
  ComplexGaussianGrid out;
  out.dimension = grid.dimension;
  out.nodes.resize(grid.dimension, static_cast<Eigen::Index>(keep.size()));
  out.weights.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.nodes.col(static_cast<Eigen::Index>(i)) = grid.nodes.col(keep[i]);
    out.weights(static_cast<Eigen::Index>(i)) = grid.weights(keep[i]);
  }
  out.weights /= out.weights.sum();
  return out;
}

inline ComplexGaussianGrid build_grid(int order, int dimension) {
  const HermiteRule rule = gauss_hermite_rule(order);
  const int real_dims = 2 * dimension;
  std::int64_t count = 1;
  for (int i = 0; i < real_dims; ++i) count *= order;
  const double norm = std::pow(std::numbers::pi, -0.5 * real_dims);

  ComplexGaussianGrid grid;
  grid.dimension = dimension;
  grid.nodes.resize(dimension, count);
  grid.weights.resize(count);
  std::vector<int> digit(static_cast<std::size_t>(real_dims), 0);
  for (std::int64_t idx = 0; idx < count; ++idx) {
    double w = norm;
    for (int d = 0; d < real_dims; ++d) w *= rule.weights[static_cast<std::size_t>(digit[static_cast<std::size_t>(d)])];
    for (int c = 0; c < dimension; ++c) {
      grid.nodes(c, idx) = cplx(rule.nodes[static_cast<std::size_t>(digit[static_cast<std::size_t>(2 * c)])],
                                rule.nodes[static_cast<std::size_t>(digit[static_cast<std::size_t>(2 * c + 1)])]);
    }
    grid.weights(idx) = w;
    for (int d = 0; d < real_dims; ++d) {
      if (++digit[static_cast<std::size_t>(d)] < order) break;
      digit[static_cast<std::size_t>(d)] = 0;
    }
  }
  return prune_grid(std::move(grid));
}

}  // namespace detail

/// Cached tensor grid; throws CapExceeded when order^(2*dimension) > cap.
inline std::shared_ptr<const ComplexGaussianGrid> complex_gaussian_grid(int order, int dimension,
                                                                        std::uint64_t cap = kDefaultTensorGridCap) {
  if (dimension < 0) throw std::invalid_argument("grid dimension must be >= 0");
  const double log2_count = 2.0 * dimension * std::log2(static_cast<double>(order));
  if (log2_count > std::log2(static_cast<double>(cap)) + 1e-12) {
    throw CapExceeded("Gauss-Hermite grid of order " + std::to_string(order) + " in " + std::to_string(dimension) +
                      " complex dimensions exceeds the tensor-grid cap of " + std::to_string(cap));
  }
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const ComplexGaussianGrid>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{order, dimension}];
  if (!slot) slot = std::make_shared<const ComplexGaussianGrid>(detail::build_grid(order, dimension));
  return slot;
}

}  // namespace fap

#endif  // FAP_QUADRATURE_HPP
