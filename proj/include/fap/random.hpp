// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_RANDOM_HPP
#define FAP_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "fap/types.hpp"

namespace fap {

/// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix_seed(parent ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// Seeded Gaussian source. The transform is written out (instead of using
/// std::normal_distribution) so streams are identical across standard
/// library implementations.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53 random bits in (0, 1]
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
  cplx complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  CMatrix complex_normal(Eigen::Index rows, Eigen::Index cols) {
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = complex_normal();
    return m;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Haar-distributed unitary matrix (QR of a complex Gaussian with the
/// diagonal phases of R folded back into Q).
inline CMatrix random_unitary(Eigen::Index n, GaussianSource& rng) {
  const CMatrix z = rng.complex_normal(n, n);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

inline CMatrix random_unitary(Eigen::Index n, std::uint64_t seed) {
  GaussianSource rng(seed);
  return random_unitary(n, rng);
}

}  // namespace fap

#endif  // FAP_RANDOM_HPP
