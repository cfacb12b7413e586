// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_CONSTELLATION_HPP
#define FAP_CONSTELLATION_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fap/types.hpp"

namespace fap {

enum class AlphabetKind { kBpsk, kQpsk, kQam };

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 20;

/// Equiprobable, zero-mean, unit-energy signal alphabet.
///
/// Points are listed in label order: point i carries the bit label i, and
/// labels map to amplitudes through a per-axis Gray code (in-phase bits are
/// the high half of the label).
class Constellation {
 public:
  Constellation(AlphabetKind kind, int order);

  AlphabetKind kind() const { return kind_; }
  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<cplx>& points() const { return points_; }
  const cplx& operator[](int i) const { return points_[static_cast<std::size_t>(i)]; }
  double bits_per_symbol() const { return std::log2(static_cast<double>(size())); }
  std::string name() const;

 private:
  AlphabetKind kind_;
  std::vector<cplx> points_;
};

namespace detail {

// Gray-coded PAM level for a label of `bits` bits: 0 -> -(L-1), ..., in Gray order.
inline int gray_pam_level(unsigned label, int bits) {
  unsigned binary = label;
  for (unsigned shift = label >> 1; shift != 0; shift >>= 1) binary ^= shift;
  const int levels = 1 << bits;
  return 2 * static_cast<int>(binary) - (levels - 1);
}

}  // namespace detail

inline Constellation::Constellation(AlphabetKind kind, int order) : kind_(kind) {
  switch (kind) {
    case AlphabetKind::kBpsk:
      if (order != 2) throw std::invalid_argument("BPSK requires M = 2, got " + std::to_string(order));
      points_ = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
      return;
    case AlphabetKind::kQpsk:
      if (order != 4) throw std::invalid_argument("QPSK requires M = 4, got " + std::to_string(order));
      break;
    case AlphabetKind::kQam:
      if (order != 4 && order != 16 && order != 64)
        throw std::invalid_argument("QAM supports M in {4, 16, 64}, got " + std::to_string(order));
      break;
  }
  int bits = 0;
  while ((1 << bits) < order) ++bits;
  const int half = bits / 2;
  const int side = 1 << half;
  // Average energy of a side x side lattice with odd coordinates.
  const double energy = 2.0 * (static_cast<double>(side) * side - 1.0) / 3.0;
  const double scale = 1.0 / std::sqrt(energy);
  points_.reserve(static_cast<std::size_t>(order));
  for (int label = 0; label < order; ++label) {
    const unsigned in_phase = static_cast<unsigned>(label) >> half;
    const unsigned quadrature = static_cast<unsigned>(label) & static_cast<unsigned>(side - 1);
    points_.emplace_back(scale * detail::gray_pam_level(in_phase, half),
                         scale * detail::gray_pam_level(quadrature, half));
  }
}

inline std::string Constellation::name() const {
  switch (kind_) {
    case AlphabetKind::kBpsk:
      return "bpsk";
    case AlphabetKind::kQpsk:
      return "qpsk";
    case AlphabetKind::kQam:
      return "qam" + std::to_string(size());
  }
  return "unknown";
}

inline Constellation build_constellation(AlphabetKind kind, int order) { return Constellation(kind, order); }

/// Parses "bpsk", "qpsk", "qam4", "qam16", "qam64".
inline Constellation constellation_from_name(std::string_view name) {
  if (name == "bpsk") return Constellation(AlphabetKind::kBpsk, 2);
  if (name == "qpsk") return Constellation(AlphabetKind::kQpsk, 4);
  if (name.starts_with("qam")) {
    const std::string digits(name.substr(3));
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos)
      return Constellation(AlphabetKind::kQam, std::stoi(digits));
  }
  throw std::invalid_argument("unknown constellation '" + std::string(name) + "'");
}

/// Largest q in {4, 2, 1} such that rotating every point by 2 pi / q maps the
/// alphabet onto itself, with the induced point permutation.
struct RotationSymmetry {
  int order = 1;
  std::vector<int> image;  // image[i] = index of exp(j 2 pi / order) * point i
};

inline RotationSymmetry rotation_symmetry(const Constellation& c) {
  for (int q : {4, 2}) {
    const cplx turn = q == 4 ? cplx(0.0, 1.0) : cplx(-1.0, 0.0);
    RotationSymmetry sym{q, std::vector<int>(static_cast<std::size_t>(c.size()), -1)};
    bool ok = true;
    for (int i = 0; i < c.size() && ok; ++i) {
      const cplx target = turn * c[i];
      for (int k = 0; k < c.size(); ++k) {
        if (std::abs(c[k] - target) < 1e-12) sym.image[static_cast<std::size_t>(i)] = k;
      }
      ok = sym.image[static_cast<std::size_t>(i)] >= 0;
    }
    if (ok) return sym;
  }
  RotationSymmetry none;
  none.image.resize(static_cast<std::size_t>(c.size()));
  for (int i = 0; i < c.size(); ++i) none.image[static_cast<std::size_t>(i)] = i;
  return none;
}

/// M^n, or throws CapExceeded when it is larger than `cap`.
inline std::uint64_t checked_enumeration_size(int order, int n, std::uint64_t cap = kDefaultEnumerationCap) {
  if (n < 1) throw std::invalid_argument("group size must be >= 1");
  std::uint64_t count = 1;
  for (int i = 0; i < n; ++i) {
    if (count > cap / static_cast<std::uint64_t>(order)) {
      throw CapExceeded("enumerating " + std::to_string(order) + "^" + std::to_string(n) +
                        " signal vectors exceeds the cap of " + std::to_string(cap) +
                        "; raise the cap to at least " + std::to_string(order) + "^" + std::to_string(n));
    }
    count *= static_cast<std::uint64_t>(order);
  }
  if (count > cap) {
    throw CapExceeded("enumeration of " + std::to_string(count) + " vectors exceeds the cap of " +
                      std::to_string(cap) + "; raise the cap to at least " + std::to_string(count));
  }
  return count;
}

/// All M^n signal vectors as the columns of an n x M^n matrix, lexicographic
/// in the point indices with the first entry most significant.
inline CMatrix enumerate_group_vectors(const Constellation& c, int n,
                                       std::uint64_t cap = kDefaultEnumerationCap) {
  const auto count = static_cast<Eigen::Index>(checked_enumeration_size(c.size(), n, cap));
  CMatrix vectors(n, count);
  const int m = c.size();
  for (Eigen::Index k = 0; k < count; ++k) {
    Eigen::Index rest = k;
    for (int i = n - 1; i >= 0; --i) {
      vectors(i, k) = c[static_cast<int>(rest % m)];
      rest /= m;
    }
  }
  return vectors;
}

}  // namespace fap

#endif  // FAP_CONSTELLATION_HPP
