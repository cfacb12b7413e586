// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_CHANNEL_MODEL_HPP
#define FAP_CHANNEL_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fap/random.hpp"
#include "fap/types.hpp"

namespace fap {

/// Rice factor with an explicit flag for the purely deterministic channel.
class RiceFactor {
 public:
  static RiceFactor finite(double k) {
    if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("Rice factor must be finite and >= 0");
    return RiceFactor(k, false);
  }
  static RiceFactor infinite() { return RiceFactor(0.0, true); }

  bool is_infinite() const { return infinite_; }
  double value() const {
    if (infinite_) throw std::logic_error("Rice factor is infinite");
    return value_;
  }
  /// K/(K+1), the share of power carried by the mean component.
  double los_fraction() const { return infinite_ ? 1.0 : value_ / (value_ + 1.0); }

  bool operator==(const RiceFactor&) const = default;

 private:
  RiceFactor(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

/// Statistical CSI of the jointly correlated Rician channel
///   H = U_R (G_tilde .* W) U_T^H + H_bar,   W_ij ~ CN(0, 1) IID,
/// held in normalized form: sum(G) = N_r N_t / (K + 1) and
/// ||H_bar||_F^2 = N_r N_t K / (K + 1), with G = G_tilde .* G_tilde.
class ChannelStatistics {
 public:
  /// Validates and normalizes. K = 0 drops H_bar; K = inf drops G_tilde.
  static ChannelStatistics create(CMatrix u_r, CMatrix u_t, RMatrix g_tilde, CMatrix h_bar, RiceFactor k);

  int n_r() const { return static_cast<int>(u_r_.rows()); }
  int n_t() const { return static_cast<int>(u_t_.rows()); }
  const CMatrix& u_r() const { return u_r_; }
  const CMatrix& u_t() const { return u_t_; }
  const RMatrix& g_tilde() const { return g_tilde_; }
  const RMatrix& coupling() const { return coupling_; }
  const CMatrix& h_bar() const { return h_bar_; }
  RiceFactor rice() const { return rice_; }

 private:
  ChannelStatistics() : rice_(RiceFactor::finite(0.0)) {}
  CMatrix u_r_;
  CMatrix u_t_;
  RMatrix g_tilde_;
  RMatrix coupling_;
  CMatrix h_bar_;
  RiceFactor rice_;
};

inline ChannelStatistics ChannelStatistics::create(CMatrix u_r, CMatrix u_t, RMatrix g_tilde, CMatrix h_bar,
                                                   RiceFactor k) {
  const Eigen::Index nr = u_r.rows();
  const Eigen::Index nt = u_t.rows();
  if (nr == 0 || nt == 0) throw std::invalid_argument("antenna counts must be positive");
  if (!is_unitary(u_r)) throw std::invalid_argument("U_R is not unitary");
  if (!is_unitary(u_t)) throw std::invalid_argument("U_T is not unitary");
  if (g_tilde.rows() != nr || g_tilde.cols() != nt)
    throw std::invalid_argument("G_tilde must be N_r x N_t");
  if (h_bar.rows() != nr || h_bar.cols() != nt) throw std::invalid_argument("H_bar must be N_r x N_t");
  if ((g_tilde.array() < 0.0).any() || !g_tilde.allFinite())
    throw std::invalid_argument("G_tilde must be finite and entrywise nonnegative");

  const double dims = static_cast<double>(nr * nt);
  ChannelStatistics s;
  s.u_r_ = std::move(u_r);
  s.u_t_ = std::move(u_t);
  s.rice_ = k;

  if (k.is_infinite()) {
    s.g_tilde_ = RMatrix::Zero(nr, nt);
  } else {
    const double scattered = g_tilde.squaredNorm();
    if (!(scattered > 0.0)) throw std::invalid_argument("G_tilde is all zero but the Rice factor is finite");
    const double target = dims / (k.value() + 1.0);
    s.g_tilde_ = g_tilde * std::sqrt(target / scattered);
  }

  if (!k.is_infinite() && k.value() == 0.0) {
    s.h_bar_ = CMatrix::Zero(nr, nt);
  } else {
    const double los = h_bar.squaredNorm();
    if (!(los > 0.0)) throw std::invalid_argument("H_bar is zero but the Rice factor is positive");
    s.h_bar_ = h_bar * std::sqrt(dims * k.los_fraction() / los);
  }
  s.coupling_ = s.g_tilde_.cwiseAbs2();
  return s;
}

inline ChannelStatistics new_statistics(CMatrix u_r, CMatrix u_t, RMatrix g_tilde, CMatrix h_bar, RiceFactor k) {
  return ChannelStatistics::create(std::move(u_r), std::move(u_t), std::move(g_tilde), std::move(h_bar), k);
}

/// One channel draw; deterministic in `seed`.
inline CMatrix sample_realization(const ChannelStatistics& s, std::uint64_t seed) {
  if (s.rice().is_infinite())
    throw std::invalid_argument("cannot sample a K = inf channel; it is deterministic and equal to H_bar");
  GaussianSource rng(seed);
  const CMatrix w = rng.complex_normal(s.n_r(), s.n_t());
  const CMatrix scattered = s.g_tilde().cast<cplx>().cwiseProduct(w);
  return s.u_r() * scattered * s.u_t().adjoint() + s.h_bar();
}

struct CorrelationPair {
  CMatrix r_t;       // E[(H - H_bar)^H (H - H_bar)]
  CMatrix r_r;       // E[(H - H_bar) (H - H_bar)^H]
  RVector gamma_t;   // column sums of G
  RVector gamma_r;   // row sums of G
};

inline CorrelationPair correlation_matrices(const ChannelStatistics& s) {
  CorrelationPair out;
  out.gamma_t = s.coupling().colwise().sum().transpose();
  out.gamma_r = s.coupling().rowwise().sum();
  out.r_t = s.u_t() * out.gamma_t.cast<cplx>().asDiagonal() * s.u_t().adjoint();
  out.r_r = s.u_r() * out.gamma_r.cast<cplx>().asDiagonal() * s.u_r().adjoint();
  return out;
}

// ---------------------------------------------------------------------------
// Kronecker special case: G = lambda_r lambda_t^T, H_bar = 0.

struct KroneckerStatistics {
  ChannelStatistics stats;
  RVector lambda_r;  // rescaled so that G = lambda_r lambda_t^T holds after normalization
  RVector lambda_t;

  CMatrix a_t() const { return stats.u_t() * lambda_t.cast<cplx>().asDiagonal() * stats.u_t().adjoint(); }
  CMatrix a_r() const { return stats.u_r() * lambda_r.cast<cplx>().asDiagonal() * stats.u_r().adjoint(); }
};

inline KroneckerStatistics kronecker_statistics(const RVector& lambda_r, const RVector& lambda_t, CMatrix u_r,
                                                CMatrix u_t) {
  if ((lambda_r.array() < 0.0).any() || (lambda_t.array() < 0.0).any())
    throw std::invalid_argument("Kronecker eigenvalue profiles must be nonnegative");
  const double sr = lambda_r.sum();
  const double st = lambda_t.sum();
  if (!(sr > 0.0) || !(st > 0.0)) throw std::invalid_argument("Kronecker eigenvalue profiles must not be all zero");
  if (u_r.rows() != lambda_r.size() || u_t.rows() != lambda_t.size())
    throw std::invalid_argument("eigenvalue profile length does not match the unitary basis");

  const double dims = static_cast<double>(lambda_r.size() * lambda_t.size());
  // split the normalization evenly between the two profiles
  const double root = std::sqrt(dims / (sr * st));
  return {ChannelStatistics::create(std::move(u_r), std::move(u_t), (lambda_r * lambda_t.transpose()).cwiseSqrt(),
                                    CMatrix::Zero(lambda_r.size(), lambda_t.size()), RiceFactor::finite(0.0)),
          lambda_r * root, lambda_t * root};
}

// ---------------------------------------------------------------------------
// Ray-based physical model on half-wavelength uniform linear arrays.

/// Unit-norm ULA response, [u]_k = exp(j pi k sin(angle)) / sqrt(n).
inline CVector steering_vector(int n, double angle) {
  CVector u(n);
  const double phase = std::numbers::pi * std::sin(angle);
  for (int k = 0; k < n; ++k) u(k) = std::polar(1.0 / std::sqrt(static_cast<double>(n)), phase * k);
  return u;
}

/// Virtual angle m of an n-element array: sin(angle) = 2 (m/n - 1/2).
inline double grid_angle(int n, int index) {
  return std::asin(2.0 * (static_cast<double>(index) / n - 0.5));
}

/// Unitary basis of steering vectors on the virtual-angle grid.
inline CMatrix virtual_basis(int n) {
  CMatrix u(n, n);
  for (int m = 0; m < n; ++m) u.col(m) = steering_vector(n, grid_angle(n, m));
  return u;
}

/// Grid index whose spatial frequency is closest (circularly) to the angle's.
inline int nearest_grid_index(int n, double angle) {
  const double f = 0.5 * std::sin(angle) + 0.5;
  const long idx = std::lround(f * n);
  return static_cast<int>(((idx % n) + n) % n);
}

struct RayPath {
  double attenuation = 1.0;   // c_l
  double path_length = 0.0;   // d_l
  double departure = 0.0;     // AoD (rad)
  double arrival = 0.0;       // AoA (rad)
};

struct RayGeometry {
  std::optional<RayPath> los;
  std::vector<RayPath> scattered;
  double wavelength = 1.0;
};

struct VirtualEntry {
  int rx = 0;
  int tx = 0;
  cplx value;
};

/// Virtual-domain bins before normalization.
struct RayBins {
  RMatrix coupling;                  // per-bin scattered power, N_r x N_t
  std::vector<VirtualEntry> h_hat;   // LOS bin(s)
  double los_power = 0.0;
  double scattered_power = 0.0;
};

inline cplx path_gain(const RayPath& p, double wavelength) {
  return std::polar(p.attenuation, -2.0 * std::numbers::pi * p.path_length / wavelength);
}

inline RayBins bin_rays(const RayGeometry& geo, int n_r, int n_t) {
  if (!geo.los && geo.scattered.empty()) throw std::invalid_argument("ray model needs at least one path");
  if (n_r < 1 || n_t < 1) throw std::invalid_argument("antenna counts must be positive");
  RayBins bins;
  bins.coupling = RMatrix::Zero(n_r, n_t);
  for (const RayPath& p : geo.scattered) {
    const int n = nearest_grid_index(n_r, p.arrival);
    const int m = nearest_grid_index(n_t, p.departure);
    bins.coupling(n, m) += p.attenuation * p.attenuation;
    bins.scattered_power += p.attenuation * p.attenuation;
  }
  if (geo.los) {
    bins.h_hat.push_back({nearest_grid_index(n_r, geo.los->arrival), nearest_grid_index(n_t, geo.los->departure),
                          path_gain(*geo.los, geo.wavelength)});
    bins.los_power = geo.los->attenuation * geo.los->attenuation;
  }
  return bins;
}

struct RayStatistics {
  ChannelStatistics stats;
  std::vector<VirtualEntry> h_hat;  // normalized so that H_bar = U_R H_hat U_T^H
};

inline CMatrix dense_virtual(const std::vector<VirtualEntry>& entries, int n_r, int n_t) {
  CMatrix h = CMatrix::Zero(n_r, n_t);
  for (const auto& e : entries) h(e.rx, e.tx) += e.value;
  return h;
}

inline RayStatistics ray_statistics(const RayGeometry& geo, int n_r, int n_t) {
  const RayBins bins = bin_rays(geo, n_r, n_t);
  const CMatrix u_r = virtual_basis(n_r);
  const CMatrix u_t = virtual_basis(n_t);
  const CMatrix h_hat = dense_virtual(bins.h_hat, n_r, n_t);
  RiceFactor k = RiceFactor::finite(0.0);
  if (bins.los_power > 0.0 && bins.scattered_power == 0.0) {
    k = RiceFactor::infinite();
  } else if (bins.los_power > 0.0) {
    k = RiceFactor::finite(bins.los_power / bins.scattered_power);
  }
  ChannelStatistics stats = ChannelStatistics::create(u_r, u_t, bins.coupling.cwiseSqrt(),
                                                      u_r * h_hat * u_t.adjoint(), k);
  std::vector<VirtualEntry> scaled = bins.h_hat;
  if (!scaled.empty()) {
    const double scale = std::sqrt(stats.h_bar().squaredNorm() / h_hat.squaredNorm());
    for (auto& e : scaled) e.value *= scale;
  }
  return {std::move(stats), std::move(scaled)};
}

// ---------------------------------------------------------------------------

/// Random jointly correlated Rician statistics: Haar U_R, U_T; coupling
/// G_nm = x_nm decay^(n+m) with x_nm ~ Exp(1); LOS component from a single
/// random-angle ULA path.
inline ChannelStatistics random_statistics(int n_r, int n_t, RiceFactor k, std::uint64_t seed,
                                           double decay = 0.6) {
  GaussianSource rng(seed);
  const CMatrix u_r = random_unitary(n_r, rng);
  const CMatrix u_t = random_unitary(n_t, rng);
  RMatrix g_tilde(n_r, n_t);
  for (int n = 0; n < n_r; ++n) {
    for (int m = 0; m < n_t; ++m) {
      const double x = -std::log(rng.uniform());
      g_tilde(n, m) = std::sqrt(x * std::pow(decay, n + m));
    }
  }
  const double aod = (2.0 * rng.uniform() - 1.0) * std::numbers::pi / 2.0;
  const double aoa = (2.0 * rng.uniform() - 1.0) * std::numbers::pi / 2.0;
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  const CMatrix h_bar = std::polar(1.0, phase) * steering_vector(n_r, aoa) * steering_vector(n_t, aod).adjoint();
  return ChannelStatistics::create(u_r, u_t, g_tilde, h_bar, k);
}

}  // namespace fap

#endif  // FAP_CHANNEL_MODEL_HPP
