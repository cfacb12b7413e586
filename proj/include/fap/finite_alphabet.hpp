// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_FINITE_ALPHABET_HPP
#define FAP_FINITE_ALPHABET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fap/channel_model.hpp"
#include "fap/constellation.hpp"
#include "fap/partition.hpp"
#include "fap/quadrature.hpp"
#include "fap/random.hpp"
#include "fap/types.hpp"

namespace fap {

inline constexpr int kDefaultHermiteOrder = 16;

/// How E_n[.] over n ~ CN(0, I) is evaluated. The noise dimension is the
/// rank of the effective channel and is resolved per call.
struct NoiseExpectation {
  enum class Method { kGaussHermite, kMonteCarlo, kAuto };

  Method method = Method::kAuto;
  int order = kDefaultHermiteOrder;        // per real dimension
  std::int64_t samples = 1000;
  std::uint64_t seed = 0x6a09e667f3bcc909ULL;
  int max_quadrature_dimension = 2;        // kAuto switches to Monte Carlo above this
  std::uint64_t node_budget = 4096;        // kAuto lowers the order to stay within this many nodes
  std::uint64_t work_budget = 65536;       // kAuto: nodes x hypotheses above this use Monte Carlo
  std::uint64_t grid_cap = kDefaultTensorGridCap;

  static NoiseExpectation gauss_hermite(int order = kDefaultHermiteOrder) {
    NoiseExpectation ne;
    ne.method = Method::kGaussHermite;
    ne.order = order;
    return ne;
  }
  static NoiseExpectation monte_carlo(std::int64_t samples, std::uint64_t seed) {
    NoiseExpectation ne;
    ne.method = Method::kMonteCarlo;
    ne.samples = samples;
    ne.seed = seed;
    return ne;
  }

  NoiseExpectation with_seed(std::uint64_t s) const {
    NoiseExpectation ne = *this;
    ne.seed = s;
    return ne;
  }

  void validate() const {
    if (order < 1) throw std::invalid_argument("Gauss-Hermite order must be >= 1");
    if (method != Method::kGaussHermite && samples < 100)
      throw std::invalid_argument("Monte Carlo noise expectation needs at least 100 samples");
  }

  /// Order used for a grid of the given complex dimension.
  int order_for(int dimension) const {
    if (method == Method::kGaussHermite || dimension < 1) return order;
    int o = order;
    while (o > 2 && std::pow(static_cast<double>(o), 2.0 * dimension) > static_cast<double>(node_budget)) --o;
    return o;
  }

  bool uses_quadrature(int dimension, std::uint64_t hypotheses = 1) const {
    switch (method) {
      case Method::kGaussHermite:
        return true;
      case Method::kMonteCarlo:
        return false;
      case Method::kAuto: {
        if (dimension > max_quadrature_dimension) return false;
        const double nodes = std::pow(static_cast<double>(order_for(dimension)), 2.0 * dimension);
        return nodes * static_cast<double>(hypotheses) <= static_cast<double>(work_budget);
      }
    }
    return true;
  }
};

/// MI and error covariance of z = F d + n, d uniform over the enumerated
/// alphabet vectors.
struct AlphabetMetrics {
  double mi_bits = 0.0;
  CMatrix error_cov;   // E[(d - E[d|z])(d - E[d|z])^H]
  double std_err = 0.0;
};

namespace detail {

/// R with R^H R = F^H F: the upper Cholesky factor when F has full column
/// rank, otherwise the upper-trapezoidal factor of the nonzero eigen-part
/// with a positive real diagonal. The MI only depends on F^H F, and this
/// canonical form makes quadrature and sampled results independent of the
/// output basis of F and continuous in F^H F.
inline CMatrix reduce_channel(const CMatrix& f) {
  const CMatrix gram = hermitian_part(f.adjoint() * f);
  const Eigen::Index n = gram.rows();
  const double scale = gram.diagonal().real().maxCoeff();
  if (!(scale > 0.0)) return CMatrix(0, n);
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() == Eigen::Success) {
    const CMatrix upper = llt.matrixU();
    if (upper.diagonal().real().minCoeff() > 1e-7 * std::sqrt(scale)) return upper;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  const RVector& values = eig.eigenvalues();
  const double top = values.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = n - 1; k >= 0; --k)
    if (values(k) > 1e-12 * top) keep.push_back(k);
  const auto rank = static_cast<Eigen::Index>(keep.size());
  CMatrix root(rank, n);
  for (Eigen::Index r = 0; r < rank; ++r) {
    const auto k = keep[static_cast<std::size_t>(r)];
    root.row(r) = std::sqrt(values(k)) * eig.eigenvectors().col(k).adjoint();
  }
  // Eigenvector phases are arbitrary; fix the row basis by a QR step.
  const Eigen::HouseholderQR<CMatrix> qr(root);
  CMatrix out = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index r = 0; r < rank; ++r) {
    const double mag = std::abs(out(r, r));
    if (mag > 0.0) out.row(r) *= std::conj(out(r, r)) / mag;
  }
  return out;
}

struct RotationOrbits {
  std::vector<Eigen::Index> representatives;
  std::vector<double> multiplicity;
};

/// Orbits of the enumerated vectors under a global rotation of the alphabet.
/// Uses the lexicographic layout of enumerate_group_vectors.
inline RotationOrbits rotation_orbits(const Constellation& c, int n, Eigen::Index count) {
  const RotationSymmetry sym = rotation_symmetry(c);
  const int m = c.size();
  auto rotate = [&](Eigen::Index k) {
    Eigen::Index out = 0;
    Eigen::Index place = 1;
    for (int i = 0; i < n; ++i) {
      out += place * sym.image[static_cast<std::size_t>(k % m)];
      k /= m;
      place *= m;
    }
    return out;
  };
  RotationOrbits orbits;
  std::vector<bool> seen(static_cast<std::size_t>(count), false);
  for (Eigen::Index k = 0; k < count; ++k) {
    if (seen[static_cast<std::size_t>(k)]) continue;
    int size = 0;
    for (Eigen::Index r = k; !seen[static_cast<std::size_t>(r)]; r = rotate(r)) {
      seen[static_cast<std::size_t>(r)] = true;
      ++size;
    }
    orbits.representatives.push_back(k);
    orbits.multiplicity.push_back(size);
  }
  return orbits;
}

}  // namespace detail

/// Exact enumeration over the M^n hypotheses with the noise expectation
/// taken by `ne`. Exponents use max-subtraction (log-sum-exp).
inline AlphabetMetrics channel_metrics(const CMatrix& f, const Constellation& c, const NoiseExpectation& ne,
                                       bool with_error_cov = true,
                                       std::uint64_t cap = kDefaultEnumerationCap) {
  ne.validate();
  const int n = static_cast<int>(f.cols());
  const CMatrix symbols = enumerate_group_vectors(c, n, cap);
  const Eigen::Index count = symbols.cols();
  const double full_bits = n * c.bits_per_symbol();

  AlphabetMetrics out;
  out.error_cov = CMatrix::Identity(n, n);
  const CMatrix a = detail::reduce_channel(f);
  const int rank = static_cast<int>(a.rows());
  if (rank == 0) return out;

  const CMatrix y = a * symbols;  // rank x count
  const RMatrix sym_re = symbols.real();
  const RMatrix sym_im = symbols.imag();

  // Pairwise distances ||y_m - y_k||^2, cached when affordable.
  const bool cache_dist = count <= 2048;
  RMatrix dist;
  if (cache_dist) {
    dist.resize(count, count);
    for (Eigen::Index m = 0; m < count; ++m) dist.col(m) = (y.colwise() - y.col(m)).colwise().squaredNorm();
  }

  Eigen::ArrayXd s(count);
  Eigen::ArrayXd e(count);
  Eigen::ArrayXd dm(count);
  RVector p(count);
  CMatrix err_acc = CMatrix::Zero(n, n);
  CVector err(n);
  double lse_acc = 0.0;

  // One (noise node, transmitted hypothesis) term; returns the log-sum-exp.
  auto term = [&](Eigen::Index m, double weight) {
    if (cache_dist) {
      e = 2.0 * (s - s(m)) - dist.col(m).array();
    } else {
      dm = (y.colwise() - y.col(m)).colwise().squaredNorm().transpose().array();
      e = 2.0 * (s - s(m)) - dm;
    }
    const double peak = e.maxCoeff();
    p = (e - peak).exp().matrix();
    const double total = p.sum();
    if (with_error_cov) {
      const double inv = 1.0 / total;
      for (int i = 0; i < n; ++i)
        err(i) = symbols(i, m) - cplx(sym_re.row(i).dot(p) * inv, sym_im.row(i).dot(p) * inv);
      err_acc.noalias() += weight * (err * err.adjoint());
    }
    return peak + std::log(total);
  };

  auto project = [&](const CVector& nu) { s = (y.adjoint() * nu).real().array(); };

  const double inv_count = 1.0 / static_cast<double>(count);
  if (ne.uses_quadrature(rank, static_cast<std::uint64_t>(count))) {
    const auto grid = complex_gaussian_grid(ne.order_for(rank), rank, ne.grid_cap);
    if (cache_dist) {
      // The grid is invariant under n -> exp(-j 2 pi / q) n, so hypotheses
      // related by a global rotation of the alphabet contribute equally; only
      // one representative per orbit is evaluated.
      const auto orbit = detail::rotation_orbits(c, n, count);
      const auto reps = static_cast<Eigen::Index>(orbit.representatives.size());
      // Nodes are processed in blocks; within a block every representative
      // is one dense count x block array.
      const Eigen::Index total_nodes = grid->nodes.cols();
      const Eigen::Index block = std::clamp<Eigen::Index>((Eigen::Index{1} << 18) / count, 1, total_nodes);
      RMatrix proj;
      Eigen::ArrayXXd work;
      Eigen::ArrayXXd peak;
      Eigen::ArrayXXd totals;
      RMatrix means_re;
      RMatrix means_im;
      CMatrix errs;
      for (Eigen::Index start = 0; start < total_nodes; start += block) {
        const Eigen::Index len = std::min(block, total_nodes - start);
        proj.noalias() = (y.adjoint() * grid->nodes.middleCols(start, len)).real();
        const Eigen::ArrayXXd wts = grid->weights.segment(start, len).transpose().array() * inv_count;
        for (std::size_t r = 0; r < orbit.representatives.size(); ++r) {
          const Eigen::Index m = orbit.representatives[r];
          const double mult = orbit.multiplicity[r];
          work = (2.0 * (proj.rowwise() - proj.row(m))).array().colwise() - dist.col(m).array();
          peak = work.colwise().maxCoeff();
          work.rowwise() -= peak.row(0);
          work = work.exp();
          totals = work.colwise().sum();
          lse_acc += mult * (wts * (peak + totals.log())).sum();
          if (with_error_cov) {
            means_re.noalias() = sym_re * work.matrix();
            means_im.noalias() = sym_im * work.matrix();
            // column j scaled by sqrt(mult * w_j) / total_j so that errs errs^H is the weighted sum
            const Eigen::ArrayXXd root = (mult * wts).sqrt();
            const Eigen::ArrayXXd inv = root / totals;
            errs.resize(n, len);
            for (int i = 0; i < n; ++i) {
              errs.row(i).real() = (root * sym_re(i, m) - means_re.row(i).array() * inv).matrix();
              errs.row(i).imag() = (root * sym_im(i, m) - means_im.row(i).array() * inv).matrix();
            }
            err_acc.noalias() += errs * errs.adjoint();
          }
        }
      }
    } else {
      for (Eigen::Index j = 0; j < grid->nodes.cols(); ++j) {
        const double wm = grid->weights(j) * inv_count;
        project(grid->nodes.col(j));
        double node_acc = 0.0;
        for (Eigen::Index m = 0; m < count; ++m) node_acc += term(m, wm);
        lse_acc += wm * node_acc;
      }
    }
    out.std_err = 0.0;
  } else {
    GaussianSource rng(ne.seed);
    const auto total = ne.samples;
    const bool stratified = total >= count;
    std::vector<Eigen::Index> hyp(static_cast<std::size_t>(total));
    std::vector<std::int64_t> per_hyp(static_cast<std::size_t>(count), 0);
    for (std::int64_t i = 0; i < total; ++i) {
      const Eigen::Index m = stratified ? static_cast<Eigen::Index>(i % count)
                                        : std::min<Eigen::Index>(count - 1, static_cast<Eigen::Index>(
                                                                                rng.uniform() * count));
      hyp[static_cast<std::size_t>(i)] = m;
      ++per_hyp[static_cast<std::size_t>(m)];
    }
    // Each hypothesis gets total weight 1/count when it was drawn at all.
    std::int64_t covered = 0;
    for (auto k : per_hyp) covered += (k > 0);
    std::vector<double> values(static_cast<std::size_t>(total));
    std::vector<double> weights(static_cast<std::size_t>(total));
    CVector nu(rank);
    for (std::int64_t i = 0; i < total; ++i) {
      for (int r = 0; r < rank; ++r) nu(r) = rng.complex_normal();
      const Eigen::Index m = hyp[static_cast<std::size_t>(i)];
      const double w = 1.0 / (static_cast<double>(covered) * per_hyp[static_cast<std::size_t>(m)]);
      project(nu);
      values[static_cast<std::size_t>(i)] = term(m, w);
      weights[static_cast<std::size_t>(i)] = w;
      lse_acc += w * values[static_cast<std::size_t>(i)];
    }
    double var = 0.0;
    for (std::int64_t i = 0; i < total; ++i) {
      const double d = values[static_cast<std::size_t>(i)] - lse_acc;
      var += weights[static_cast<std::size_t>(i)] * weights[static_cast<std::size_t>(i)] * d * d;
    }
    out.std_err = std::sqrt(var) * kLog2E;
  }

  out.mi_bits = std::clamp(full_bits - lse_acc * kLog2E, 0.0, full_bits);
  if (with_error_cov) out.error_cov = hermitian_part(err_acc);
  return out;
}

// ---------------------------------------------------------------------------
// Per-group quantities on the decoupled channel z_s = Xi_s^{1/2} Lambda_s V_s d_s + n.

struct GroupMetrics {
  double mi_bits = 0.0;
  CMatrix error_cov;  // E_s
  CMatrix omega;      // Lambda_s V_s E_s V_s^H Lambda_s
  double std_err = 0.0;
};

namespace detail {

inline void check_group_inputs(const RVector& xi, const RVector& lambda, const CMatrix& v) {
  if (xi.size() != lambda.size() || v.rows() != xi.size() || v.cols() != xi.size())
    throw std::invalid_argument("group dimensions disagree");
  if ((xi.array() < 0.0).any()) throw std::invalid_argument("Xi_s must be nonnegative");
  if ((lambda.array() < 0.0).any()) throw std::invalid_argument("Lambda_s must be nonnegative");
  if (!is_unitary(v, 1e-8)) throw std::invalid_argument("V_s is not unitary");
}

}  // namespace detail

inline GroupMetrics group_metrics(const RVector& xi, const RVector& lambda, const CMatrix& v, const Constellation& c,
                                  const NoiseExpectation& ne, bool with_error_cov = true,
                                  std::uint64_t cap = kDefaultEnumerationCap) {
  detail::check_group_inputs(xi, lambda, v);
  const RVector gain = xi.cwiseSqrt().cwiseProduct(lambda);
  const CMatrix f = gain.cast<cplx>().asDiagonal() * v;
  AlphabetMetrics am = channel_metrics(f, c, ne, with_error_cov, cap);
  GroupMetrics g;
  g.mi_bits = am.mi_bits;
  g.std_err = am.std_err;
  g.error_cov = std::move(am.error_cov);
  const CMatrix lv = lambda.cast<cplx>().asDiagonal() * v;
  g.omega = hermitian_part(lv * g.error_cov * lv.adjoint());
  return g;
}

inline double group_mutual_information(const RVector& xi, const RVector& lambda, const CMatrix& v,
                                       const Constellation& c, const NoiseExpectation& ne) {
  return group_metrics(xi, lambda, v, c, ne, false).mi_bits;
}

inline CMatrix group_error_covariance(const RVector& xi, const RVector& lambda, const CMatrix& v,
                                      const Constellation& c, const NoiseExpectation& ne) {
  return group_metrics(xi, lambda, v, c, ne, true).error_cov;
}

/// Omega = U Omega_eq U^H with [Omega_eq]_{ell_i, ell_j} = [Omega_s]_{ij}.
inline CMatrix assemble_omega(const StreamPartition& partition, const std::vector<GroupMetrics>& groups,
                              const CMatrix& u_xi) {
  const int nt = partition.n_t();
  const int ns = partition.group_size();
  if (static_cast<int>(groups.size()) != partition.group_count())
    throw std::invalid_argument("number of groups does not match the partition");
  if (u_xi.rows() != nt || u_xi.cols() != nt) throw std::invalid_argument("U_Xi must be N_t x N_t");
  CMatrix eq = CMatrix::Zero(nt, nt);
  for (int s = 0; s < partition.group_count(); ++s) {
    const CMatrix& om = groups[static_cast<std::size_t>(s)].omega;
    if (om.rows() != ns || om.cols() != ns) throw std::invalid_argument("group Omega has the wrong size");
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < ns; ++j) eq(partition.index(s, i), partition.index(s, j)) = om(i, j);
  }
  return hermitian_part(u_xi * eq * u_xi.adjoint());
}

// ---------------------------------------------------------------------------

struct ErgodicMI {
  double mi_bits = 0.0;
  double std_err = 0.0;
};

/// Monte Carlo average of the finite-alphabet MI of H B over channel draws.
/// Draw i uses channel seed derive_seed(seed, i) and noise seed
/// derive_seed(ne.seed, i).
inline ErgodicMI exact_ergodic_mi(const ChannelStatistics& s, const CMatrix& b, const Constellation& c,
                                  std::int64_t channel_samples, const NoiseExpectation& ne, std::uint64_t seed,
                                  std::uint64_t cap = kDefaultEnumerationCap) {
  if (b.rows() != s.n_t()) throw std::invalid_argument("precoder rows must equal N_t");
  checked_enumeration_size(c.size(), static_cast<int>(b.cols()), cap);
  if (s.rice().is_infinite()) {
    const AlphabetMetrics am = channel_metrics(s.h_bar() * b, c, ne, false, cap);
    return {am.mi_bits, am.std_err};
  }
  if (channel_samples < 1) throw std::invalid_argument("channel_samples must be >= 1");
  double sum = 0.0;
  double sum_sq = 0.0;
  double noise_var = 0.0;
  for (std::int64_t i = 0; i < channel_samples; ++i) {
    const CMatrix h = sample_realization(s, derive_seed(seed, static_cast<std::uint64_t>(i)));
    const AlphabetMetrics am =
        channel_metrics(h * b, c, ne.with_seed(derive_seed(ne.seed, static_cast<std::uint64_t>(i))), false, cap);
    sum += am.mi_bits;
    sum_sq += am.mi_bits * am.mi_bits;
    noise_var += am.std_err * am.std_err;
  }
  const double n = static_cast<double>(channel_samples);
  ErgodicMI out;
  out.mi_bits = sum / n;
  if (channel_samples == 1) {
    out.std_err = std::sqrt(noise_var);
  } else {
    // Sample variance across draws already contains the noise-estimation spread.
    const double var = std::max(0.0, (sum_sq - n * out.mi_bits * out.mi_bits) / (n - 1.0));
    out.std_err = std::sqrt(var / n);
  }
  return out;
}

}  // namespace fap

#endif  // FAP_FINITE_ALPHABET_HPP
