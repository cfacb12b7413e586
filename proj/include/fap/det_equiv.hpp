// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_DET_EQUIV_HPP
#define FAP_DET_EQUIV_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fap/channel_model.hpp"
#include "fap/constellation.hpp"
#include "fap/finite_alphabet.hpp"
#include "fap/precoder.hpp"
#include "fap/types.hpp"

namespace fap {

struct SolverOptions {
  double tol = 1e-8;       // on max|d gamma| + max|d psi|
  int max_iter = 200;
  double damping = 0.5;    // x <- (1 - damping) f(x) + damping x
};

/// Starting point for a warm-started solve.
struct FixedPointGuess {
  RVector gamma;
  RVector psi;
};

/// Eigenbasis of a Hermitian matrix, columns matched to a reference basis.
struct EigenFrame {
  CMatrix basis;   // column k pairs with reference column k
  RVector values;  // Rayleigh quotients basis_k^H Xi basis_k
};

/// Eigenvectors of `xi` arranged to be as close as possible to `reference`:
/// numerically equal eigenvalues form one cluster, every cluster receives
/// the reference columns with the largest overlap, and the cluster basis is
/// rotated onto them by the polar factor. For distinct eigenvalues this
/// amounts to reordering and fixing each phase so u_k^H r_k > 0.
inline EigenFrame align_eigenbasis(const CMatrix& xi, const CMatrix& reference) {
  const Eigen::Index n = xi.rows();
  if (reference.rows() != n || reference.cols() != n) throw std::invalid_argument("reference basis has wrong size");
  const CMatrix herm = hermitian_part(xi);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm);
  const RVector& lam = eig.eigenvalues();
  const CMatrix& vec = eig.eigenvectors();
  const double gap = 1e-9 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);

  std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;  // [begin, end)
  for (Eigen::Index k = 0; k < n;) {
    Eigen::Index e = k + 1;
    while (e < n && lam(e) - lam(e - 1) <= gap) ++e;
    clusters.emplace_back(k, e);
    k = e;
  }

  struct Pair {
    double overlap;
    Eigen::Index ref;
    std::size_t cluster;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto [b, e] = clusters[c];
    const CMatrix proj = vec.middleCols(b, e - b).adjoint() * reference;
    for (Eigen::Index k = 0; k < n; ++k) pairs.push_back({proj.col(k).squaredNorm(), k, c});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.overlap > b.overlap; });

  std::vector<std::vector<Eigen::Index>> assigned(clusters.size());
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  for (const Pair& p : pairs) {
    const auto [b, e] = clusters[p.cluster];
    auto& slot = assigned[p.cluster];
    if (taken[static_cast<std::size_t>(p.ref)] || static_cast<Eigen::Index>(slot.size()) >= e - b) continue;
    slot.push_back(p.ref);
    taken[static_cast<std::size_t>(p.ref)] = true;
  }

  EigenFrame frame{CMatrix(n, n), RVector(n)};
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto [b, e] = clusters[c];
    auto cols = assigned[c];
    std::sort(cols.begin(), cols.end());
    const Eigen::Index d = e - b;
    CMatrix target(n, d);
    for (Eigen::Index i = 0; i < d; ++i) target.col(i) = reference.col(cols[static_cast<std::size_t>(i)]);
    const CMatrix q = vec.middleCols(b, d);
    Eigen::JacobiSVD<CMatrix> svd(q.adjoint() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const CMatrix rotated = q * (svd.matrixU() * svd.matrixV().adjoint());
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::Index k = cols[static_cast<std::size_t>(i)];
      frame.basis.col(k) = rotated.col(i);
      frame.values(k) = (rotated.col(i).adjoint() * herm * rotated.col(i))(0, 0).real();
    }
  }
  return frame;
}

/// Converged (or best) deterministic-equivalent state.
struct DetEquivState {
  RVector gamma;   // N_r
  RVector psi;     // N_t
  CMatrix T;
  CMatrix R;
  CMatrix Xi;
  CMatrix Omega;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
  int negative_gamma = 0;  // entries of gamma below zero at the returned state

  CMatrix u_xi;    // eigenbasis of Xi used for the precoder (aligned to its U_B)
  RVector xi_eig;  // matching eigenvalues
  std::vector<GroupMetrics> groups;
};

struct AsymptoticMI {
  double total_bits = 0.0;
  std::vector<double> group_bits;
  double correction_bits = 0.0;  // log2 det(I + R) - log2(e) gamma^T G psi
  double std_err = 0.0;          // Monte Carlo error of the group terms (0 for quadrature)
};

namespace detail {

/// One evaluation of the fixed-point map at (gamma, psi).
struct MapEvaluation {
  CMatrix T;
  CMatrix R;
  CMatrix Xi;
  CMatrix Omega;
  CMatrix u_xi;
  RVector xi_eig;
  std::vector<GroupMetrics> groups;
  RVector gamma_next;
  RVector psi_next;
};

/// Precoder with U_B following the eigenbasis of Xi; per-group metrics.
/// Each evaluation aligns to the basis of the previous one (starting from
/// precoder.u_b), so the stream assignment moves continuously with the
/// iterates instead of snapping back to the initial reference.
struct TrackedModel {
  const Precoder& precoder;
  const Constellation& alphabet;
  const NoiseExpectation& ne;
  mutable CMatrix reference;

  void operator()(const CMatrix& xi, MapEvaluation& ev) const {
    const EigenFrame frame = align_eigenbasis(xi, reference);
    reference = frame.basis;
    ev.u_xi = frame.basis;
    ev.xi_eig = frame.values;
    const StreamPartition& part = precoder.partition;
    ev.groups.clear();
    for (int s = 0; s < part.group_count(); ++s) {
      RVector xs(part.group_size());
      for (int i = 0; i < part.group_size(); ++i) xs(i) = std::max(0.0, frame.values(part.index(s, i)));
      ev.groups.push_back(group_metrics(xs, precoder.lambda[static_cast<std::size_t>(s)],
                                        precoder.v[static_cast<std::size_t>(s)], alphabet, ne));
    }
    ev.Omega = assemble_omega(part, ev.groups, frame.basis);
  }
};

/// Fixed precoder matrix B; the MI of Xi^{1/2} B is evaluated jointly.
struct FixedModel {
  const CMatrix& b;
  const Constellation& alphabet;
  const NoiseExpectation& ne;

  void operator()(const CMatrix& xi, MapEvaluation& ev) const {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(xi));
    ev.u_xi = eig.eigenvectors().rowwise().reverse();
    ev.xi_eig = eig.eigenvalues().reverse();
    const RVector root = ev.xi_eig.cwiseMax(0.0).cwiseSqrt();
    const CMatrix f = root.cast<cplx>().asDiagonal() * (ev.u_xi.adjoint() * b);
    AlphabetMetrics am = channel_metrics(f, alphabet, ne, true);
    GroupMetrics g;
    g.mi_bits = am.mi_bits;
    g.std_err = am.std_err;
    g.omega = hermitian_part(b * am.error_cov * b.adjoint());
    g.error_cov = std::move(am.error_cov);
    ev.Omega = g.omega;
    ev.groups.assign(1, std::move(g));
  }
};

template <class Model>
void evaluate_map(const ChannelStatistics& s, const CMatrix& h_virtual, const RVector& gamma, const RVector& psi,
                  const Model& model, MapEvaluation& ev) {
  const RMatrix& g = s.coupling();
  const RVector t_diag = g.transpose() * gamma;
  const RVector r_diag = g * psi;
  const RVector q = (1.0 + r_diag.array()).inverse().matrix();  // eigenvalues of (I + R)^{-1}
  ev.T = s.u_t() * t_diag.cast<cplx>().asDiagonal() * s.u_t().adjoint();
  ev.R = s.u_r() * r_diag.cast<cplx>().asDiagonal() * s.u_r().adjoint();
  // Xi in transmit virtual coordinates: diag(G^T gamma) + H^H diag(q) H, H = U_R^H H_bar U_T
  CMatrix xi_virtual = h_virtual.adjoint() * q.cast<cplx>().asDiagonal() * h_virtual;
  xi_virtual.diagonal() += t_diag.cast<cplx>();
  ev.Xi = hermitian_part(s.u_t() * xi_virtual * s.u_t().adjoint());
  model(ev.Xi, ev);
  const CMatrix omega_virtual = s.u_t().adjoint() * ev.Omega * s.u_t();
  ev.psi_next = omega_virtual.diagonal().real();
  const CMatrix los = h_virtual * omega_virtual * h_virtual.adjoint();
  ev.gamma_next = q - q.cwiseAbs2().cwiseProduct(los.diagonal().real());
}

inline double sup_distance(const RVector& a, const RVector& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

template <class Model>
DetEquivState solve(const ChannelStatistics& s, const Model& model, const SolverOptions& opts,
                    const FixedPointGuess* guess) {
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) throw std::invalid_argument("damping must lie in [0, 1)");
  if (opts.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  const CMatrix h_virtual = s.u_r().adjoint() * s.h_bar() * s.u_t();
  RVector gamma;
  RVector psi;
  MapEvaluation ev;
  if (guess != nullptr && guess->gamma.size() == s.n_r() && guess->psi.size() == s.n_t()) {
    gamma = guess->gamma;
    psi = guess->psi;
  } else {
    gamma = RVector::Ones(s.n_r());
    evaluate_map(s, h_virtual, gamma, RVector::Zero(s.n_t()), model, ev);
    psi = ev.psi_next;
  }

  DetEquivState best;
  best.residual = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  for (int it = 1; it <= opts.max_iter; ++it) {
    evaluate_map(s, h_virtual, gamma, psi, model, ev);
    const double residual = sup_distance(ev.gamma_next, gamma) + sup_distance(ev.psi_next, psi);
    history.push_back(residual);
    if (residual < best.residual) {
      best.gamma = gamma;
      best.psi = psi;
      best.T = ev.T;
      best.R = ev.R;
      best.Xi = ev.Xi;
      best.Omega = ev.Omega;
      best.u_xi = ev.u_xi;
      best.xi_eig = ev.xi_eig;
      best.groups = ev.groups;
      best.residual = residual;
    }
    if (residual <= opts.tol) {
      best.converged = true;
      best.iterations = it;
      break;
    }
    best.iterations = it;
    gamma = (1.0 - opts.damping) * ev.gamma_next + opts.damping * gamma;
    psi = (1.0 - opts.damping) * ev.psi_next + opts.damping * psi;
  }
  best.residual_history = std::move(history);
  best.negative_gamma = static_cast<int>((best.gamma.array() < 0.0).count());
  return best;
}

}  // namespace detail

/// Solves the fixed point with U_B tracking the eigenbasis of Xi, carried
/// continuously from precoder.u_b. Not converging is reported through
/// state.converged.
inline DetEquivState solve_fixed_point(const ChannelStatistics& s, const Precoder& precoder, const Constellation& c,
                                       const NoiseExpectation& ne, const SolverOptions& opts = {},
                                       const FixedPointGuess* guess = nullptr) {
  if (precoder.n_t() != s.n_t()) throw std::invalid_argument("precoder size does not match N_t");
  precoder.validate();
  return detail::solve(s, detail::TrackedModel{precoder, c, ne, precoder.u_b}, opts, guess);
}

/// Solves the fixed point for a fixed precoder matrix B (baselines). The MI
/// term enumerates all M^{N_t} vectors.
inline DetEquivState solve_fixed_point_matrix(const ChannelStatistics& s, const CMatrix& b, const Constellation& c,
                                              const NoiseExpectation& ne, const SolverOptions& opts = {},
                                              const FixedPointGuess* guess = nullptr) {
  if (b.rows() != s.n_t()) throw std::invalid_argument("precoder rows must equal N_t");
  return detail::solve(s, detail::FixedModel{b, c, ne}, opts, guess);
}

inline void require_converged(const DetEquivState& state) {
  if (!state.converged)
    throw NonConvergence("fixed point did not converge: residual " + std::to_string(state.residual) + " after " +
                         std::to_string(state.iterations) + " iterations");
}

/// log2 det(I + R) - log2(e) gamma^T G psi; R = U_R diag(G psi) U_R^H.
inline double correction_bits(const ChannelStatistics& s, const RVector& gamma, const RVector& psi) {
  const RVector r_diag = s.coupling() * psi;
  return (1.0 + r_diag.array()).log().sum() * kLog2E - kLog2E * gamma.dot(r_diag);
}

/// Asymptotic MI from the group metrics stored in the state.
inline AsymptoticMI asymptotic_mi(const DetEquivState& state, const ChannelStatistics& s) {
  AsymptoticMI out;
  double var = 0.0;
  for (const auto& g : state.groups) {
    out.group_bits.push_back(g.mi_bits);
    var += g.std_err * g.std_err;
  }
  out.correction_bits = correction_bits(s, state.gamma, state.psi);
  out.total_bits = std::accumulate(out.group_bits.begin(), out.group_bits.end(), 0.0) + out.correction_bits;
  out.std_err = std::sqrt(var);
  return out;
}

/// Asymptotic MI with the group terms re-evaluated for `precoder` under `ne`
/// on the Xi_s blocks of the state.
inline AsymptoticMI asymptotic_mi(const DetEquivState& state, const ChannelStatistics& s, const Precoder& precoder,
                                  const Constellation& c, const NoiseExpectation& ne) {
  const StreamPartition& part = precoder.partition;
  if (state.xi_eig.size() != part.n_t()) throw std::invalid_argument("state does not match the precoder");
  DetEquivState copy;
  copy.gamma = state.gamma;
  copy.psi = state.psi;
  for (int g = 0; g < part.group_count(); ++g) {
    RVector xs(part.group_size());
    for (int i = 0; i < part.group_size(); ++i) xs(i) = std::max(0.0, state.xi_eig(part.index(g, i)));
    copy.groups.push_back(group_metrics(xs, precoder.lambda[static_cast<std::size_t>(g)],
                                        precoder.v[static_cast<std::size_t>(g)], c, ne, false));
  }
  return asymptotic_mi(copy, s);
}

/// Realized precoder matrix U_Xi Lambda_B V_B at a solved state.
inline CMatrix realized_precoder(const DetEquivState& state, const Precoder& precoder) {
  return state.u_xi * precoder.lambda_b() * precoder.v_b();
}

}  // namespace fap

#endif  // FAP_DET_EQUIV_HPP
