// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_SPECIAL_CASES_HPP
#define FAP_SPECIAL_CASES_HPP

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "fap/channel_model.hpp"
#include "fap/det_equiv.hpp"
#include "fap/finite_alphabet.hpp"
#include "fap/precoder.hpp"

namespace fap {

namespace detail {

/// Per-group metrics with U_B fixed to the basis in which Xi is diagonal.
inline std::vector<GroupMetrics> diagonal_groups(const RVector& xi_diag, const Precoder& p, const Constellation& c,
                                                 const NoiseExpectation& ne) {
  const StreamPartition& part = p.partition;
  std::vector<GroupMetrics> groups;
  for (int s = 0; s < part.group_count(); ++s) {
    RVector xs(part.group_size());
    for (int i = 0; i < part.group_size(); ++i) xs(i) = std::max(0.0, xi_diag(part.index(s, i)));
    groups.push_back(group_metrics(xs, p.lambda[static_cast<std::size_t>(s)], p.v[static_cast<std::size_t>(s)], c, ne));
  }
  return groups;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Kronecker: G = lambda_r lambda_t^T, H_bar = 0. Xi = gamma0 A_T and U_B = U_T.

struct KroneckerState {
  double gamma0 = 0.0;
  double psi0 = 0.0;
  CMatrix a_t;
  CMatrix a_r;  // diag(lambda_r) in receive eigen-coordinates; only its spectrum enters
  CMatrix Xi;
  CMatrix Omega;
  RVector xi_eig;  // gamma0 * lambda_t, in U_T column order
  std::vector<GroupMetrics> groups;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline KroneckerState kronecker_fixed_point(const RVector& lambda_r, const RVector& lambda_t, const CMatrix& u_t,
                                            const Precoder& p, const Constellation& c, const NoiseExpectation& ne,
                                            const SolverOptions& opts = {}) {
  if (lambda_t.size() != p.n_t() || u_t.rows() != p.n_t()) throw std::invalid_argument("N_t mismatch");
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) throw std::invalid_argument("damping must lie in [0, 1)");
  p.validate();
  KroneckerState st;
  st.a_t = u_t * lambda_t.cast<cplx>().asDiagonal() * u_t.adjoint();
  st.a_r = lambda_r.cast<cplx>().asDiagonal();

  // (gamma0, psi0) -> (gamma0', psi0'); fills the Xi-dependent fields.
  auto map = [&](double g0, double p0, KroneckerState& out) {
    out.xi_eig = g0 * lambda_t;
    out.groups = detail::diagonal_groups(out.xi_eig, p, c, ne);
    const CMatrix eq = assemble_omega(p.partition, out.groups, CMatrix::Identity(p.n_t(), p.n_t()));
    const double psi_next = eq.diagonal().real().dot(lambda_t);  // tr(Omega A_T)
    const double gamma_next = (lambda_r.array() / (1.0 + p0 * lambda_r.array())).sum();
    return std::pair{gamma_next, psi_next};
  };

  double g0 = lambda_r.sum();
  double p0 = map(g0, 0.0, st).second;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    KroneckerState trial = st;
    const auto [gn, pn] = map(g0, p0, trial);
    const double residual = std::abs(gn - g0) + std::abs(pn - p0);
    if (residual < best) {
      best = residual;
      st.groups = trial.groups;
      st.xi_eig = trial.xi_eig;
      st.gamma0 = g0;
      st.psi0 = p0;
      st.residual = residual;
    }
    st.iterations = it;
    if (residual <= opts.tol) {
      st.converged = true;
      break;
    }
    g0 = (1.0 - opts.damping) * gn + opts.damping * g0;
    p0 = (1.0 - opts.damping) * pn + opts.damping * p0;
  }
  st.Xi = st.gamma0 * st.a_t;
  st.Omega = assemble_omega(p.partition, st.groups, u_t);
  return st;
}

inline KroneckerState kronecker_fixed_point(const KroneckerStatistics& ks, const Precoder& p, const Constellation& c,
                                            const NoiseExpectation& ne, const SolverOptions& opts = {}) {
  return kronecker_fixed_point(ks.lambda_r, ks.lambda_t, ks.stats.u_t(), p, c, ne, opts);
}

/// Group MI plus sum log2(1 + psi0 lambda_r) - log2(e) gamma0 psi0.
inline AsymptoticMI kronecker_asymptotic_mi(const KroneckerState& st, const RVector& lambda_r) {
  AsymptoticMI out;
  double var = 0.0;
  for (const auto& g : st.groups) {
    out.group_bits.push_back(g.mi_bits);
    var += g.std_err * g.std_err;
  }
  out.correction_bits =
      (1.0 + st.psi0 * lambda_r.array()).log().sum() * kLog2E - kLog2E * st.gamma0 * st.psi0;
  out.total_bits = std::accumulate(out.group_bits.begin(), out.group_bits.end(), 0.0) + out.correction_bits;
  out.std_err = std::sqrt(var);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic channel (K = inf): the MI of H_bar B is exact.

inline double deterministic_mi(const CMatrix& h_bar, const CMatrix& b, const Constellation& c,
                               const NoiseExpectation& ne, std::uint64_t cap = kDefaultEnumerationCap) {
  if (h_bar.cols() != b.rows()) throw std::invalid_argument("H_bar columns must equal precoder rows");
  return channel_metrics(h_bar * b, c, ne, false, cap).mi_bits;
}

inline double deterministic_mi(const CMatrix& h_bar, const Precoder& p, const Constellation& c,
                               const NoiseExpectation& ne, std::uint64_t cap = kDefaultEnumerationCap) {
  return deterministic_mi(h_bar, assemble_precoder(p), c, ne, cap);
}

// ---------------------------------------------------------------------------
// Massive MIMO on the virtual-angle grid: T, R diagonal, sparse LOS, U_B = U_T.

struct MassiveState {
  RVector gamma_phy;
  RVector psi_phy;
  RVector t_phy;  // diag(G^T gamma)
  RVector r_phy;  // diag(G psi)
  CMatrix Xi_phy;
  CMatrix Omega_phy;
  std::vector<GroupMetrics> groups;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline void check_sparse_los(const std::vector<VirtualEntry>& h_hat, int n_r, int n_t) {
  std::set<int> rows;
  std::set<int> cols;
  for (const auto& e : h_hat) {
    if (e.rx < 0 || e.rx >= n_r || e.tx < 0 || e.tx >= n_t) throw std::invalid_argument("LOS entry out of range");
    if (!rows.insert(e.rx).second || !cols.insert(e.tx).second)
      throw std::invalid_argument("diagonal solver needs at most one LOS entry per row and column");
  }
}

}  // namespace detail

/// gamma_n = q_n - q_n^2 [H Omega_phy H^H]_nn with q = 1 / (1 + G psi).
inline RVector massive_gamma_update(const RMatrix& g, const std::vector<VirtualEntry>& h_hat, const RVector& psi,
                                    const CMatrix& omega_phy) {
  const RVector q = (1.0 + (g * psi).array()).inverse().matrix();
  RVector gamma = q;
  for (const auto& e : h_hat)
    gamma(e.rx) -= q(e.rx) * q(e.rx) * std::norm(e.value) * omega_phy(e.tx, e.tx).real();
  return gamma;
}

/// diag(G^T gamma) + H^H diag(q) H, diagonal under the sparse-LOS precondition.
inline RVector massive_xi(const RMatrix& g, const std::vector<VirtualEntry>& h_hat, const RVector& gamma,
                          const RVector& psi) {
  const RVector q = (1.0 + (g * psi).array()).inverse().matrix();
  RVector xi = g.transpose() * gamma;
  for (const auto& e : h_hat) xi(e.tx) += std::norm(e.value) * q(e.rx);
  return xi;
}

inline MassiveState massive_fixed_point(const RayStatistics& rs, const Precoder& p, const Constellation& c,
                                        const NoiseExpectation& ne, const SolverOptions& opts = {}) {
  const ChannelStatistics& s = rs.stats;
  if (p.n_t() != s.n_t()) throw std::invalid_argument("precoder size does not match N_t");
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) throw std::invalid_argument("damping must lie in [0, 1)");
  p.validate();
  detail::check_sparse_los(rs.h_hat, s.n_r(), s.n_t());
  const RMatrix& g = s.coupling();
  const CMatrix eye = CMatrix::Identity(s.n_t(), s.n_t());

  struct Eval {
    RVector xi;
    std::vector<GroupMetrics> groups;
    CMatrix omega;
    RVector gamma_next;
    RVector psi_next;
  };
  auto map = [&](const RVector& gamma, const RVector& psi) {
    Eval ev;
    ev.xi = massive_xi(g, rs.h_hat, gamma, psi);
    ev.groups = detail::diagonal_groups(ev.xi, p, c, ne);
    ev.omega = assemble_omega(p.partition, ev.groups, eye);
    ev.psi_next = ev.omega.diagonal().real();
    ev.gamma_next = massive_gamma_update(g, rs.h_hat, psi, ev.omega);
    return ev;
  };

  RVector gamma = RVector::Ones(s.n_r());
  RVector psi = map(gamma, RVector::Zero(s.n_t())).psi_next;
  MassiveState st;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    Eval ev = map(gamma, psi);
    const double residual = detail::sup_distance(ev.gamma_next, gamma) + detail::sup_distance(ev.psi_next, psi);
    if (residual < best) {
      best = residual;
      st.gamma_phy = gamma;
      st.psi_phy = psi;
      st.Xi_phy = ev.xi.cast<cplx>().asDiagonal();
      st.Omega_phy = ev.omega;
      st.groups = ev.groups;
      st.residual = residual;
    }
    st.iterations = it;
    if (residual <= opts.tol) {
      st.converged = true;
      break;
    }
    gamma = (1.0 - opts.damping) * ev.gamma_next + opts.damping * gamma;
    psi = (1.0 - opts.damping) * ev.psi_next + opts.damping * psi;
  }
  st.t_phy = g.transpose() * st.gamma_phy;
  st.r_phy = g * st.psi_phy;
  return st;
}

inline AsymptoticMI massive_asymptotic_mi(const MassiveState& st, const RayStatistics& rs) {
  AsymptoticMI out;
  double var = 0.0;
  for (const auto& gm : st.groups) {
    out.group_bits.push_back(gm.mi_bits);
    var += gm.std_err * gm.std_err;
  }
  out.correction_bits = correction_bits(rs.stats, st.gamma_phy, st.psi_phy);
  out.total_bits = std::accumulate(out.group_bits.begin(), out.group_bits.end(), 0.0) + out.correction_bits;
  out.std_err = std::sqrt(var);
  return out;
}

}  // namespace fap

#endif  // FAP_SPECIAL_CASES_HPP
