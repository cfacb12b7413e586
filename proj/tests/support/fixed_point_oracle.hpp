// SPDX-License-Identifier: Apache-2.0
// Dense re-evaluation of the fixed-point map straight from its matrix form,
// kept separate from the solver's virtual-coordinate implementation.
#ifndef FAP_TESTS_FIXED_POINT_ORACLE_HPP
#define FAP_TESTS_FIXED_POINT_ORACLE_HPP

#include "fap/det_equiv.hpp"

namespace fap::oracle {

struct DenseMap {
  CMatrix T;
  CMatrix R;
  CMatrix Xi;
  CMatrix Omega;
  RVector gamma;
  RVector psi;
};

/// gamma_m = u_m^H (I+R)^-1 u_m - u_m^H (I+R)^-1 H Omega H^H (I+R)^-1 u_m and
/// psi_n = u_n^H Omega u_n, with Omega from the precoder's group metrics on Xi.
inline DenseMap dense_map(const ChannelStatistics& s, const Precoder& p, const Constellation& c,
                          const NoiseExpectation& ne, const RVector& gamma, const RVector& psi) {
  DenseMap out;
  const RMatrix& g = s.coupling();
  out.T = s.u_t() * (g.transpose() * gamma).cast<cplx>().asDiagonal() * s.u_t().adjoint();
  out.R = s.u_r() * (g * psi).cast<cplx>().asDiagonal() * s.u_r().adjoint();
  const CMatrix inv = (CMatrix::Identity(s.n_r(), s.n_r()) + out.R).inverse();
  out.Xi = out.T + s.h_bar().adjoint() * inv * s.h_bar();
  const EigenFrame frame = align_eigenbasis(out.Xi, p.u_b);
  std::vector<GroupMetrics> groups;
  for (int k = 0; k < p.group_count(); ++k) {
    RVector xs(p.group_size());
    for (int i = 0; i < p.group_size(); ++i) xs(i) = std::max(0.0, frame.values(p.partition.index(k, i)));
    groups.push_back(group_metrics(xs, p.lambda[static_cast<std::size_t>(k)], p.v[static_cast<std::size_t>(k)], c, ne));
  }
  out.Omega = assemble_omega(p.partition, groups, frame.basis);
  const CMatrix inner = inv - inv * s.h_bar() * out.Omega * s.h_bar().adjoint() * inv;
  out.gamma.resize(s.n_r());
  for (int m = 0; m < s.n_r(); ++m) out.gamma(m) = (s.u_r().col(m).adjoint() * inner * s.u_r().col(m))(0, 0).real();
  out.psi.resize(s.n_t());
  for (int n = 0; n < s.n_t(); ++n)
    out.psi(n) = (s.u_t().col(n).adjoint() * out.Omega * s.u_t().col(n))(0, 0).real();
  return out;
}

}  // namespace fap::oracle

#endif  // FAP_TESTS_FIXED_POINT_ORACLE_HPP
