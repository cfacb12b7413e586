// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_PRECODER_HPP
#define FAP_PRECODER_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fap/partition.hpp"
#include "fap/random.hpp"
#include "fap/types.hpp"

namespace fap {

/// B = U_B Lambda_B V_B with [Lambda_B]_{ell_j, ell_j} = [Lambda_s]_ii and
/// [V_B]_{ell_(s,i), ell_(s,k)} = [V_s]_ik.
struct Precoder {
  CMatrix u_b;
  std::vector<RVector> lambda;  // diagonal of Lambda_s, per group
  std::vector<CMatrix> v;       // V_s, per group
  StreamPartition partition;
  double power = 0.0;

  int n_t() const { return partition.n_t(); }
  int group_count() const { return partition.group_count(); }
  int group_size() const { return partition.group_size(); }

  double allocated_power() const {
    double total = 0.0;
    for (const auto& l : lambda) total += l.squaredNorm();
    return total;
  }

  CMatrix lambda_b() const {
    CMatrix out = CMatrix::Zero(n_t(), n_t());
    for (int s = 0; s < group_count(); ++s)
      for (int i = 0; i < group_size(); ++i)
        out(partition.index(s, i), partition.index(s, i)) = lambda[static_cast<std::size_t>(s)](i);
    return out;
  }

  CMatrix v_b() const {
    CMatrix out = CMatrix::Zero(n_t(), n_t());
    for (int s = 0; s < group_count(); ++s)
      for (int i = 0; i < group_size(); ++i)
        for (int k = 0; k < group_size(); ++k)
          out(partition.index(s, i), partition.index(s, k)) = v[static_cast<std::size_t>(s)](i, k);
    return out;
  }

  /// Throws std::invalid_argument when a structural invariant fails.
  void validate(double tol = 1e-9) const {
    const int nt = n_t();
    const int ns = group_size();
    if (u_b.rows() != nt || !is_unitary(u_b, 1e-8)) throw std::invalid_argument("U_B must be unitary N_t x N_t");
    if (static_cast<int>(lambda.size()) != group_count() || static_cast<int>(v.size()) != group_count())
      throw std::invalid_argument("precoder needs one (Lambda_s, V_s) pair per group");
    for (int s = 0; s < group_count(); ++s) {
      const auto& l = lambda[static_cast<std::size_t>(s)];
      const auto& vs = v[static_cast<std::size_t>(s)];
      if (l.size() != ns || (l.array() < 0.0).any()) throw std::invalid_argument("Lambda_s must be nonnegative");
      if (vs.rows() != ns || !is_unitary(vs, 1e-8)) throw std::invalid_argument("V_s must be unitary N_s x N_s");
    }
    if (std::abs(allocated_power() - power) > tol * std::max(1.0, power))
      throw std::invalid_argument("sum of Lambda_s^2 does not equal the power budget");
  }
};

inline CMatrix assemble_precoder(const Precoder& p) { return p.u_b * p.lambda_b() * p.v_b(); }

/// Equal power sqrt(P / N_t) on every stream; V_s from `v`.
inline Precoder uniform_precoder(CMatrix u_b, StreamPartition partition, double power, std::vector<CMatrix> v) {
  if (!(power >= 0.0)) throw std::invalid_argument("power budget must be >= 0");
  Precoder p{std::move(u_b), {}, std::move(v), std::move(partition), power};
  const double amp = std::sqrt(power / p.n_t());
  p.lambda.assign(static_cast<std::size_t>(p.group_count()), RVector::Constant(p.group_size(), amp));
  return p;
}

/// Equal power with identity V_s.
inline Precoder uniform_precoder(CMatrix u_b, StreamPartition partition, double power) {
  std::vector<CMatrix> v(static_cast<std::size_t>(partition.group_count()),
                         CMatrix::Identity(partition.group_size(), partition.group_size()));
  return uniform_precoder(std::move(u_b), std::move(partition), power, std::move(v));
}

/// Equal power with Haar V_s drawn from `rng`.
inline Precoder random_precoder(CMatrix u_b, StreamPartition partition, double power, GaussianSource& rng) {
  std::vector<CMatrix> v;
  for (int s = 0; s < partition.group_count(); ++s) v.push_back(random_unitary(partition.group_size(), rng));
  return uniform_precoder(std::move(u_b), std::move(partition), power, std::move(v));
}

/// Groups the strongest remaining ceil(N_s/2) subchannels with the weakest
/// remaining floor(N_s/2); each group is listed strongest first.
inline StreamPartition pair_subchannels(const RVector& xi_diag, int group_size) {
  const int nt = static_cast<int>(xi_diag.size());
  if (group_size < 1 || nt == 0 || nt % group_size != 0)
    throw std::invalid_argument("group size " + std::to_string(group_size) + " does not divide N_t = " +
                                std::to_string(nt));
  std::vector<int> order(static_cast<std::size_t>(nt));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return xi_diag(a) > xi_diag(b); });

  const int strong = (group_size + 1) / 2;
  const int weak = group_size / 2;
  std::vector<int> ell;
  ell.reserve(static_cast<std::size_t>(nt));
  int front = 0;
  int back = nt - 1;
  for (int s = 0; s < nt / group_size; ++s) {
    std::vector<int> rank;
    for (int i = 0; i < strong; ++i) rank.push_back(front++);
    for (int i = 0; i < weak; ++i) rank.push_back(back--);
    std::sort(rank.begin(), rank.end());
    for (int r : rank) ell.push_back(order[static_cast<std::size_t>(r)]);
  }
  return StreamPartition(std::move(ell), group_size);
}

}  // namespace fap

#endif  // FAP_PRECODER_HPP
