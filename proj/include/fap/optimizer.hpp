// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_OPTIMIZER_HPP
#define FAP_OPTIMIZER_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fap/channel_model.hpp"
#include "fap/det_equiv.hpp"
#include "fap/finite_alphabet.hpp"
#include "fap/precoder.hpp"
#include "fap/random.hpp"

namespace fap {

/// Gradients of the asymptotic MI in bits, with (gamma, psi) held fixed.
struct GroupGradient {
  RVector lambda_sq;  // d I / d [Lambda_s^2]_ii = log2(e) [Xi_s]_ii [V_s E_s V_s^H]_ii
  CMatrix v;          // d I / d conj(V_s) = log2(e) Xi_s Lambda_s^2 V_s E_s
};

namespace detail {

inline RVector group_xi(const RVector& xi_eig, const StreamPartition& part, int s) {
  RVector xs(part.group_size());
  for (int i = 0; i < part.group_size(); ++i) xs(i) = std::max(0.0, xi_eig(part.index(s, i)));
  return xs;
}

inline GroupGradient group_gradient(const RVector& xi, const RVector& lambda, const CMatrix& v,
                                    const CMatrix& error_cov) {
  GroupGradient g;
  const CMatrix vev = v * error_cov * v.adjoint();
  g.lambda_sq = kLog2E * xi.cwiseProduct(vev.diagonal().real());
  const RVector gain = xi.cwiseProduct(lambda.cwiseAbs2());
  g.v = kLog2E * (gain.cast<cplx>().asDiagonal() * v * error_cov);
  return g;
}

}  // namespace detail

/// Gradients from the error covariances stored in `state`.
inline std::vector<GroupGradient> gradients(const DetEquivState& state, const Precoder& p) {
  const StreamPartition& part = p.partition;
  if (static_cast<int>(state.groups.size()) != part.group_count())
    throw std::invalid_argument("state groups do not match the precoder partition");
  std::vector<GroupGradient> out;
  for (int s = 0; s < part.group_count(); ++s) {
    out.push_back(detail::group_gradient(detail::group_xi(state.xi_eig, part, s), p.lambda[static_cast<std::size_t>(s)],
                                         p.v[static_cast<std::size_t>(s)],
                                         state.groups[static_cast<std::size_t>(s)].error_cov));
  }
  return out;
}

/// Gradients with E_s re-evaluated under `ne` on the Xi_s blocks of `state`.
inline std::vector<GroupGradient> gradients(const DetEquivState& state, const Precoder& p, const Constellation& c,
                                            const NoiseExpectation& ne) {
  const StreamPartition& part = p.partition;
  std::vector<GroupGradient> out;
  for (int s = 0; s < part.group_count(); ++s) {
    const RVector xs = detail::group_xi(state.xi_eig, part, s);
    const auto& lam = p.lambda[static_cast<std::size_t>(s)];
    const auto& v = p.v[static_cast<std::size_t>(s)];
    out.push_back(detail::group_gradient(xs, lam, v, group_error_covariance(xs, lam, v, c, ne)));
  }
  return out;
}

/// Skew-Hermitian ascent direction V^H G - G^H V.
inline CMatrix tangent_direction(const CMatrix& v, const CMatrix& g) {
  const CMatrix x = v.adjoint() * g;
  return x - x.adjoint();
}

/// V expm(step A), A = V^H G - G^H V; moving along it changes the objective
/// at rate ||A||_F^2 per unit step. The result is re-orthonormalized.
inline CMatrix retract_unitary(const CMatrix& v, const CMatrix& g, double step) {
  if (!is_unitary(v, 1e-8)) throw std::invalid_argument("V must be unitary");
  if (step == 0.0) return v;
  const CMatrix a = tangent_direction(v, g);
  // A = iH with H Hermitian, so expm(step A) = W exp(i step h) W^H.
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(cplx(0.0, -1.0) * a));
  CVector phase(a.rows());
  for (Eigen::Index k = 0; k < a.rows(); ++k) phase(k) = std::polar(1.0, step * eig.eigenvalues()(k));
  const CMatrix moved = v * (eig.eigenvectors() * phase.asDiagonal() * eig.eigenvectors().adjoint());
  Eigen::JacobiSVD<CMatrix> svd(moved, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

struct LineSearchOptions {
  double armijo = 0.3;
  double shrink = 0.5;
  double initial_step = 1.0;
  int max_halvings = 30;
};

struct OptimizerOptions {
  double eps = 1e-4;      // stop when the MI gain of an iteration is at most this (bits)
  int max_iter = 50;
  int restarts = 3;
  std::uint64_t seed = 1;
  NoiseExpectation ne;
  SolverOptions solver;
  LineSearchOptions line_search;
};

struct OptimizationTrace {
  std::vector<double> mi_per_iteration;  // bits; entry 0 is the initial point
  std::vector<double> step_sizes;        // accepted power step per iteration (0 = rejected)
  std::vector<double> v_step_sizes;      // accepted unitary step per iteration
  int restarts = 0;
  int best_restart = -1;
  bool converged = false;
  std::vector<double> restart_mi;        // final MI per restart (NaN when it failed)
  std::vector<std::string> restart_errors;
  double stationarity_residual = std::numeric_limits<double>::quiet_NaN();  // logged, not enforced
};

struct OptimizationResult {
  Precoder precoder;
  OptimizationTrace trace;
  DetEquivState state;
  AsymptoticMI mi;
};

namespace detail {

struct Evaluated {
  DetEquivState state;
  double mi = 0.0;
};

inline std::optional<Evaluated> evaluate_precoder(const ChannelStatistics& s, const Precoder& p,
                                                  const Constellation& c, const OptimizerOptions& opts,
                                                  const DetEquivState* warm) {
  FixedPointGuess guess;
  const FixedPointGuess* gp = nullptr;
  if (warm != nullptr) {
    guess = {warm->gamma, warm->psi};
    gp = &guess;
  }
  Evaluated e{solve_fixed_point(s, p, c, opts.ne, opts.solver, gp), 0.0};
  if (!e.state.converged) return std::nullopt;
  e.mi = asymptotic_mi(e.state, s).total_bits;
  return e;
}

struct RunResult {
  Precoder precoder;
  DetEquivState state;
  std::vector<double> mi;
  std::vector<double> steps;
  std::vector<double> v_steps;
  bool converged = false;
};

inline RunResult optimize_once(const ChannelStatistics& s, const Constellation& c, double power, int group_size,
                               const OptimizerOptions& opts, std::uint64_t seed) {
  const int nt = s.n_t();
  GaussianSource rng(seed);
  // Step 1: equal power, Haar V_s; U_B starts from U_T and then tracks Xi.
  Precoder p = random_precoder(s.u_t(), StreamPartition::identity(nt, group_size), power, rng);

  // Step 2: provisional solve, pair on its eigenvalues, re-solve.
  auto first = evaluate_precoder(s, p, c, opts, nullptr);
  if (!first) throw NonConvergence("initial fixed point did not converge");
  p.u_b = first->state.u_xi;
  p.partition = pair_subchannels(first->state.xi_eig, group_size);
  auto current = evaluate_precoder(s, p, c, opts, &first->state);
  if (!current) throw NonConvergence("fixed point did not converge after pairing");
  p.u_b = current->state.u_xi;

  RunResult run;
  run.mi.push_back(current->mi);
  const LineSearchOptions& ls = opts.line_search;
  const int groups = p.group_count();
  const int ns = group_size;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const double start_mi = current->mi;
    double lambda_step = 0.0;
    double v_step = 0.0;

    // Step 3-4: projected ascent on Lambda^2 with renormalization to P.
    if (power > 0.0) {
      const auto grads = gradients(current->state, p);
      RVector g(nt);
      RVector x(nt);
      for (int sg = 0; sg < groups; ++sg) {
        g.segment(sg * ns, ns) = grads[static_cast<std::size_t>(sg)].lambda_sq;
        x.segment(sg * ns, ns) = p.lambda[static_cast<std::size_t>(sg)].cwiseAbs2();
      }
      RVector d = g.array() - g.mean();
      const double span = d.cwiseAbs().maxCoeff();
      if (span > 1e-14) {
        d *= (power / nt) / span;
        double t = ls.initial_step;
        for (int h = 0; h <= ls.max_halvings; ++h, t *= ls.shrink) {
          RVector trial = (x + t * d).cwiseMax(0.0);
          const double total = trial.sum();
          if (!(total > 0.0)) continue;
          trial *= power / total;
          const double slope = g.dot(trial - x);
          if (!(slope > 0.0)) continue;
          Precoder cand = p;
          for (int sg = 0; sg < groups; ++sg)
            cand.lambda[static_cast<std::size_t>(sg)] = trial.segment(sg * ns, ns).cwiseSqrt();
          auto ev = evaluate_precoder(s, cand, c, opts, &current->state);
          if (ev && ev->mi >= current->mi + ls.armijo * slope) {
            cand.u_b = ev->state.u_xi;
            p = std::move(cand);
            current = std::move(ev);
            lambda_step = t;
            break;
          }
        }
      }
    }

    // Step 5-6: ascent on each V_s along expm of the skew-Hermitian direction.
    if (ns > 1 && power > 0.0) {
      const auto grads = gradients(current->state, p);
      double norm_sq = 0.0;
      for (int sg = 0; sg < groups; ++sg)
        norm_sq +=
            tangent_direction(p.v[static_cast<std::size_t>(sg)], grads[static_cast<std::size_t>(sg)].v).squaredNorm();
      if (norm_sq > 1e-24) {
        // unit step = rotation of pi/4 in Frobenius norm
        const double scale = (std::numbers::pi / 4.0) / std::sqrt(norm_sq);
        double t = ls.initial_step;
        for (int h = 0; h <= ls.max_halvings; ++h, t *= ls.shrink) {
          Precoder cand = p;
          for (int sg = 0; sg < groups; ++sg)
            cand.v[static_cast<std::size_t>(sg)] = retract_unitary(
                p.v[static_cast<std::size_t>(sg)], grads[static_cast<std::size_t>(sg)].v, t * scale);
          const double slope = t * scale * norm_sq;
          auto ev = evaluate_precoder(s, cand, c, opts, &current->state);
          if (ev && ev->mi >= current->mi + ls.armijo * slope) {
            cand.u_b = ev->state.u_xi;
            p = std::move(cand);
            current = std::move(ev);
            v_step = t;
            break;
          }
        }
      }
    }

    run.mi.push_back(current->mi);
    run.steps.push_back(lambda_step);
    run.v_steps.push_back(v_step);
    // Step 7: stop on a small improvement.
    if (current->mi - start_mi <= opts.eps) {
      run.converged = true;
      break;
    }
  }
  // Step 8: U_B is the (aligned) eigenbasis of the final Xi.
  p.u_b = current->state.u_xi;
  run.precoder = std::move(p);
  run.state = std::move(current->state);
  return run;
}

}  // namespace detail

/// Relative distance from kappa B = Xi B E, the first-order condition of the
/// unconstrained problem: ||Xi B E - kappa B||_F / ||Xi B E||_F with the
/// least-squares kappa and E the block-diagonal symbol MMSE matrix.
inline double stationarity_residual(const DetEquivState& state, const Precoder& p) {
  const StreamPartition& part = p.partition;
  if (static_cast<int>(state.groups.size()) != part.group_count())
    throw std::invalid_argument("state groups do not match the precoder partition");
  const int nt = p.n_t();
  CMatrix e = CMatrix::Zero(nt, nt);
  for (int s = 0; s < part.group_count(); ++s) {
    const CMatrix& es = state.groups[static_cast<std::size_t>(s)].error_cov;
    for (int i = 0; i < part.group_size(); ++i)
      for (int j = 0; j < part.group_size(); ++j) e(part.index(s, i), part.index(s, j)) = es(i, j);
  }
  const CMatrix b = realized_precoder(state, p);
  const CMatrix lhs = state.Xi * b * e;
  const double bb = b.squaredNorm();
  const double denom = lhs.norm();
  if (bb == 0.0 || denom == 0.0) return 0.0;
  const double kappa = (b.adjoint() * lhs).trace().real() / bb;
  return (lhs - kappa * b).norm() / denom;
}

/// Alternating power and rotation ascent with `restarts` random
/// initializations; returns the best run.
inline OptimizationResult optimize(const ChannelStatistics& s, const Constellation& c, double power, int group_size,
                                   const OptimizerOptions& opts = {}) {
  if (!(power >= 0.0)) throw std::invalid_argument("power budget must be >= 0");
  if (group_size < 1 || s.n_t() % group_size != 0)
    throw std::invalid_argument("group size " + std::to_string(group_size) + " does not divide N_t = " +
                                std::to_string(s.n_t()));
  if (opts.restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  checked_enumeration_size(c.size(), group_size);

  OptimizationResult best;
  best.trace.restarts = opts.restarts;
  double best_mi = -std::numeric_limits<double>::infinity();
  std::optional<detail::RunResult> winner;
  for (int r = 0; r < opts.restarts; ++r) {
    try {
      detail::RunResult run =
          detail::optimize_once(s, c, power, group_size, opts, derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
      const double mi = run.mi.back();
      best.trace.restart_mi.push_back(mi);
      best.trace.restart_errors.emplace_back();
      if (mi > best_mi) {
        best_mi = mi;
        best.trace.best_restart = r;
        winner = std::move(run);
      }
    } catch (const std::exception& e) {
      best.trace.restart_mi.push_back(std::numeric_limits<double>::quiet_NaN());
      best.trace.restart_errors.emplace_back(e.what());
    }
  }
  if (!winner) throw NonConvergence("all " + std::to_string(opts.restarts) + " restarts failed: " +
                                    best.trace.restart_errors.front());
  best.precoder = std::move(winner->precoder);
  best.state = std::move(winner->state);
  best.trace.mi_per_iteration = std::move(winner->mi);
  best.trace.step_sizes = std::move(winner->steps);
  best.trace.v_step_sizes = std::move(winner->v_steps);
  best.trace.converged = winner->converged;
  best.mi = asymptotic_mi(best.state, s);
  best.trace.stationarity_residual = stationarity_residual(best.state, best.precoder);
  return best;
}

}  // namespace fap

#endif  // FAP_OPTIMIZER_HPP
