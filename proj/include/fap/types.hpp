// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_TYPES_HPP
#define FAP_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fap {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kLog2E = 1.4426950408889634074;

/// Raised when an exhaustive enumeration or tensor grid would exceed its cap.
class CapExceeded : public std::length_error {
 public:
  explicit CapExceeded(const std::string& what) : std::length_error(what) {}
};

/// Raised by iterative solvers that fail to meet their tolerance.
class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

/// ||A^H A - I||_F
inline double unitarity_error(const CMatrix& a) {
  return (a.adjoint() * a - CMatrix::Identity(a.cols(), a.cols())).norm();
}

inline bool is_unitary(const CMatrix& a, double tol = 1e-10) {
  return a.rows() == a.cols() && unitarity_error(a) <= tol;
}

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

}  // namespace fap

#endif  // FAP_TYPES_HPP
