// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_COMPLEXITY_HPP
#define FAP_COMPLEXITY_HPP

#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace fap {

using BigInt = boost::multiprecision::cpp_int;

/// Cost of one MI + MMSE evaluation, counted in additions.
struct CostModel {
  int m = 2;    // alphabet size
  int n_t = 1;
  int n_s = 1;

  CostModel(int m_, int n_t_, int n_s_) : m(m_), n_t(n_t_), n_s(n_s_) {
    if (m < 2) throw std::invalid_argument("alphabet size must be >= 2");
    if (n_s < 1 || n_t < 1 || n_t % n_s != 0)
      throw std::invalid_argument("N_s = " + std::to_string(n_s) + " does not divide N_t = " + std::to_string(n_t));
  }
  int groups() const { return n_t / n_s; }
};

/// S M^{2 N_s}
inline BigInt addition_count(int m, int n_t, int n_s) {
  const CostModel cm(m, n_t, n_s);
  return BigInt(cm.groups()) * boost::multiprecision::pow(BigInt(m), 2 * n_s);
}

/// M^{2 N_t}
inline BigInt complete_count(int m, int n_t) {
  if (m < 2 || n_t < 1) throw std::invalid_argument("need M >= 2 and N_t >= 1");
  return boost::multiprecision::pow(BigInt(m), 2 * n_t);
}

/// Mantissa with `digits` decimals and an exponent of at least three digits,
/// e.g. 4294967296 -> "4.2950e+009". Rounds half up.
inline std::string scientific(const BigInt& value, int digits = 4) {
  if (value < 0) return "-" + scientific(-value, digits);
  std::string s = value.str();
  if (s == "0") return "0." + std::string(static_cast<std::size_t>(digits), '0') + "e+000";
  int exponent = static_cast<int>(s.size()) - 1;
  const auto keep = static_cast<std::size_t>(digits + 1);
  std::string mant = s.substr(0, std::min(keep, s.size()));
  mant.resize(keep, '0');
  if (s.size() > keep && s[keep] >= '5') {
    int i = static_cast<int>(keep) - 1;
    while (i >= 0 && mant[static_cast<std::size_t>(i)] == '9') mant[static_cast<std::size_t>(i--)] = '0';
    if (i >= 0) {
      ++mant[static_cast<std::size_t>(i)];
    } else {
      mant.insert(mant.begin(), '1');
      mant.pop_back();
      ++exponent;
    }
  }
  std::string exp = std::to_string(exponent);
  if (exp.size() < 3) exp.insert(0, 3 - exp.size(), '0');
  std::string out(1, mant[0]);
  if (digits > 0) out += "." + mant.substr(1);
  return out + "e+" + exp;
}

/// Plain integer below 10^7, otherwise scientific().
inline std::string render_count(const BigInt& value) {
  return value < BigInt(10000000) ? value.str() : scientific(value);
}

}  // namespace fap

#endif  // FAP_COMPLEXITY_HPP
