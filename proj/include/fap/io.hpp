// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_IO_HPP
#define FAP_IO_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fap/channel_model.hpp"
#include "fap/precoder.hpp"
#include "fap/types.hpp"

namespace fap {

using Json = nlohmann::ordered_json;

// Matrices are flat row-major arrays; complex entries are interleaved re, im.

inline Json real_matrix_to_json(const RMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

inline Json complex_matrix_to_json(const CMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out.push_back(m(i, j).real());
      out.push_back(m(i, j).imag());
    }
  }
  return out;
}

inline RMatrix real_matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows * cols) + " numbers");
  RMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j.at(static_cast<std::size_t>(i * cols + k)).get<double>();
  return m;
}

inline CMatrix complex_matrix_from_json(const Json& j, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != 2 * rows * cols)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(2 * rows * cols) +
                                " numbers (interleaved re, im)");
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto idx = static_cast<std::size_t>(2 * (i * cols + k));
      m(i, k) = cplx(j.at(idx).get<double>(), j.at(idx + 1).get<double>());
    }
  }
  return m;
}

inline Json rice_to_json(RiceFactor k) { return k.is_infinite() ? Json("inf") : Json(k.value()); }

inline RiceFactor rice_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return RiceFactor::infinite();
    throw std::invalid_argument("Rice factor must be a number or \"inf\"");
  }
  return RiceFactor::finite(j.get<double>());
}

inline Json statistics_to_json(const ChannelStatistics& s) {
  Json j;
  j["n_r"] = s.n_r();
  j["n_t"] = s.n_t();
  j["U_R"] = complex_matrix_to_json(s.u_r());
  j["U_T"] = complex_matrix_to_json(s.u_t());
  j["G_tilde"] = real_matrix_to_json(s.g_tilde());
  j["H_bar"] = complex_matrix_to_json(s.h_bar());
  j["K"] = rice_to_json(s.rice());
  return j;
}

/// Raw (unnormalized) statistics document; `k` overrides the stored K.
struct StatisticsShape {
  CMatrix u_r;
  CMatrix u_t;
  RMatrix g_tilde;
  CMatrix h_bar;
  RiceFactor k = RiceFactor::finite(0.0);

  ChannelStatistics with_rice(RiceFactor kk) const { return new_statistics(u_r, u_t, g_tilde, h_bar, kk); }
  ChannelStatistics build() const { return with_rice(k); }
};

inline StatisticsShape statistics_shape_from_json(const Json& j) {
  const auto nr = j.at("n_r").get<Eigen::Index>();
  const auto nt = j.at("n_t").get<Eigen::Index>();
  if (nr < 1 || nt < 1) throw std::invalid_argument("n_r and n_t must be positive");
  StatisticsShape s;
  s.u_r = complex_matrix_from_json(j.at("U_R"), nr, nr, "U_R");
  s.u_t = complex_matrix_from_json(j.at("U_T"), nt, nt, "U_T");
  s.g_tilde = real_matrix_from_json(j.at("G_tilde"), nr, nt, "G_tilde");
  s.h_bar = complex_matrix_from_json(j.at("H_bar"), nr, nt, "H_bar");
  s.k = rice_from_json(j.at("K"));
  return s;
}

inline ChannelStatistics statistics_from_json(const Json& j) { return statistics_shape_from_json(j).build(); }

inline Json precoder_to_json(const Precoder& p) {
  Json j;
  j["U_B"] = complex_matrix_to_json(p.u_b);
  Json lambda = Json::array();
  Json v = Json::array();
  for (int s = 0; s < p.group_count(); ++s) {
    Json l = Json::array();
    for (double x : p.lambda[static_cast<std::size_t>(s)]) l.push_back(x);
    lambda.push_back(std::move(l));
    v.push_back(complex_matrix_to_json(p.v[static_cast<std::size_t>(s)]));
  }
  j["lambda"] = std::move(lambda);
  j["V"] = std::move(v);
  j["ell"] = p.partition.ell();
  j["S"] = p.group_count();
  j["N_s"] = p.group_size();
  j["P"] = p.power;
  return j;
}

inline Precoder precoder_from_json(const Json& j) {
  const int ns = j.at("N_s").get<int>();
  StreamPartition part(j.at("ell").get<std::vector<int>>(), ns);
  if (j.at("S").get<int>() != part.group_count()) throw std::invalid_argument("S disagrees with ell and N_s");
  const int nt = part.n_t();
  Precoder p{complex_matrix_from_json(j.at("U_B"), nt, nt, "U_B"), {}, {}, part, j.at("P").get<double>()};
  for (int s = 0; s < part.group_count(); ++s) {
    const auto l = j.at("lambda").at(static_cast<std::size_t>(s)).get<std::vector<double>>();
    if (static_cast<int>(l.size()) != ns) throw std::invalid_argument("lambda entry has the wrong length");
    p.lambda.emplace_back(Eigen::Map<const RVector>(l.data(), ns));
    p.v.push_back(complex_matrix_from_json(j.at("V").at(static_cast<std::size_t>(s)), ns, ns, "V"));
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180 quoting) and number formatting.

inline std::string format_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

inline std::string csv_field(std::string_view f) {
  if (f.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(f);
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Json::parse(in);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace fap

#endif  // FAP_IO_HPP
