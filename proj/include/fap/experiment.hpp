// SPDX-License-Identifier: Apache-2.0
#ifndef FAP_EXPERIMENT_HPP
#define FAP_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fap/channel_model.hpp"
#include "fap/constellation.hpp"
#include "fap/det_equiv.hpp"
#include "fap/finite_alphabet.hpp"
#include "fap/io.hpp"
#include "fap/optimizer.hpp"
#include "fap/precoder.hpp"

namespace fap {

inline constexpr const char* kToolName = "fa-precode";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kOutputRootEnv = "FA_PRECODE_OUT";

/// Eigenvalues of the exponential correlation matrix [rho^|i-j|], descending.
inline RVector exponential_correlation_profile(int n, double rho) {
  if (n < 1) throw std::invalid_argument("profile length must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("correlation coefficient must lie in [0, 1)");
  RMatrix r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(r);
  RVector lam = eig.eigenvalues().reverse().cwiseMax(0.0);
  return lam;
}

/// Random ray geometry: uniform angles in (-pi/2, pi/2), Rayleigh attenuations.
inline RayGeometry random_ray_geometry(int paths, bool los, std::uint64_t seed, double los_power = 1.0) {
  if (paths < 0) throw std::invalid_argument("path count must be >= 0");
  GaussianSource rng(seed);
  auto angle = [&] { return (2.0 * rng.uniform() - 1.0) * std::numbers::pi / 2.0; };
  RayGeometry geo;
  for (int l = 0; l < paths; ++l) {
    RayPath p;
    p.attenuation = std::abs(rng.complex_normal()) / std::sqrt(static_cast<double>(std::max(paths, 1)));
    p.path_length = 10.0 * rng.uniform();
    p.departure = angle();
    p.arrival = angle();
    geo.scattered.push_back(p);
  }
  if (los) geo.los = RayPath{std::sqrt(los_power), 10.0 * rng.uniform(), angle(), angle()};
  return geo;
}

inline Json ray_path_to_json(const RayPath& p) {
  return Json{{"attenuation", p.attenuation}, {"path_length", p.path_length}, {"departure", p.departure},
              {"arrival", p.arrival}};
}

inline RayPath ray_path_from_json(const Json& j) {
  RayPath p;
  p.attenuation = j.at("attenuation").get<double>();
  p.path_length = j.value("path_length", 0.0);
  p.departure = j.at("departure").get<double>();
  p.arrival = j.at("arrival").get<double>();
  if (!(p.attenuation >= 0.0)) throw std::invalid_argument("ray attenuation must be >= 0");
  return p;
}

inline RayGeometry ray_geometry_from_json(const Json& j) {
  RayGeometry geo;
  geo.wavelength = j.value("wavelength", 1.0);
  if (!(geo.wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  if (j.contains("los") && !j.at("los").is_null()) geo.los = ray_path_from_json(j.at("los"));
  if (j.contains("scattered"))
    for (const auto& p : j.at("scattered")) geo.scattered.push_back(ray_path_from_json(p));
  return geo;
}

inline Json ray_geometry_to_json(const RayGeometry& geo) {
  Json j;
  j["wavelength"] = geo.wavelength;
  j["los"] = geo.los ? ray_path_to_json(*geo.los) : Json(nullptr);
  Json sc = Json::array();
  for (const auto& p : geo.scattered) sc.push_back(ray_path_to_json(p));
  j["scattered"] = std::move(sc);
  return j;
}

// ---------------------------------------------------------------------------
// Configuration.

enum class Design { kProposed, kIdentity, kMrt, kCompleteSearch };

inline std::string design_name(Design d) {
  switch (d) {
    case Design::kProposed:
      return "proposed";
    case Design::kIdentity:
      return "identity";
    case Design::kMrt:
      return "mrt";
    case Design::kCompleteSearch:
      return "complete_search";
  }
  return "?";
}

inline Design design_from_name(const std::string& s) {
  if (s == "identity") return Design::kIdentity;
  if (s == "mrt") return Design::kMrt;
  if (s == "complete_search") return Design::kCompleteSearch;
  throw std::invalid_argument("unknown baseline \"" + s + "\" (identity | mrt | complete_search)");
}

/// Statistics source reduced to an unnormalized shape; the sweep's Rice
/// factor is applied per point.
struct StatisticsSource {
  std::string kind;
  StatisticsShape shape;
};

struct ValidationOptions {
  std::int64_t channel_samples = 1000;
  std::int64_t noise_samples = 1000;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  StatisticsSource statistics;
  std::string constellation = "qpsk";
  std::vector<double> snr_db;
  std::vector<RiceFactor> rice_k;
  int group_size = 1;
  OptimizerOptions optimizer;
  std::optional<ValidationOptions> validation;
  std::vector<Design> designs;  // proposed first
  std::string output_dir = "fa_precode_out";
  bool record_timing = false;
  bool dump_state = false;
  int threads = 1;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  Json echo;  // the parsed document, for the manifest
};

inline double snr_to_power(double snr_db) {
  if (std::isinf(snr_db) && snr_db < 0) return 0.0;
  return std::pow(10.0, snr_db / 10.0);
}

namespace detail {

inline std::uint64_t required_seed(const Json& j, const char* where) {
  if (!j.contains("seed")) throw std::invalid_argument(std::string(where) + ".seed is required");
  return j.at("seed").get<std::uint64_t>();
}

inline double snr_from_json(const Json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("snr_db entries must be numbers or \"-inf\"");
  }
  return j.get<double>();
}

inline NoiseExpectation noise_from_json(const Json& j, NoiseExpectation ne) {
  const std::string method = j.value("method", "auto");
  if (method == "auto") {
    ne.method = NoiseExpectation::Method::kAuto;
  } else if (method == "gauss_hermite") {
    ne.method = NoiseExpectation::Method::kGaussHermite;
  } else if (method == "monte_carlo") {
    ne.method = NoiseExpectation::Method::kMonteCarlo;
  } else {
    throw std::invalid_argument("noise.method must be auto | gauss_hermite | monte_carlo");
  }
  ne.order = j.value("order", ne.order);
  ne.samples = j.value("samples", ne.samples);
  ne.seed = j.value("seed", ne.seed);
  ne.max_quadrature_dimension = j.value("max_quadrature_dimension", ne.max_quadrature_dimension);
  ne.node_budget = j.value("node_budget", ne.node_budget);
  ne.work_budget = j.value("work_budget", ne.work_budget);
  ne.validate();
  return ne;
}

inline StatisticsSource source_from_json(const Json& j) {
  StatisticsSource src;
  src.kind = j.at("source").get<std::string>();
  if (src.kind == "inline") {
    src.shape = statistics_shape_from_json(j.at("document"));
  } else if (src.kind == "file") {
    src.shape = statistics_shape_from_json(read_json(j.at("path").get<std::string>()));
  } else if (src.kind == "kronecker") {
    RVector lr;
    RVector lt;
    if (j.contains("lambda_r")) {
      const auto a = j.at("lambda_r").get<std::vector<double>>();
      const auto b = j.at("lambda_t").get<std::vector<double>>();
      lr = Eigen::Map<const RVector>(a.data(), static_cast<Eigen::Index>(a.size()));
      lt = Eigen::Map<const RVector>(b.data(), static_cast<Eigen::Index>(b.size()));
    } else {
      lr = exponential_correlation_profile(j.at("n_r").get<int>(), j.at("rho_r").get<double>());
      lt = exponential_correlation_profile(j.at("n_t").get<int>(), j.at("rho_t").get<double>());
    }
    const std::string basis = j.value("basis", "virtual");
    CMatrix u_r;
    CMatrix u_t;
    if (basis == "virtual") {
      u_r = virtual_basis(static_cast<int>(lr.size()));
      u_t = virtual_basis(static_cast<int>(lt.size()));
    } else if (basis == "haar") {
      GaussianSource rng(required_seed(j, "statistics"));
      u_r = random_unitary(static_cast<int>(lr.size()), rng);
      u_t = random_unitary(static_cast<int>(lt.size()), rng);
    } else {
      throw std::invalid_argument("kronecker basis must be virtual | haar");
    }
    const KroneckerStatistics ks = kronecker_statistics(lr, lt, u_r, u_t);
    src.shape = {ks.stats.u_r(), ks.stats.u_t(), ks.stats.g_tilde(), ks.stats.h_bar(), RiceFactor::finite(0.0)};
  } else if (src.kind == "ray") {
    const RayStatistics rs =
        ray_statistics(ray_geometry_from_json(j), j.at("n_r").get<int>(), j.at("n_t").get<int>());
    src.shape = {rs.stats.u_r(), rs.stats.u_t(), rs.stats.g_tilde(), rs.stats.h_bar(), rs.stats.rice()};
  } else if (src.kind == "random") {
    // Generated with both components present so that any swept K applies.
    const ChannelStatistics s = random_statistics(j.at("n_r").get<int>(), j.at("n_t").get<int>(),
                                                  RiceFactor::finite(1.0), required_seed(j, "statistics"),
                                                  j.value("decay", 0.6));
    src.shape = {s.u_r(), s.u_t(), s.g_tilde(), s.h_bar(),
                 j.contains("k") ? rice_from_json(j.at("k")) : RiceFactor::finite(0.0)};
  } else {
    throw std::invalid_argument("statistics.source must be inline | file | kronecker | ray | random");
  }
  return src;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const Json& j) {
  ExperimentConfig cfg;
  cfg.echo = j;
  cfg.statistics = detail::source_from_json(j.at("statistics"));
  cfg.constellation = j.value("constellation", cfg.constellation);
  constellation_from_name(cfg.constellation);

  for (const auto& x : j.at("snr_db")) cfg.snr_db.push_back(detail::snr_from_json(x));
  if (cfg.snr_db.empty()) throw std::invalid_argument("snr_db must not be empty");
  if (j.contains("rice_k")) {
    for (const auto& x : j.at("rice_k")) cfg.rice_k.push_back(rice_from_json(x));
    if (cfg.rice_k.empty()) throw std::invalid_argument("rice_k must not be empty");
  } else {
    cfg.rice_k.push_back(cfg.statistics.shape.k);
  }

  cfg.group_size = j.at("group_size").get<int>();
  const auto n_t = static_cast<int>(cfg.statistics.shape.u_t.rows());
  if (cfg.group_size < 1 || n_t % cfg.group_size != 0)
    throw std::invalid_argument("group_size must divide N_t = " + std::to_string(n_t));

  if (j.contains("noise")) cfg.optimizer.ne = detail::noise_from_json(j.at("noise"), cfg.optimizer.ne);
  const Json& opt = j.at("optimizer");
  cfg.optimizer.eps = opt.value("eps", cfg.optimizer.eps);
  cfg.optimizer.max_iter = opt.value("max_iter", cfg.optimizer.max_iter);
  cfg.optimizer.restarts = opt.value("restarts", cfg.optimizer.restarts);
  cfg.optimizer.seed = detail::required_seed(opt, "optimizer");
  if (cfg.optimizer.max_iter < 1 || cfg.optimizer.restarts < 1 || !(cfg.optimizer.eps > 0.0))
    throw std::invalid_argument("optimizer needs eps > 0, max_iter >= 1, restarts >= 1");
  if (opt.contains("solver")) {
    const Json& so = opt.at("solver");
    cfg.optimizer.solver.tol = so.value("tol", cfg.optimizer.solver.tol);
    cfg.optimizer.solver.max_iter = so.value("max_iter", cfg.optimizer.solver.max_iter);
    cfg.optimizer.solver.damping = so.value("damping", cfg.optimizer.solver.damping);
  }

  if (j.contains("validation")) {
    const Json& v = j.at("validation");
    ValidationOptions vo;
    vo.channel_samples = v.value("channel_samples", vo.channel_samples);
    vo.noise_samples = v.value("noise_samples", vo.noise_samples);
    vo.seed = detail::required_seed(v, "validation");
    if (vo.channel_samples < 1 || vo.noise_samples < 100)
      throw std::invalid_argument("validation needs channel_samples >= 1 and noise_samples >= 100");
    cfg.validation = vo;
  }

  cfg.designs.push_back(Design::kProposed);
  if (j.contains("baselines")) {
    for (const auto& b : j.at("baselines")) {
      const Design d = design_from_name(b.get<std::string>());
      if (std::find(cfg.designs.begin(), cfg.designs.end(), d) == cfg.designs.end()) cfg.designs.push_back(d);
    }
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.record_timing = j.value("record_timing", false);
  cfg.dump_state = j.value("dump_state", false);
  cfg.threads = j.value("threads", 1);
  if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
  cfg.enumeration_cap = j.value("enumeration_cap", cfg.enumeration_cap);
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_json(path));
}

/// Output directory, placed under $FA_PRECODE_OUT when that is set and the
/// configured directory is relative.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.output_dir);
  const char* root = std::getenv(kOutputRootEnv);
  if (root != nullptr && *root != '\0' && dir.is_relative()) dir = std::filesystem::path(root) / dir;
  return dir;
}

// ---------------------------------------------------------------------------
// Evaluation.

struct SweepPoint {
  int index = 0;
  double snr_db = 0.0;
  RiceFactor k = RiceFactor::finite(0.0);
  std::uint64_t optimizer_seed = 0;
  std::uint64_t validation_seed = 0;
};

struct SweepRow {
  int point = 0;
  double snr_db = 0.0;
  RiceFactor k = RiceFactor::finite(0.0);
  std::string design;
  double mi_asymptotic_bits = std::numeric_limits<double>::quiet_NaN();
  double mi_exact_bits = std::numeric_limits<double>::quiet_NaN();
  double mi_exact_stderr = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double wall_time_ms = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t optimizer_seed = 0;
  std::uint64_t validation_seed = 0;
  std::string status = "ok";
};

struct PointResult {
  SweepPoint point;
  std::vector<SweepRow> rows;
  std::optional<OptimizationResult> proposed;
  std::string error;
  std::vector<std::string> warnings;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
  std::vector<SweepPoint> pts;
  for (const RiceFactor& k : cfg.rice_k) {
    for (double snr : cfg.snr_db) {
      SweepPoint p;
      p.index = static_cast<int>(pts.size());
      p.snr_db = snr;
      p.k = k;
      p.optimizer_seed = derive_seed(cfg.optimizer.seed, static_cast<std::uint64_t>(p.index));
      p.validation_seed = cfg.validation ? derive_seed(cfg.validation->seed, static_cast<std::uint64_t>(p.index)) : 0;
      pts.push_back(p);
    }
  }
  return pts;
}

/// sqrt(P) u_1 e_1^T with u_1 the dominant eigenvector of Xi.
inline CMatrix mrt_precoder(const CMatrix& xi, double power) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(xi));
  const Eigen::Index n = xi.rows();
  CMatrix b = CMatrix::Zero(n, n);
  b.col(0) = std::sqrt(power) * eig.eigenvectors().col(n - 1);
  return b;
}

inline CMatrix identity_precoder(int n_t, double power) {
  return CMatrix::Identity(n_t, n_t) * std::sqrt(power / n_t);
}

inline ErgodicMI exact_mi_for_point(const ChannelStatistics& s, const CMatrix& b, const Constellation& c,
                                    const ValidationOptions& vo, std::uint64_t point_seed, std::uint64_t cap) {
  // Common random numbers across designs at the same point.
  const NoiseExpectation ne = NoiseExpectation::monte_carlo(vo.noise_samples, derive_seed(point_seed, 1));
  return exact_ergodic_mi(s, b, c, vo.channel_samples, ne, derive_seed(point_seed, 0), cap);
}

inline Json state_to_json(const DetEquivState& st) {
  Json j;
  j["gamma"] = real_matrix_to_json(st.gamma);
  j["psi"] = real_matrix_to_json(st.psi);
  j["Xi"] = complex_matrix_to_json(st.Xi);
  j["Omega"] = complex_matrix_to_json(st.Omega);
  j["xi_eig"] = real_matrix_to_json(st.xi_eig);
  j["residual"] = st.residual;
  j["iterations"] = st.iterations;
  j["converged"] = st.converged;
  j["negative_gamma"] = st.negative_gamma;
  return j;
}

namespace detail {

inline std::string point_tag(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%03d", index);
  return buf;
}

inline void write_trace(const std::filesystem::path& path, const OptimizationTrace& t) {
  CsvWriter csv(path.string());
  csv.row({"iteration", "mi_bits", "step", "v_step"});
  for (std::size_t i = 0; i < t.mi_per_iteration.size(); ++i) {
    const double step = i == 0 ? std::numeric_limits<double>::quiet_NaN() : t.step_sizes.at(i - 1);
    const double vstep = i == 0 ? std::numeric_limits<double>::quiet_NaN() : t.v_step_sizes.at(i - 1);
    csv.row({std::to_string(i), format_number(t.mi_per_iteration[i]), format_number(step), format_number(vstep)});
  }
}

inline PointResult run_point(const ExperimentConfig& cfg, const SweepPoint& pt, const std::filesystem::path& dir) {
  using Clock = std::chrono::steady_clock;
  PointResult res;
  res.point = pt;
  auto base_row = [&](Design d) {
    SweepRow r;
    r.point = pt.index;
    r.snr_db = pt.snr_db;
    r.k = pt.k;
    r.design = design_name(d);
    r.optimizer_seed = pt.optimizer_seed;
    r.validation_seed = pt.validation_seed;
    return r;
  };
  try {
    const Constellation c = constellation_from_name(cfg.constellation);
    const ChannelStatistics s = cfg.statistics.shape.with_rice(pt.k);
    const double power = snr_to_power(pt.snr_db);
    const int nt = s.n_t();
    OptimizerOptions oo = cfg.optimizer;
    oo.seed = pt.optimizer_seed;

    bool exact_feasible = cfg.validation.has_value();
    if (exact_feasible) {
      try {
        checked_enumeration_size(c.size(), nt, cfg.enumeration_cap);
      } catch (const CapExceeded& e) {
        exact_feasible = false;
        res.warnings.push_back(e.what());
      }
    }

    std::optional<DetEquivState> identity_state;
    auto identity_fixed_point = [&]() -> const DetEquivState& {
      if (!identity_state) {
        identity_state = solve_fixed_point_matrix(s, identity_precoder(nt, power), c, oo.ne, oo.solver);
        require_converged(*identity_state);
      }
      return *identity_state;
    };

    for (Design d : cfg.designs) {
      const auto t0 = Clock::now();
      SweepRow row = base_row(d);
      CMatrix b;
      switch (d) {
        case Design::kProposed:
        case Design::kCompleteSearch: {
          const int ns = d == Design::kProposed ? cfg.group_size : nt;
          OptimizationResult r = optimize(s, c, power, ns, oo);
          row.mi_asymptotic_bits = r.mi.total_bits;
          row.iterations = static_cast<int>(r.trace.mi_per_iteration.size()) - 1;
          b = realized_precoder(r.state, r.precoder);
          if (d == Design::kProposed) res.proposed = std::move(r);
          break;
        }
        case Design::kIdentity: {
          b = identity_precoder(nt, power);
          row.mi_asymptotic_bits = asymptotic_mi(identity_fixed_point(), s).total_bits;
          break;
        }
        case Design::kMrt: {
          b = mrt_precoder(identity_fixed_point().Xi, power);
          DetEquivState st = solve_fixed_point_matrix(s, b, c, oo.ne, oo.solver);
          require_converged(st);
          row.mi_asymptotic_bits = asymptotic_mi(st, s).total_bits;
          break;
        }
      }
      if (exact_feasible) {
        const ErgodicMI e = exact_mi_for_point(s, b, c, *cfg.validation, pt.validation_seed, cfg.enumeration_cap);
        row.mi_exact_bits = e.mi_bits;
        row.mi_exact_stderr = e.std_err;
      } else if (cfg.validation) {
        row.status = "warning:exact_mi_cap_exceeded";
      }
      if (cfg.record_timing)
        row.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      res.rows.push_back(std::move(row));
    }

    const std::string tag = point_tag(pt.index);
    write_trace(dir / ("trace_" + tag + ".csv"), res.proposed->trace);
    write_json((dir / ("precoder_" + tag + ".json")).string(), precoder_to_json(res.proposed->precoder));
    if (cfg.dump_state) write_json((dir / ("state_" + tag + ".json")).string(), state_to_json(res.proposed->state));
  } catch (const std::exception& e) {
    res.error = e.what();
    res.rows.clear();
    for (Design d : cfg.designs) {
      SweepRow row = base_row(d);
      row.status = "error";
      res.rows.push_back(std::move(row));
    }
  }
  return res;
}

inline std::string seed_string(std::uint64_t s) { return std::to_string(s); }

inline Json rice_echo(RiceFactor k) { return rice_to_json(k); }

inline std::string run_id(const ExperimentConfig& cfg) {
  return hex64(fnv1a(std::string(kToolName) + "/" + kToolVersion + "\n" + cfg.echo.dump())).substr(0, 12);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

struct ExperimentReport {
  std::filesystem::path output_dir;
  std::string run_id;
  std::vector<PointResult> points;
  int failed_points = 0;

  int exit_code() const { return failed_points == 0 ? 0 : 2; }
};

/// Writes sweep.csv, trace_pNNN.csv, precoder_pNNN.json and manifest.json.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport rep;
  rep.output_dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(rep.output_dir);
  rep.run_id = detail::run_id(cfg);

  const std::vector<SweepPoint> pts = sweep_points(cfg);
  rep.points.resize(pts.size());
  detail::parallel_for(static_cast<int>(pts.size()), cfg.threads, [&](int i) {
    rep.points[static_cast<std::size_t>(i)] = detail::run_point(cfg, pts[static_cast<std::size_t>(i)], rep.output_dir);
  });

  CsvWriter csv((rep.output_dir / "sweep.csv").string());
  csv.row({"point", "snr_db", "k", "design", "mi_asymptotic_bits", "mi_exact_bits", "mi_exact_stderr", "iterations",
           "wall_time_ms", "optimizer_seed", "validation_seed", "status"});
  Json points = Json::array();
  for (const PointResult& pr : rep.points) {
    for (const SweepRow& r : pr.rows) {
      csv.row({std::to_string(r.point), format_number(r.snr_db),
               r.k.is_infinite() ? "inf" : format_number(r.k.value()), r.design, format_number(r.mi_asymptotic_bits),
               format_number(r.mi_exact_bits), format_number(r.mi_exact_stderr), std::to_string(r.iterations),
               format_number(r.wall_time_ms), detail::seed_string(r.optimizer_seed),
               cfg.validation ? detail::seed_string(r.validation_seed) : "", r.status});
    }
    Json pj;
    pj["point"] = pr.point.index;
    pj["snr_db"] = std::isinf(pr.point.snr_db) ? Json("-inf") : Json(pr.point.snr_db);
    pj["k"] = detail::rice_echo(pr.point.k);
    pj["optimizer_seed"] = pr.point.optimizer_seed;
    if (cfg.validation) pj["validation_seed"] = pr.point.validation_seed;
    pj["status"] = pr.error.empty() ? "ok" : "error";
    if (!pr.error.empty()) {
      pj["error"] = pr.error;
      ++rep.failed_points;
    } else {
      const std::string tag = detail::point_tag(pr.point.index);
      pj["trace"] = "trace_" + tag + ".csv";
      pj["precoder"] = "precoder_" + tag + ".json";
      if (pr.proposed) {
        pj["restart_mi_bits"] = pr.proposed->trace.restart_mi;
        pj["stationarity_residual"] = pr.proposed->trace.stationarity_residual;
      }
    }
    if (!pr.warnings.empty()) pj["warnings"] = pr.warnings;
    points.push_back(std::move(pj));
  }

  Json manifest;
  manifest["tool"] = kToolName;
  manifest["version"] = kToolVersion;
  manifest["run_id"] = rep.run_id;
  manifest["conventions"] = {
      {"snr", "P = 10^(snr_db/10) with unit noise covariance; \"-inf\" means P = 0"},
      {"mi_units", "bits per channel use"},
      {"index_base", 0},
      {"matrix_layout", "row-major; complex entries interleaved re, im"},
      {"mrt", "sqrt(P) u1 e1^T, u1 the dominant eigenvector of Xi at the identity-precoder fixed point"}};
  manifest["config"] = cfg.echo;
  manifest["points"] = std::move(points);
  manifest["failed_points"] = rep.failed_points;
  write_json((rep.output_dir / "manifest.json").string(), manifest);
  return rep;
}

// ---------------------------------------------------------------------------
// Asymptotic vs exact on identical (optimized) precoders.

struct ValidationRow {
  double snr_db = 0.0;
  RiceFactor k = RiceFactor::finite(0.0);
  double mi_asy = 0.0;
  double mi_exact = 0.0;
  double stderr_bits = 0.0;
  double rel_err = 0.0;
};

inline double relative_error(double asy, double exact) {
  const double diff = std::abs(asy - exact);
  if (exact == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / std::abs(exact);
}

inline std::vector<ValidationRow> validate_asymptotics(const ExperimentConfig& cfg) {
  if (!cfg.validation) throw std::invalid_argument("validate needs a validation section");
  const Constellation c = constellation_from_name(cfg.constellation);
  checked_enumeration_size(c.size(), static_cast<int>(cfg.statistics.shape.u_t.rows()), cfg.enumeration_cap);

  const std::vector<SweepPoint> pts = sweep_points(cfg);
  std::vector<ValidationRow> rows(pts.size());
  detail::parallel_for(static_cast<int>(pts.size()), cfg.threads, [&](int i) {
    const SweepPoint& pt = pts[static_cast<std::size_t>(i)];
    const ChannelStatistics s = cfg.statistics.shape.with_rice(pt.k);
    OptimizerOptions oo = cfg.optimizer;
    oo.seed = pt.optimizer_seed;
    const OptimizationResult r = optimize(s, c, snr_to_power(pt.snr_db), cfg.group_size, oo);
    const ErgodicMI e = exact_mi_for_point(s, realized_precoder(r.state, r.precoder), c, *cfg.validation,
                                           pt.validation_seed, cfg.enumeration_cap);
    ValidationRow& row = rows[static_cast<std::size_t>(i)];
    row.snr_db = pt.snr_db;
    row.k = pt.k;
    row.mi_asy = r.mi.total_bits;
    row.mi_exact = e.mi_bits;
    row.stderr_bits = e.std_err;
    row.rel_err = relative_error(row.mi_asy, row.mi_exact);
  });

  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::filesystem::create_directories(dir);
  CsvWriter csv((dir / "validate.csv").string());
  csv.row({"snr_db", "k", "mi_asy", "mi_exact", "stderr", "rel_err"});
  for (const auto& r : rows) {
    csv.row({format_number(r.snr_db), r.k.is_infinite() ? "inf" : format_number(r.k.value()), format_number(r.mi_asy),
             format_number(r.mi_exact), format_number(r.stderr_bits), format_number(r.rel_err)});
  }
  return rows;
}

}  // namespace fap

#endif  // FAP_EXPERIMENT_HPP
