// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fap/fap.hpp"

namespace {

void emit(const fap::Json& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    fap::write_json(out, doc);
  }
}

fap::RVector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const fap::RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-alphabet precoder design under statistical CSI"};
  app.require_subcommand(1);

  std::string config_path;
  bool dump_state = false;
  auto* run = app.add_subcommand("run", "Run a configured sweep and write CSV/JSON outputs");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_flag("--dump-state", dump_state, "Also write the fixed-point state of each point");

  auto* validate = app.add_subcommand("validate", "Compare asymptotic and Monte Carlo MI on optimized precoders");
  validate->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  int m = 4;
  int nt = 4;
  int ns = 2;
  auto* complexity = app.add_subcommand("complexity", "Print per-group and complete-search addition counts");
  complexity->add_option("--m", m, "Alphabet size M")->required();
  complexity->add_option("--nt", nt, "Transmit antennas N_t")->required();
  complexity->add_option("--ns", ns, "Group size N_s")->required();

  auto* gen = app.add_subcommand("gen-stats", "Write a statistics document");
  gen->require_subcommand(1);
  std::string out;

  std::vector<double> lambda_r;
  std::vector<double> lambda_t;
  int k_nr = 0;
  int k_nt = 0;
  double rho_r = 0.0;
  double rho_t = 0.0;
  std::string basis = "virtual";
  std::uint64_t seed = 0;
  auto* kron = gen->add_subcommand("kronecker", "Kronecker statistics from eigenvalue profiles");
  auto* lr_opt = kron->add_option("--lambda-r", lambda_r, "Receive eigenvalue profile");
  kron->add_option("--lambda-t", lambda_t, "Transmit eigenvalue profile")->needs(lr_opt);
  auto* nr_opt = kron->add_option("--nr", k_nr, "Receive antennas (exponential profile)")->excludes(lr_opt);
  kron->add_option("--nt", k_nt, "Transmit antennas (exponential profile)")->needs(nr_opt);
  kron->add_option("--rho-r", rho_r, "Receive correlation coefficient");
  kron->add_option("--rho-t", rho_t, "Transmit correlation coefficient");
  kron->add_option("--basis", basis, "virtual | haar")->check(CLI::IsMember({"virtual", "haar"}));
  kron->add_option("--seed", seed, "Seed for the haar basis");
  kron->add_option("-o,--output", out, "Output file (default stdout)");

  int r_nr = 8;
  int r_nt = 8;
  int paths = 8;
  bool los = false;
  double los_power = 1.0;
  std::uint64_t ray_seed = 0;
  auto* ray = gen->add_subcommand("ray", "Ray-model statistics from a seeded random geometry");
  ray->add_option("--nr", r_nr, "Receive antennas")->required();
  ray->add_option("--nt", r_nt, "Transmit antennas")->required();
  ray->add_option("--paths", paths, "Scattered paths");
  ray->add_flag("--los", los, "Add a line-of-sight path");
  ray->add_option("--los-power", los_power, "Squared LOS attenuation");
  ray->add_option("--seed", ray_seed, "Geometry seed")->required();
  ray->add_option("-o,--output", out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      fap::ExperimentConfig cfg = fap::load_experiment_config(config_path);
      cfg.dump_state = cfg.dump_state || dump_state;
      const fap::ExperimentReport rep = fap::run_experiment(cfg);
      for (const auto& p : rep.points)
        if (!p.error.empty()) std::cerr << "point " << p.point.index << " failed: " << p.error << '\n';
      std::cout << "run " << rep.run_id << ": " << rep.points.size() << " points, " << rep.failed_points
                << " failed, output in " << rep.output_dir.string() << '\n';
      return rep.exit_code();
    }
    if (*validate) {
      const fap::ExperimentConfig cfg = fap::load_experiment_config(config_path);
      const auto rows = fap::validate_asymptotics(cfg);
      std::printf("%10s %8s %10s %10s %10s %10s\n", "snr_db", "k", "mi_asy", "mi_exact", "stderr", "rel_err");
      for (const auto& r : rows) {
        std::printf("%10.3g %8s %10.5f %10.5f %10.2e %10.2e\n", r.snr_db,
                    r.k.is_infinite() ? "inf" : fap::format_number(r.k.value()).c_str(), r.mi_asy, r.mi_exact,
                    r.stderr_bits, r.rel_err);
      }
      return 0;
    }
    if (*complexity) {
      const fap::BigInt per_group = fap::addition_count(m, nt, ns);
      const fap::BigInt complete = fap::complete_count(m, nt);
      std::cout << "per_group_additions " << per_group.str() << " (" << fap::render_count(per_group) << ")\n"
                << "complete_additions " << complete.str() << " (" << fap::render_count(complete) << ")\n";
      return 0;
    }
    if (*kron) {
      fap::RVector lr;
      fap::RVector lt;
      if (!lambda_r.empty()) {
        lr = to_vector(lambda_r);
        lt = to_vector(lambda_t);
      } else if (k_nr > 0 && k_nt > 0) {
        lr = fap::exponential_correlation_profile(k_nr, rho_r);
        lt = fap::exponential_correlation_profile(k_nt, rho_t);
      } else {
        throw std::invalid_argument("give --lambda-r/--lambda-t or --nr/--nt with --rho-r/--rho-t");
      }
      fap::CMatrix u_r;
      fap::CMatrix u_t;
      if (basis == "virtual") {
        u_r = fap::virtual_basis(static_cast<int>(lr.size()));
        u_t = fap::virtual_basis(static_cast<int>(lt.size()));
      } else {
        if (kron->count("--seed") == 0) throw std::invalid_argument("--seed is required with --basis haar");
        fap::GaussianSource rng(seed);
        u_r = fap::random_unitary(static_cast<int>(lr.size()), rng);
        u_t = fap::random_unitary(static_cast<int>(lt.size()), rng);
      }
      emit(fap::statistics_to_json(fap::kronecker_statistics(lr, lt, u_r, u_t).stats), out);
      return 0;
    }
    if (*ray) {
      const fap::RayGeometry geo = fap::random_ray_geometry(paths, los, ray_seed, los_power);
      emit(fap::statistics_to_json(fap::ray_statistics(geo, r_nr, r_nt).stats), out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
