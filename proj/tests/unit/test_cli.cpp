// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(FAP_CLI_PATH) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return o;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) o.out += buf.data();
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fap_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

nlohmann::json config_for(const fs::path& out, int threads) {
  nlohmann::json j = nlohmann::json::parse(R"({
    "statistics": {"source": "random", "n_r": 2, "n_t": 2, "seed": 4},
    "constellation": "bpsk",
    "snr_db": ["-inf", 5],
    "rice_k": [0, 1],
    "group_size": 1,
    "optimizer": {"seed": 9, "max_iter": 4, "restarts": 1},
    "validation": {"seed": 5, "channel_samples": 10, "noise_samples": 200},
    "baselines": ["identity", "mrt"]
  })");
  j["output_dir"] = out.string();
  j["threads"] = threads;
  return j;
}

TEST(Cli, ComplexityCounts) {
  const Outcome o = run("complexity --m 4 --nt 16 --ns 16");
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("per_group_additions 18446744073709551616 (1.8447e+019)"), std::string::npos) << o.out;
  const Outcome bad = run("complexity --m 4 --nt 6 --ns 4");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("does not divide"), std::string::npos);
}

TEST(Cli, RunIsIndependentOfThreadCount) {
  const fs::path dir = scratch("threads");
  const Outcome a = run("run " + write_config(dir, config_for(dir / "a", 1), "a.json").string());
  ASSERT_EQ(a.code, 0) << a.out;
  const Outcome b = run("run " + write_config(dir, config_for(dir / "b", 2), "b.json").string());
  ASSERT_EQ(b.code, 0) << b.out;
  for (const char* f : {"sweep.csv", "trace_p000.csv", "trace_p003.csv", "precoder_p001.json", "precoder_p003.json"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const std::string sweep = slurp(dir / "a" / "sweep.csv");
  EXPECT_EQ(sweep.rfind("point,snr_db,k,design,mi_asymptotic_bits,mi_exact_bits,mi_exact_stderr,iterations,"
                        "wall_time_ms,optimizer_seed,validation_seed,status\r\n",
                        0),
            0u);
  EXPECT_NE(sweep.find("0,-inf,0,proposed,0,0,0,"), std::string::npos) << sweep;
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["tool"], "fa-precode");
  EXPECT_EQ(manifest["failed_points"], 0);
  EXPECT_EQ(manifest["points"].size(), 4u);
  EXPECT_EQ(manifest["run_id"].get<std::string>().size(), 12u);
}

TEST(Cli, FailingPointGivesExitTwo) {
  const fs::path dir = scratch("fail");
  nlohmann::json j = config_for(dir / "out", 1);
  j["statistics"] = {{"source", "kronecker"}, {"lambda_r", {1.0, 0.5}}, {"lambda_t", {1.0, 0.2}}};
  j.erase("validation");
  const Outcome o = run("run " + write_config(dir, j).string());
  EXPECT_EQ(o.code, 2) << o.out;
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["failed_points"], 2);
  EXPECT_EQ(manifest["points"][2]["status"], "error");
  EXPECT_NE(slurp(dir / "out" / "sweep.csv").find(",error\r\n"), std::string::npos);
}

TEST(Cli, OutputRootEnvironment) {
  const fs::path dir = scratch("env");
  nlohmann::json j = config_for("relative_out", 1);
  j["snr_db"] = {0};
  j["rice_k"] = {0};
  j.erase("validation");
  const fs::path cfg = write_config(dir, j);
  const std::string cmd = "FA_PRECODE_OUT=" + dir.string() + " " + std::string(FAP_CLI_PATH) + " run " +
                          cfg.string() + " --dump-state > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "relative_out" / "sweep.csv"));
  EXPECT_TRUE(fs::exists(dir / "relative_out" / "state_p000.json"));
  fs::remove_all("relative_out");
}

TEST(Cli, GenerateStatistics) {
  const fs::path dir = scratch("gen");
  const Outcome k = run("gen-stats kronecker --nr 2 --nt 3 --rho-r 0.3 --rho-t 0.7 -o " + (dir / "k.json").string());
  ASSERT_EQ(k.code, 0) << k.out;
  const auto doc = nlohmann::json::parse(slurp(dir / "k.json"));
  EXPECT_EQ(doc["n_r"], 2);
  EXPECT_EQ(doc["n_t"], 3);
  EXPECT_EQ(doc["K"], 0.0);
  const Outcome r = run("gen-stats ray --nr 4 --nt 4 --paths 6 --los --seed 3");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(nlohmann::json::parse(r.out)["n_t"], 4);
  EXPECT_NE(run("gen-stats ray --nr 4 --nt 4").code, 0);
  EXPECT_EQ(run("gen-stats kronecker --nr 2 --nt 2 --basis haar").code, 1);
}

TEST(Cli, RejectsBadConfig) {
  const fs::path dir = scratch("bad");
  nlohmann::json j = config_for(dir / "out", 1);
  j["optimizer"].erase("seed");
  const Outcome o = run("run " + write_config(dir, j).string());
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.out.find("optimizer.seed is required"), std::string::npos) << o.out;
}

}  // namespace
