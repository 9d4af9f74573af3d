#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fracbin/cli.hpp"

using namespace fracbin;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fracbin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("fracbin-cli-test-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    cache_ = (root_ / "cache").string();
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path root_;
  std::string cache_;
};

}  // namespace

TEST_F(CliTest, ConstantsPrintsPositiveTheta) {
  const auto r = invoke({"constants", "--H", "0.75", "--N", "1024", "--cache-dir", cache_});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto json = nlohmann::json::parse(r.out);
  EXPECT_GT(json["theta"].get<double>(), 0.0);
  for (const char* key : {"eps_N", "c_hat_N", "c_N", "C_N", "lambda_N", "B12"})
    EXPECT_GT(json["schedules"][key].get<double>(), 0.0) << key;
  EXPECT_EQ(json["params"]["H"].get<double>(), 0.75);
  EXPECT_DOUBLE_EQ(json["g"].get<double>(), 0.8);
}

TEST_F(CliTest, LambdaOverride) {
  const auto r = invoke({"constants", "--H", "0.75", "--N", "64", "--lambda", "0.01", "--cache-dir", cache_});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["schedules"]["lambda_N"].get<double>(), 0.01);
}

TEST_F(CliTest, ValidationErrors) {
  auto r = invoke({"constants", "--N", "64"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--H"), std::string::npos);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(invoke({"constants", "--H", "0.75"}).code, 1);
  EXPECT_EQ(invoke({"constants", "--H", "0.75", "--N", "64", "--bogus"}).code, 1);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"constants", "--H", "1.2", "--N", "64", "--cache-dir", cache_}).code, 1);
  EXPECT_EQ(invoke({"constants", "--H", "0.75", "--N", "64", "--lambda", "1.5", "--cache-dir", cache_}).code, 1);
  EXPECT_EQ(invoke({"verify", "--H", "0.75", "--N-list", "64,32", "--cache-dir", cache_}).code, 1);
  EXPECT_EQ(invoke({"verify", "--H", "0.75", "--N-list", "16,32,64", "--paths", "10", "--cache-dir", cache_}).code, 1);
  EXPECT_EQ(invoke({"enumerate", "--H", "0.75", "--N", "23", "--cache-dir", cache_}).code, 1);
}

TEST_F(CliTest, HelpExitsCleanly) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("verify"), std::string::npos);
}

TEST_F(CliTest, NumericFailures) {
  const auto quad = invoke({"table", "--H", "0.75", "--N", "16", "--max-panels", "1", "--cache-dir", cache_});
  EXPECT_EQ(quad.code, 2);
  EXPECT_NE(quad.err.find("numeric failure"), std::string::npos);
  // Path 0 of seed 42 starts with xi_1 = -1, which sinks the price at this volatility.
  const auto price = invoke({"simulate", "--H", "0.75", "--N", "4", "--sigma", "20", "--seed", "42", "--out",
                             (root_ / "p").string(), "--cache-dir", cache_});
  EXPECT_EQ(price.code, 2);
}

TEST_F(CliTest, TableIsCached) {
  const std::vector<std::string> args{"table", "--H", "0.7", "--N", "32", "--cache-dir", cache_};
  auto first = nlohmann::json::parse(invoke(args).out);
  auto second = nlohmann::json::parse(invoke(args).out);
  EXPECT_FALSE(first["cache_hit"].get<bool>());
  EXPECT_TRUE(second["cache_hit"].get<bool>());
  EXPECT_EQ(first["g_N"], second["g_N"]);
  EXPECT_TRUE(fs::exists(first["cache_file"].get<std::string>()));
}

TEST_F(CliTest, CacheDirectoryFromEnvironment) {
  const auto dir = root_ / "env-cache";
  ::setenv("FRACBIN_CACHE_DIR", dir.c_str(), 1);
  const auto r = invoke({"table", "--H", "0.75", "--N", "8"});
  ::unsetenv("FRACBIN_CACHE_DIR");
  ASSERT_EQ(r.code, 0);
  EXPECT_FALSE(fs::is_empty(dir));
}

TEST_F(CliTest, SimulateWritesPaths) {
  const auto out = root_ / "paths";
  const auto r = invoke({"simulate", "--H", "0.75", "--N", "16", "--paths", "3", "--first-index", "5", "--out",
                         out.string(), "--cache-dir", cache_});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int p = 5; p < 8; ++p) {
    const auto text = slurp(out / ("path_" + std::to_string(p) + ".csv"));
    EXPECT_EQ(text.rfind("n,xi,Y,X,S\n", 0), 0u);
  }
  const ModelParams model;
  const auto path = simulate_path(build_kernel_table(16, model, {}), model, {42, 6});
  std::ostringstream expected;
  write_path_csv(expected, path);
  EXPECT_EQ(slurp(out / "path_6.csv"), expected.str());
}

TEST_F(CliTest, ArbitrageWritesExperimentAndLedgers) {
  const auto out = root_ / "arb";
  const auto r = invoke({"arbitrage", "--H", "0.75", "--N", "64", "--sigma", "2.5", "--paths", "50", "--ledger-dumps",
                         "2", "--out", out.string(), "--cache-dir", cache_});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_TRUE(report.contains("rows"));
  std::istringstream csv(slurp(out / "experiment_N64.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "N,H,path_index,T1,T2,T3,T4,TN,V_phi,V_psi,minV_psi,V_psi_lambda,lambda_N,c_N,C_N");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 50);
  EXPECT_EQ(slurp(out / "ledger_N64_path1.csv").rfind("n,phi0,phi1,S,V_lambda,Vs1,Vs2,Vs3\n", 0), 0u);
  EXPECT_FALSE(fs::exists(out / "ledger_N64_path2.csv"));
}

TEST_F(CliTest, EnumerateAtTwelve) {
  const auto r = invoke({"enumerate", "--H", "0.75", "--N", "12", "--cache-dir", cache_});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto json = nlohmann::json::parse(r.out);
  EXPECT_LT(json["max_abs_discrepancy"].get<double>(), 1e-10);
  EXPECT_EQ(json["paths"].get<int>(), 4096);
}

TEST_F(CliTest, VerifyIsByteIdenticalAcrossWorkerCounts) {
  auto run = [&](const std::string& workers) {
    const auto out = root_ / ("verify-" + workers);
    const auto r = invoke({"verify", "--H", "0.75", "--sigma", "2.5", "--N-list", "16,32,64", "--paths", "300",
                           "--seed", "7", "--workers", workers, "--out", out.string(), "--cache-dir", cache_});
    EXPECT_TRUE(r.code == 0 || r.code == 3) << r.err;
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
    return out;
  };
  const auto a = run("1");
  const auto b = run("3");
  for (const char* name : {"experiment_N16.csv", "experiment_N32.csv", "experiment_N64.csv", "summary.json"}) {
    const auto text = slurp(a / name);
    EXPECT_FALSE(text.empty()) << name;
    EXPECT_EQ(text, slurp(b / name)) << name;
  }
  const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
  for (const char* key : {"params", "schedules", "estimates", "fits", "checks", "all_pass"})
    EXPECT_TRUE(summary.contains(key)) << key;
}

TEST_F(CliTest, InstalledBinaryExitCodes) {
  const std::string cli = FRACBIN_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  auto status = [&](const std::string& args) {
    const int raw = std::system((cli + " " + args + quiet).c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("constants --H 0.75 --N 32 --cache-dir " + cache_), 0);
  EXPECT_EQ(status("constants --N 32"), 1);
  EXPECT_EQ(status("table --H 0.75 --N 16 --max-panels 1 --cache-dir " + cache_), 2);
}
