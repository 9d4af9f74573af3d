#pragma once

// Command-line front end. Exit codes: 0 success, 1 validation error,
// 2 numeric failure (quadrature or price positivity), 3 verification failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fracbin/arbitrage.hpp"
#include "fracbin/diagnostics.hpp"
#include "fracbin/enumeration.hpp"
#include "fracbin/kernel_cache.hpp"
#include "fracbin/report_io.hpp"
#include "fracbin/verify.hpp"

namespace fracbin::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumeric = 2, kVerification = 3 };

struct CliConfig {
  std::string subcommand;
  ModelParams model;
  QuadratureConfig quad;
  std::int64_t N = 0;
  std::vector<std::int64_t> N_list;
  std::uint64_t paths = 1;
  std::uint64_t master_seed = 42;
  std::uint64_t first_index = 0;
  double epsilon_multiplier = 1.0;
  double kappa = 1.0;
  double tail_tol = 1e-12;
  std::optional<double> lambda;
  std::uint64_t ledger_dumps = 0;
  unsigned workers = 0;
  std::filesystem::path out_dir = "fracbin-out";
  std::filesystem::path cache_dir;

  void validate() const {
    model.validate();
    quad.validate();
    if (subcommand == "verify") {
      McConfig mc;
      mc.model = model;
      mc.N_list = N_list;
      mc.paths_per_N = paths;
      mc.epsilon_multiplier = epsilon_multiplier;
      mc.kappa = kappa;
      mc.tail_tol = tail_tol;
      mc.validate();
    } else if (N < 2) {
      throw DomainError("--N must be >= 2");
    }
    if (subcommand == "enumerate" && N > kMaxEnumerationHorizon) {
      throw TooLargeError("enumerate refuses N > " + std::to_string(kMaxEnumerationHorizon));
    }
    if (lambda && !(*lambda >= 0.0 && *lambda < 1.0)) throw DomainError("--lambda must lie in [0, 1)");
    if (!(epsilon_multiplier > 0.0) || !(kappa > 0.0) || !(tail_tol > 0.0)) {
      throw DomainError("--eps-multiplier, --kappa and --tail-tol must be positive");
    }
  }
};

namespace detail {

inline void add_model_options(CLI::App& app, CliConfig& c) {
  app.add_option("--H", c.model.H, "Hurst exponent in (1/2, 1)")->required();
  app.add_option("--sigma", c.model.sigma, "volatility")->capture_default_str();
  app.add_option("--cH", c.model.cH, "kernel normalization constant")->capture_default_str();
  app.add_option("--s0", c.model.s0, "initial price")->capture_default_str();
  app.add_option("--nodes-per-panel", c.quad.nodes_per_panel, "Gauss-Legendre nodes per panel")->capture_default_str();
  app.add_option("--max-panels", c.quad.max_panels, "panel budget per axis")->capture_default_str();
  app.add_option("--rel-tol", c.quad.rel_tol, "quadrature relative tolerance")->capture_default_str();
  app.add_option("--abs-tol", c.quad.abs_tol, "quadrature absolute tolerance")->capture_default_str();
  app.add_option("--cache-dir", c.cache_dir, "kernel cache directory (default: $FRACBIN_CACHE_DIR or .fracbin-cache)");
  app.add_option("--workers", c.workers, "worker threads, 0 = hardware concurrency")->capture_default_str();
}

inline void add_schedule_options(CLI::App& app, CliConfig& c) {
  app.add_option("--kappa", c.kappa, "friction schedule prefactor")->capture_default_str();
  app.add_option("--eps-multiplier", c.epsilon_multiplier, "multiplier of eps_N")->capture_default_str();
  app.add_option("--tail-tol", c.tail_tol, "tail tolerance of the theta series")->capture_default_str();
}

inline KernelTable table_for(const CliConfig& c, std::int64_t N) {
  return load_or_build_kernel_table(N, c.model, c.quad, c.cache_dir, c.workers);
}

inline Json constants_json(const CliConfig& c) {
  const auto table = table_for(c, c.N);
  const auto limit = theta_limit(c.model, c.tail_tol);
  auto s = make_schedules(c.N, c.model.H, table, limit.theta, c.kappa, c.epsilon_multiplier);
  if (c.lambda) s.lambda_N = *c.lambda;
  return Json{{"params", to_json(c.model)},
              {"g", c.model.g()},
              {"h", c.model.h()},
              {"theta", limit.theta},
              {"V4", limit.V4},
              {"V3", limit.V3},
              {"theta_head_terms", limit.head_terms},
              {"theta_tail_bound", limit.tail_bound},
              {"schedules", to_json(s)}};
}

inline int cmd_table(const CliConfig& c, std::ostream& out) {
  bool hit = false;
  const auto table = load_or_build_kernel_table(c.N, c.model, c.quad, c.cache_dir, c.workers, &hit);
  out << Json{{"N", table.N()},
              {"cache_file", (c.cache_dir / cache_file_name(c.N, c.model, c.quad)).string()},
              {"cache_hit", hit},
              {"g_1", table.g(1)},
              {"g_N", table.g(table.N())}}
             .dump(2)
      << '\n';
  return kOk;
}

inline int cmd_simulate(const CliConfig& c, std::ostream& out) {
  const auto table = table_for(c, c.N);
  std::filesystem::create_directories(c.out_dir);
  std::vector<MarketPath> paths(c.paths);
  simulate_paths(table, c.model, c.master_seed, c.first_index, c.paths, c.workers,
                 [&](std::uint64_t index, const MarketPath& path) { paths[index - c.first_index] = path; });
  for (std::uint64_t p = 0; p < c.paths; ++p) {
    std::ofstream csv(c.out_dir / ("path_" + std::to_string(c.first_index + p) + ".csv"), std::ios::binary);
    write_path_csv(csv, paths[p]);
  }
  out << "wrote " << c.paths << " paths to " << c.out_dir.string() << '\n';
  return kOk;
}

inline int cmd_arbitrage(const CliConfig& c, std::ostream& out) {
  const auto table = table_for(c, c.N);
  const auto limit = theta_limit(c.model, c.tail_tol);
  ExperimentResult experiment;
  experiment.N = c.N;
  experiment.schedules = make_schedules(c.N, c.model.H, table, limit.theta, c.kappa, c.epsilon_multiplier);
  if (c.lambda) experiment.schedules.lambda_N = *c.lambda;
  const auto expected_s4 = expected_s4_prefix(c.N, table);
  experiment.records.resize(c.paths);
  std::filesystem::create_directories(c.out_dir);
  std::vector<std::string> ledgers(std::min(c.ledger_dumps, c.paths));
  simulate_paths(table, c.model, c.master_seed, 0, c.paths, c.workers, [&](std::uint64_t index, const MarketPath& path) {
    experiment.records[index] = summarize_path(index, path, c.model, table, experiment.schedules, expected_s4);
    if (index < ledgers.size()) {
      const auto analysis = analyze_path(path, c.model, table, experiment.schedules);
      const auto run = friction_run(analysis.psi, path.S, experiment.schedules.lambda_N);
      std::ostringstream csv;
      write_ledger_csv(csv, analysis.psi, path.S, run.ledger);
      ledgers[index] = csv.str();
    }
  });
  {
    std::ofstream csv(c.out_dir / ("experiment_N" + std::to_string(c.N) + ".csv"), std::ios::binary);
    write_experiment_csv(csv, experiment);
  }
  for (size_t p = 0; p < ledgers.size(); ++p) {
    std::ofstream csv(c.out_dir / ("ledger_N" + std::to_string(c.N) + "_path" + std::to_string(p) + ".csv"),
                      std::ios::binary);
    csv << ledgers[p];
  }
  const auto report = saa_report(std::span<const ExperimentResult>(&experiment, 1), limit);
  out << to_json(report).dump(2) << '\n';
  return kOk;
}

inline int cmd_verify(const CliConfig& c, std::ostream& out) {
  VerifyConfig v;
  v.mc.model = c.model;
  v.mc.N_list = c.N_list;
  v.mc.paths_per_N = c.paths;
  v.mc.master_seed = c.master_seed;
  v.mc.epsilon_multiplier = c.epsilon_multiplier;
  v.mc.kappa = c.kappa;
  v.mc.tail_tol = c.tail_tol;
  v.mc.workers = c.workers;
  v.quad = c.quad;
  v.cache_dir = c.cache_dir;
  const auto result = run_verify(v);
  write_verify_artifacts(c.out_dir, v, result);
  for (const auto& check : result.checks) {
    out << (check.pass ? "PASS " : "FAIL ") << check.name;
    if (!check.detail.empty()) out << " (" << check.detail << ')';
    out << '\n';
  }
  return result.all_pass ? kOk : kVerification;
}

inline int cmd_enumerate(const CliConfig& c, std::ostream& out) {
  const auto table = table_for(c, c.N);
  const auto report = enumeration_checks(table, c.model);
  Json checks = Json::array();
  for (const auto& check : report.checks) {
    checks.push_back(Json{{"name", check.name}, {"exact", check.exact}, {"enumerated", check.enumerated},
                          {"abs_error", check.abs_error()}});
  }
  const double worst = report.max_abs_error();
  out << Json{{"N", report.N}, {"paths", report.paths}, {"max_abs_discrepancy", worst}, {"pass", worst < 1e-10},
              {"checks", checks}}
             .dump(2)
      << '\n';
  return worst < 1e-10 ? kOk : kVerification;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CliConfig c;
  CLI::App app{"Fractional binary market laboratory", "fracbin"};
  app.require_subcommand(1);

  auto* table = app.add_subcommand("table", "build or load the kernel table");
  auto* constants = app.add_subcommand("constants", "print model constants and schedules as JSON");
  auto* simulate = app.add_subcommand("simulate", "dump simulated paths as CSV");
  auto* arbitrage = app.add_subcommand("arbitrage", "run the strategies on simulated paths");
  auto* verify = app.add_subcommand("verify", "run the diagnostic suite");
  auto* enumerate = app.add_subcommand("enumerate", "exact small-N cross-checks");

  for (auto* sub : {table, constants, simulate, arbitrage, verify, enumerate}) detail::add_model_options(*sub, c);
  for (auto* sub : {table, constants, simulate, arbitrage, enumerate})
    sub->add_option("--N", c.N, "horizon (number of periods)")->required();
  for (auto* sub : {constants, arbitrage, verify}) detail::add_schedule_options(*sub, c);
  for (auto* sub : {simulate, arbitrage, verify}) {
    sub->add_option("--paths", c.paths, "paths per horizon")->capture_default_str();
    sub->add_option("--seed", c.master_seed, "master seed")->capture_default_str();
    sub->add_option("--out", c.out_dir, "output directory")->capture_default_str();
  }
  simulate->add_option("--first-index", c.first_index, "first path index")->capture_default_str();
  for (auto* sub : {constants, arbitrage}) sub->add_option("--lambda", c.lambda, "override lambda_N");
  arbitrage->add_option("--ledger-dumps", c.ledger_dumps, "write ledger CSVs for the first K paths")->capture_default_str();
  verify->add_option("--N-list", c.N_list, "comma-separated increasing horizons")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kValidation;
  }
  for (auto* sub : app.get_subcommands()) c.subcommand = sub->get_name();
  if (c.cache_dir.empty()) c.cache_dir = cache_directory();

  try {
    c.validate();
    if (c.subcommand == "table") return detail::cmd_table(c, out);
    if (c.subcommand == "constants") {
      out << detail::constants_json(c).dump(2) << '\n';
      return kOk;
    }
    if (c.subcommand == "simulate") return detail::cmd_simulate(c, out);
    if (c.subcommand == "arbitrage") return detail::cmd_arbitrage(c, out);
    if (c.subcommand == "verify") return detail::cmd_verify(c, out);
    return detail::cmd_enumerate(c, out);
  } catch (const QuadratureError& e) {
    err << "numeric failure: " << e.what() << " (n=" << e.n() << ", i=" << e.i() << ")\n";
    return kNumeric;
  } catch (const PriceError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace fracbin::cli
