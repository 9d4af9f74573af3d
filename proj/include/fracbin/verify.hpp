#pragma once

// The full diagnostic suite behind `fracbin verify`: tables (cache-first),
// Monte Carlo at every horizon, exact-formula rate checks, named pass/fail
// flags, and byte-stable artifacts.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fracbin/diagnostics.hpp"
#include "fracbin/kernel_cache.hpp"
#include "fracbin/report_io.hpp"

namespace fracbin {

struct VerifyConfig {
  McConfig mc;
  QuadratureConfig quad;
  std::filesystem::path cache_dir = cache_directory();
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyResult {
  ThetaLimit limit;
  std::vector<ExperimentResult> experiments;
  ConvergenceReport convergence;
  MaxInequalityReport max_inequality;
  FrictionRateReport friction;
  RateFit mixingale_fit;
  RateFit martingale_fit;
  std::vector<Check> checks;
  bool all_pass = false;
};

inline std::vector<KernelTable> load_tables(const std::vector<std::int64_t>& N_list, const ModelParams& params,
                                            const QuadratureConfig& quad, const std::filesystem::path& cache_dir,
                                            unsigned workers) {
  std::vector<KernelTable> tables;
  for (auto N : N_list) tables.push_back(load_or_build_kernel_table(N, params, quad, cache_dir, workers));
  return tables;
}

namespace detail {

inline double combined_se(std::initializer_list<double> ses) {
  double total = 0.0;
  for (double s : ses) total += s * s;
  return std::sqrt(total);
}

inline std::string describe(double value, double bound) { return format17(value) + " vs " + format17(bound); }

/// Kernel positivity and g_n sandwich, 1e-8 relative slack.
inline Check kernel_check(const KernelTable& table) {
  const double g = table.params().g();
  const double q = table.params().H - 0.5;
  double worst = 0.0;
  bool positive = true;
  for (double v : table.j_rows()) positive = positive && v > 0.0;
  for (std::int64_t n = 2; n <= table.N(); ++n) {
    const double upper = g * std::pow(1.0 + 1.0 / static_cast<double>(n - 1), q);
    worst = std::max({worst, (g - table.g(n)) / g, (table.g(n) - upper) / upper});
  }
  return {"kernel_positivity_and_g_sandwich", positive && worst <= 1e-8,
          "max relative sandwich excess " + format17(worst)};
}

}  // namespace detail

/// m in {8, 16, ..., <= min(128, k/4)} at k = min(512, N).
inline std::vector<std::int64_t> mixingale_lags(std::int64_t k) {
  std::vector<std::int64_t> out;
  for (std::int64_t m = 8; m <= std::min<std::int64_t>(128, k / 4); m *= 2) out.push_back(m);
  return out;
}

inline VerifyResult run_verify(const VerifyConfig& config) {
  const auto& mc = config.mc;
  mc.validate();
  config.quad.validate();
  const double H = mc.model.H;
  const auto tables = load_tables(mc.N_list, mc.model, config.quad, config.cache_dir, mc.workers);

  VerifyResult out;
  out.limit = theta_limit(mc.model, mc.tail_tol);
  out.experiments = run_monte_carlo(mc, tables);
  out.convergence = saa_report(out.experiments, out.limit);
  const bool trend = out.experiments.size() >= 3;
  if (trend) {
    out.max_inequality = max_inequality_report(out.experiments, tables);
    out.friction = friction_rate_report(out.experiments);
  }
  auto& checks = out.checks;
  const auto& rows = out.convergence.rows;
  const auto& largest = tables.back();

  checks.push_back(detail::kernel_check(largest));

  {
    std::uint64_t violations = 0;
    double theta_err = 0.0, ledger_err = 0.0;
    for (const auto& row : rows) violations += row.admissibility_violations;
    for (const auto& e : out.experiments) {
      for (const auto& r : e.records) {
        theta_err = std::max(theta_err, r.theta_identity_error);
        ledger_err = std::max(ledger_err, r.ledger_identity_error);
      }
    }
    checks.push_back({"admissibility_no_violations", violations == 0, std::to_string(violations) + " violations"});
    checks.push_back({"theta_decomposition_identity", theta_err <= 1e-9, detail::describe(theta_err, 1e-9)});
    checks.push_back({"friction_value_identity", ledger_err <= 1e-9, detail::describe(ledger_err, 1e-9)});
  }

  {
    bool ok = true;
    for (const auto& row : rows)
      for (int t = 0; t < 2; ++t) ok = ok && std::fabs(row.term[t].mean) <= 3.0 * row.term[t].se;
    checks.push_back({"lln_terms_1_2_within_3se_of_0", ok, ""});
    const auto& last = rows.back().term[2];
    const double diff = std::fabs(last.mean - out.limit.V3);
    checks.push_back({"lln_term_3_within_3se_at_largest_N", diff <= 3.0 * last.se, detail::describe(diff, 3.0 * last.se)});
  }

  {
    bool decreasing = true;
    for (size_t a = 1; a < rows.size(); ++a) {
      decreasing = decreasing && std::fabs(rows[a].V_phi.mean - out.limit.theta) <
                                     std::fabs(rows[a - 1].V_phi.mean - out.limit.theta);
    }
    checks.push_back({"lln_value_error_strictly_decreasing", decreasing, ""});
    const double rel = std::fabs(rows.back().V_phi.mean - out.limit.theta) / out.limit.theta;
    checks.push_back({"lln_value_within_25pct_at_largest_N", rel <= 0.25, detail::describe(rel, 0.25)});
  }

  if (trend) {
    bool centred = true;
    for (const auto& row : out.max_inequality.rows) centred = centred && std::fabs(row.Sstar_N.mean) <= 3.0 * row.Sstar_N.se;
    checks.push_back({"centering_Sstar_within_3se_of_0", centred, ""});
  }

  {
    bool monotone = true, gap = true, stopping = true, friction = true;
    for (size_t a = 0; a < rows.size(); ++a) {
      const auto& r = rows[a];
      gap = gap && r.p_phi_above_050.mean - r.p_psi_success.mean <=
                       r.p_TN.mean + 2.0 * detail::combined_se({r.p_phi_above_050.se, r.p_psi_success.se, r.p_TN.se});
      if (a == 0) continue;
      const auto& p = rows[a - 1];
      monotone = monotone && r.p_phi_above_050.mean >=
                                 p.p_phi_above_050.mean - 2.0 * detail::combined_se({r.p_phi_above_050.se, p.p_phi_above_050.se});
      friction = friction && r.p_friction_success.mean >=
                                 p.p_friction_success.mean -
                                     2.0 * detail::combined_se({r.p_friction_success.se, p.p_friction_success.se});
      stopping = stopping && r.p_TN.mean < p.p_TN.mean;
    }
    checks.push_back({"success_probability_nondecreasing_2se", monotone, ""});
    checks.push_back({"stopped_gap_bounded_by_stopping_probability", gap, ""});
    checks.push_back({"stopping_probability_strictly_decreasing", stopping, ""});
    checks.push_back({"friction_success_nondecreasing_2se", friction, ""});
    const double p_phi = rows.back().p_phi_above_050.mean;
    const double p_friction = rows.back().p_friction_success.mean;
    checks.push_back({"success_probability_at_least_0.7_at_largest_N", p_phi >= 0.7, detail::describe(p_phi, 0.7)});
    checks.push_back({"friction_success_at_least_0.6_at_largest_N", p_friction >= 0.6, detail::describe(p_friction, 0.6)});
  }

  if (trend) {
    bool kolmogorov = true;
    for (const auto& row : out.max_inequality.rows)
      kolmogorov = kolmogorov && row.p_sup_S1_above_eps.mean <= row.kolmogorov_bound + 3.0 * row.p_sup_S1_above_eps.se;
    checks.push_back({"kolmogorov_bound_S1", kolmogorov, ""});
    const double slope = out.max_inequality.fit.slope;
    checks.push_back({"max_inequality_slope", std::fabs(slope - (4.0 * H - 2.0)) <= 0.4,
                      detail::describe(slope, 4.0 * H - 2.0)});
    const double vs_slope = out.friction.fits[0].slope;
    checks.push_back({"friction_Vs1_growth_slope", std::fabs(vs_slope - (2.0 * H - 0.5)) <= 0.3,
                      detail::describe(vs_slope, 2.0 * H - 0.5)});
  }

  const std::int64_t k = std::min<std::int64_t>(512, largest.N());
  if (const auto lags = mixingale_lags(k); lags.size() >= 3) {
    const auto norms = mixingale_norms(k, lags, largest);
    std::vector<double> xs(lags.begin(), lags.end());
    out.mixingale_fit = rate_fit(xs, norms);
    checks.push_back({"mixingale_decay_slope", out.mixingale_fit.slope <= 2.0 * H - 2.0 + 0.25,
                      detail::describe(out.mixingale_fit.slope, 2.0 * H - 2.0 + 0.25)});
  }
  const std::int64_t NM = std::min<std::int64_t>(1024, largest.N());
  if (NM >= 64) {
    std::vector<std::int64_t> ks;
    std::vector<double> xs;
    for (std::int64_t kk = 4; kk <= std::min<std::int64_t>(64, NM / 4); ++kk) {
      ks.push_back(kk);
      xs.push_back(static_cast<double>(kk + 1));
    }
    out.martingale_fit = rate_fit(xs, martingale_variances(NM, ks, largest));
    const double bound = -(5.0 - 4.0 * H) + 0.5;
    checks.push_back({"martingale_variance_decay_slope", out.martingale_fit.slope <= bound,
                      detail::describe(out.martingale_fit.slope, bound)});
  }

  out.all_pass = std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  return out;
}

/// Everything except the worker count, which must not change the artifacts.
inline Json verify_summary(const VerifyConfig& config, const VerifyResult& result) {
  const auto& mc = config.mc;
  Json schedules = Json::array();
  for (const auto& e : result.experiments) schedules.push_back(to_json(e.schedules));
  Json checks = Json::array();
  for (const auto& c : result.checks) checks.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  Json estimates{{"convergence", to_json(result.convergence)}};
  Json fits{{"mixingale_norm_vs_m", to_json(result.mixingale_fit)},
            {"martingale_variance_vs_k_plus_1", to_json(result.martingale_fit)}};
  if (result.experiments.size() >= 3) {
    estimates["max_inequality"] = to_json(result.max_inequality);
    estimates["friction"] = to_json(result.friction);
    fits["E_sup_Sstar_sq_vs_N"] = to_json(result.max_inequality.fit);
    fits["E_max_abs_Vs1_vs_N"] = to_json(result.friction.fits[0]);
  }
  return Json{{"params", Json{{"model", to_json(mc.model)},
                              {"quadrature", to_json(config.quad)},
                              {"N_list", mc.N_list},
                              {"paths_per_N", mc.paths_per_N},
                              {"master_seed", mc.master_seed},
                              {"epsilon_multiplier", mc.epsilon_multiplier},
                              {"kappa", mc.kappa},
                              {"tail_tol", mc.tail_tol}}},
              {"schedules", schedules},
              {"estimates", estimates},
              {"fits", fits},
              {"checks", checks},
              {"all_pass", result.all_pass}};
}

/// Writes experiment_N<N>.csv per horizon and summary.json into `dir`.
inline void write_verify_artifacts(const std::filesystem::path& dir, const VerifyConfig& config,
                                   const VerifyResult& result) {
  std::filesystem::create_directories(dir);
  for (const auto& e : result.experiments) {
    std::ofstream csv(dir / ("experiment_N" + std::to_string(e.N) + ".csv"), std::ios::binary | std::ios::trunc);
    write_experiment_csv(csv, e);
  }
  std::ofstream json(dir / "summary.json", std::ios::binary | std::ios::trunc);
  json << verify_summary(config, result).dump(2) << '\n';
}

}  // namespace fracbin
