#pragma once

// Exact moment formulas derived from the kernel table, and the Monte Carlo
// pipeline that checks the limit theorems, maximal inequalities and
// arbitrage schedules against them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fracbin/arbitrage.hpp"
#include "fracbin/kernel.hpp"
#include "fracbin/ledger.hpp"
#include "fracbin/market.hpp"
#include "fracbin/stats.hpp"

namespace fracbin {

// ---------------------------------------------------------------------------
// Exact formulas

namespace detail {

inline void check_horizon(std::int64_t N, const KernelTable& table) {
  if (N < 1 || N > table.N()) throw IndexError("horizon outside the kernel table");
}

/// j_n(i) with j_n(n) := 0, used where a formula reaches the missing diagonal.
inline double j_or_zero(const KernelTable& table, std::int64_t n, std::int64_t i) {
  return i >= n ? 0.0 : table.j(n, i);
}

}  // namespace detail

/// E[S^(3)_N] = sum_{k=2}^N g_{k-1} j_k(k-1).
inline double expected_s3(std::int64_t N, const KernelTable& table) {
  detail::check_horizon(N, table);
  double total = 0.0;
  for (std::int64_t k = 2; k <= N; ++k) total += table.g(k - 1) * table.j(k, k - 1);
  return total;
}

/// E[S^(4)_n] = sum_{k=3}^n E[Y_{k-1} Y_k] for n = 0..N.
inline std::vector<double> expected_s4_prefix(std::int64_t N, const KernelTable& table) {
  detail::check_horizon(N, table);
  std::vector<double> out(static_cast<size_t>(N + 1), 0.0);
  for (std::int64_t n = 1; n <= N; ++n) {
    out[static_cast<size_t>(n)] = out[static_cast<size_t>(n - 1)] + (n >= 2 ? y_cross_expectation(n, table) : 0.0);
  }
  return out;
}

/// E[V_N(phi)] = (1/N) (E[S^(3)_N] + E[S^(4)_N]).
inline double expected_value_phi(std::int64_t N, const KernelTable& table) {
  return (expected_s3(N, table) + expected_s4_prefix(N, table).back()) / static_cast<double>(N);
}

/// Var(S^(1)_N) = sum_{l=2}^N g_{l-1}^2 g_l^2 (pairwise independent terms).
inline double s1_variance(std::int64_t N, const KernelTable& table) {
  detail::check_horizon(N, table);
  double total = 0.0;
  for (std::int64_t l = 2; l <= N; ++l) {
    const double a = table.g(l - 1) * table.g(l);
    total += a * a;
  }
  return total;
}

/// Var(S^(2)_N) = sum_{l=2}^N g_l^2 Var(Y_{l-1}) (martingale differences).
inline double s2_variance(std::int64_t N, const KernelTable& table) {
  detail::check_horizon(N, table);
  double total = 0.0;
  for (std::int64_t l = 2; l <= N; ++l) total += table.g(l) * table.g(l) * y_variance(l - 1, table);
  return total;
}

/// || E[Y*_k | F*_{k-m}] ||_2 where Y*_k = Y_{k-1} Y_k - E[Y_{k-1} Y_k] and
/// F*_{k-m} is generated by xi_1..xi_{k-m-1}:
///   sqrt( sum_{l<p<=k-m-1} (j_k(l) j_{k-1}(p) + j_k(p) j_{k-1}(l))^2 ).
inline double mixingale_norm(std::int64_t k, std::int64_t m, const KernelTable& table) {
  if (m < 0) throw DomainError("mixingale lag must be >= 0");
  detail::check_horizon(k, table);
  const std::int64_t top = k - m - 1;
  if (top < 2) return 0.0;
  double total = 0.0;
  for (std::int64_t p = 2; p <= top; ++p) {
    const double jk_p = table.j(k, p);
    const double jk1_p = detail::j_or_zero(table, k - 1, p);
    for (std::int64_t l = 1; l < p; ++l) {
      const double c = table.j(k, l) * jk1_p + jk_p * table.j(k - 1, l);
      total += c * c;
    }
  }
  return std::sqrt(total);
}

inline std::vector<double> mixingale_norms(std::int64_t k, std::span<const std::int64_t> m_list,
                                           const KernelTable& table) {
  std::vector<double> out;
  out.reserve(m_list.size());
  for (auto m : m_list) out.push_back(mixingale_norm(k, m, table));
  return out;
}

/// Var(Y_{N,k}) = sum_{i=k+2}^N sum_{l=1}^{i-k-2} (j_i(l) j_{i-1}(p) + j_i(p) j_{i-1}(l))^2, p = i-k-1.
inline double martingale_variance(std::int64_t N, std::int64_t k, const KernelTable& table) {
  detail::check_horizon(N, table);
  if (k < 0 || k > N - 2) throw IndexError("martingale index k must lie in [0, N-2]");
  double total = 0.0;
  for (std::int64_t i = k + 2; i <= N; ++i) {
    const std::int64_t p = i - k - 1;
    const double ji_p = table.j(i, p);
    const double ji1_p = detail::j_or_zero(table, i - 1, p);
    for (std::int64_t l = 1; l <= i - k - 2; ++l) {
      const double c = table.j(i, l) * ji1_p + ji_p * table.j(i - 1, l);
      total += c * c;
    }
  }
  return total;
}

inline std::vector<double> martingale_variances(std::int64_t N, std::span<const std::int64_t> k_list,
                                                const KernelTable& table) {
  std::vector<double> out;
  out.reserve(k_list.size());
  for (auto k : k_list) out.push_back(martingale_variance(N, k, table));
  return out;
}

/// Empirical constants of the two kernel decay bounds at row i:
///   C1(i) = max_{1<=l<=floor(i/4)}  j_i(l) i^{2-2H} l^{H-1/2}
///   C2(i) = max_{1<=k<=floor(3i/4)} j_i(i-k) k^{3/2-H}
struct KernelRateConstants {
  std::int64_t i = 0;
  double C1 = 0.0;
  double C2 = 0.0;
};

inline KernelRateConstants kernel_rate_constants(std::int64_t i, const KernelTable& table) {
  detail::check_horizon(i, table);
  if (i < 4) throw DomainError("kernel rate constants need i >= 4");
  const double H = table.params().H;
  KernelRateConstants out;
  out.i = i;
  const double row_scale = std::pow(static_cast<double>(i), 2.0 - 2.0 * H);
  for (std::int64_t l = 1; l <= i / 4; ++l)
    out.C1 = std::max(out.C1, table.j(i, l) * row_scale * std::pow(static_cast<double>(l), H - 0.5));
  for (std::int64_t k = 1; k <= 3 * i / 4; ++k)
    out.C2 = std::max(out.C2, table.j(i, i - k) * std::pow(static_cast<double>(k), 1.5 - H));
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct McConfig {
  ModelParams model;
  std::vector<std::int64_t> N_list;
  std::uint64_t paths_per_N = 10000;
  std::uint64_t master_seed = 42;
  double epsilon_multiplier = 1.0;
  double kappa = 1.0;
  double tail_tol = 1e-12;
  unsigned workers = 0;

  void validate() const {
    model.validate();
    if (N_list.empty()) throw DomainError("N_list is empty");
    for (size_t a = 0; a < N_list.size(); ++a) {
      if (N_list[a] < 8) throw DomainError("every N in N_list must be >= 8");
      if (a > 0 && N_list[a] <= N_list[a - 1]) throw DomainError("N_list must be strictly increasing");
    }
    if (paths_per_N < 100) throw DomainError("paths_per_N must be >= 100");
    if (!(epsilon_multiplier > 0.0) || !(kappa > 0.0) || !(tail_tol > 0.0)) {
      throw DomainError("epsilon_multiplier, kappa and tail_tol must be positive");
    }
  }
};

/// Per-path summary; "phihat" quantities use the stopped strategy.
struct PathRecord {
  std::uint64_t path_index = 0;
  StoppingReport stopping;
  std::array<double, 4> S_over_N{};  // S^(i)_N / N
  double V_phi = 0.0;                // V_N(phi)
  double V_phihat = 0.0;
  double V_psi = 0.0;
  double min_V_psi = 0.0;            // min_n V_n(psi)
  double V_psi_lambda = 0.0;         // V_N^{lambda_N}(psi(lambda_N))
  double min_V_psi_lambda = 0.0;
  std::array<double, 3> max_abs_Vs{};  // max_n |Vs^i_n(phihat)|
  double max_abs_Vs_total = 0.0;       // max_n sum_i |Vs^i_n(phihat)|
  double sup_Sstar_sq = 0.0;           // max_n (S^(4)_n - E S^(4)_n)^2
  double Sstar_N = 0.0;
  double sup_abs_S1_over_N = 0.0;
  double theta_identity_error = 0.0;   // relative, N V_n(phi) vs sum_i S^(i)_n
  double ledger_identity_error = 0.0;  // relative, bookkeeping vs decomposition for psi(lambda_N)
};

struct ExperimentResult {
  std::int64_t N = 0;
  Schedules schedules;
  std::vector<PathRecord> records;  // ordered by path index
};

inline PathRecord summarize_path(std::uint64_t index, const MarketPath& path, const ModelParams& params,
                                 const KernelTable& table, const Schedules& schedules,
                                 const std::vector<double>& expected_s4) {
  const std::int64_t N = path.N();
  const auto uN = static_cast<size_t>(N);
  const double n = static_cast<double>(N);
  const auto a = analyze_path(path, params, table, schedules);
  PathRecord r;
  r.path_index = index;
  r.stopping = a.stopping;
  for (int t = 0; t < 4; ++t) r.S_over_N[t] = a.theta.S[t][uN] / n;
  r.V_phi = a.V_phi[uN];
  r.V_phihat = a.V_phihat[uN];
  r.V_psi = a.V_psi[uN];
  r.min_V_psi = *std::min_element(a.V_psi.begin(), a.V_psi.end());

  const auto run = friction_run(a.psi, path.S, schedules.lambda_N);
  r.V_psi_lambda = run.ledger.value[uN];
  r.min_V_psi_lambda = *std::min_element(run.ledger.value.begin(), run.ledger.value.end());
  r.ledger_identity_error = run.ledger.identity_error;

  const auto vs = friction_decomposition(a.phihat, path.S, 0.0);
  double gross = 0.0;
  for (std::int64_t k = 0; k <= N; ++k) {
    const auto uk = static_cast<size_t>(k);
    const double v1 = std::fabs(vs.Vs1[uk]), v2 = std::fabs(vs.Vs2[uk]), v3 = std::fabs(vs.Vs3[uk]);
    r.max_abs_Vs[0] = std::max(r.max_abs_Vs[0], v1);
    r.max_abs_Vs[1] = std::max(r.max_abs_Vs[1], v2);
    r.max_abs_Vs[2] = std::max(r.max_abs_Vs[2], v3);
    r.max_abs_Vs_total = std::max(r.max_abs_Vs_total, v1 + v2 + v3);

    const double star = a.theta.S[3][uk] - expected_s4[uk];
    r.sup_Sstar_sq = std::max(r.sup_Sstar_sq, star * star);
    r.sup_abs_S1_over_N = std::max(r.sup_abs_S1_over_N, std::fabs(a.theta.S[0][uk] / n));

    if (k >= 1) gross += std::fabs(path.X[uk - 1] * path.X[uk]);
    const double sum = a.theta.S[0][uk] + a.theta.S[1][uk] + a.theta.S[2][uk] + a.theta.S[3][uk];
    const double diff = std::fabs(n * a.V_phi[uk] - sum);
    if (diff > 0.0) r.theta_identity_error = std::max(r.theta_identity_error, diff / gross);
  }
  r.Sstar_N = a.theta.S[3][uN] - expected_s4[uN];
  return r;
}

/// One horizon: paths 0..paths_per_N-1 of config.master_seed.
inline ExperimentResult run_experiment(const McConfig& config, const KernelTable& table, double theta) {
  ExperimentResult out;
  out.N = table.N();
  out.schedules = make_schedules(out.N, config.model.H, table, theta, config.kappa, config.epsilon_multiplier);
  const auto expected_s4 = expected_s4_prefix(out.N, table);
  out.records.resize(static_cast<size_t>(config.paths_per_N));
  simulate_paths(table, config.model, config.master_seed, 0, config.paths_per_N, config.workers,
                 [&](std::uint64_t index, const MarketPath& path) {
                   out.records[static_cast<size_t>(index)] =
                       summarize_path(index, path, config.model, table, out.schedules, expected_s4);
                 });
  return out;
}

/// tables[a] must be built for config.N_list[a].
inline std::vector<ExperimentResult> run_monte_carlo(const McConfig& config, std::span<const KernelTable> tables) {
  config.validate();
  if (tables.size() != config.N_list.size()) throw ShapeError("one kernel table per horizon is required");
  const auto limit = theta_limit(config.model, config.tail_tol);
  std::vector<ExperimentResult> out;
  for (size_t a = 0; a < tables.size(); ++a) {
    if (tables[a].N() != config.N_list[a]) throw ShapeError("kernel table horizon differs from N_list");
    out.push_back(run_experiment(config, tables[a], limit.theta));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

template <class F>
Estimate estimate_of(const ExperimentResult& e, const F& f) {
  std::vector<double> values;
  values.reserve(e.records.size());
  for (const auto& r : e.records) values.push_back(static_cast<double>(f(r)));
  return estimate(values);
}

}  // namespace detail

struct ConvergenceRow {
  std::int64_t N = 0;
  Schedules schedules;
  std::array<Estimate, 4> term;  // S^(i)_N / N
  Estimate V_phi;
  Estimate p_phi_above_075;      // P(V_N(phi) > 0.75 theta)
  Estimate p_phi_above_050;      // P(V_N(phi) > 0.5 theta)
  Estimate p_psi_success;        // P(V_N(psi) >= C_N)
  std::uint64_t admissibility_violations = 0;  // paths with min_n V_n(psi) < -c_N
  double C_N_lambda = 0.0;
  Estimate p_friction_success;   // P(V_N^{lambda_N}(psi(lambda_N)) >= C_N(lambda_N))
  std::array<Estimate, 4> p_T;   // P(T^(i) <= N)
  Estimate p_TN;                 // P(T_N <= N)
};

struct ConvergenceReport {
  ThetaLimit limit;
  std::array<double, 4> term_target{};  // 0, 0, V3, V4
  /// Empirical c_* = max over horizons and paths of max_n sum_i |Vs^i_n(phihat)| / N^{2H-1/2}.
  double c_star = 0.0;
  std::vector<ConvergenceRow> rows;
};

/// Sample means of S^(i)_N / N and V_N(phi) against their limits.
inline ConvergenceReport lln_report(std::span<const ExperimentResult> experiments, const ThetaLimit& limit) {
  ConvergenceReport report;
  report.limit = limit;
  report.term_target = {0.0, 0.0, limit.V3, limit.V4};
  for (const auto& e : experiments) {
    ConvergenceRow row;
    row.N = e.N;
    row.schedules = e.schedules;
    for (int t = 0; t < 4; ++t) row.term[t] = detail::estimate_of(e, [t](const PathRecord& r) { return r.S_over_N[t]; });
    row.V_phi = detail::estimate_of(e, [](const PathRecord& r) { return r.V_phi; });
    report.rows.push_back(row);
  }
  return report;
}

/// lln_report plus success, admissibility and stopping probabilities.
inline ConvergenceReport saa_report(std::span<const ExperimentResult> experiments, const ThetaLimit& limit) {
  auto report = lln_report(experiments, limit);
  const double H = experiments.empty() ? 0.0 : experiments.front().schedules.H;
  for (const auto& e : experiments) {
    const double scale = std::pow(static_cast<double>(e.N), 2.0 * H - 0.5);
    for (const auto& r : e.records) report.c_star = std::max(report.c_star, r.max_abs_Vs_total / scale);
  }
  const double theta = limit.theta;
  for (size_t a = 0; a < experiments.size(); ++a) {
    const auto& e = experiments[a];
    auto& row = report.rows[a];
    const auto& s = e.schedules;
    row.p_phi_above_075 = detail::estimate_of(e, [&](const PathRecord& r) { return r.V_phi > 0.75 * theta; });
    row.p_phi_above_050 = detail::estimate_of(e, [&](const PathRecord& r) { return r.V_phi > 0.5 * theta; });
    row.p_psi_success = detail::estimate_of(e, [&](const PathRecord& r) { return r.V_psi >= s.C_N; });
    for (const auto& r : e.records) row.admissibility_violations += r.min_V_psi < -s.c_N ? 1 : 0;
    row.C_N_lambda = s.C_N - report.c_star * (s.lambda_N / s.c_N) * std::pow(static_cast<double>(e.N), 2.0 * H - 0.5);
    row.p_friction_success =
        detail::estimate_of(e, [&](const PathRecord& r) { return r.V_psi_lambda >= row.C_N_lambda; });
    for (int t = 0; t < 4; ++t)
      row.p_T[t] = detail::estimate_of(e, [t](const PathRecord& r) { return r.stopping.T[t].has_value(); });
    row.p_TN = detail::estimate_of(e, [](const PathRecord& r) { return r.stopping.TN.has_value(); });
  }
  return report;
}

struct MaxInequalityRow {
  std::int64_t N = 0;
  Estimate sup_Sstar_sq;         // E[max_n |S*_n|^2]
  double shape = 0.0;            // ln N N^{4H-2}
  Estimate Sstar_N;              // centering check, should be 0
  std::array<Estimate, 4> p_T;
  std::array<double, 4> p_T_shape{};  // 1/(N eps^2) for i<=3, ln N/(N^{4-4H} eps^2) for i=4
  double var_S1_over_N = 0.0;
  Estimate p_sup_S1_above_eps;   // P(max_n |S^(1)_n/N| > eps_N)
  double kolmogorov_bound = 0.0; // Var(S^(1)_N/N) / eps_N^2
};

struct MaxInequalityReport {
  RateFit fit;  // log E[max |S*|^2] against log N
  std::vector<MaxInequalityRow> rows;
};

inline MaxInequalityReport max_inequality_report(std::span<const ExperimentResult> experiments,
                                                 std::span<const KernelTable> tables) {
  if (experiments.size() < 3) throw DomainError("max-inequality report needs at least 3 horizons");
  if (tables.size() != experiments.size()) throw ShapeError("one kernel table per horizon is required");
  MaxInequalityReport report;
  std::vector<double> xs, ys;
  for (size_t a = 0; a < experiments.size(); ++a) {
    const auto& e = experiments[a];
    const double n = static_cast<double>(e.N);
    const double H = e.schedules.H;
    const double eps = e.schedules.eps_N;
    MaxInequalityRow row;
    row.N = e.N;
    row.sup_Sstar_sq = detail::estimate_of(e, [](const PathRecord& r) { return r.sup_Sstar_sq; });
    row.shape = std::log(n) * std::pow(n, 4.0 * H - 2.0);
    row.Sstar_N = detail::estimate_of(e, [](const PathRecord& r) { return r.Sstar_N; });
    for (int t = 0; t < 4; ++t) {
      row.p_T[t] = detail::estimate_of(e, [t](const PathRecord& r) { return r.stopping.T[t].has_value(); });
      row.p_T_shape[t] = t < 3 ? 1.0 / (n * eps * eps) : std::log(n) / (std::pow(n, 4.0 - 4.0 * H) * eps * eps);
    }
    row.var_S1_over_N = s1_variance(e.N, tables[a]) / (n * n);
    row.p_sup_S1_above_eps = detail::estimate_of(e, [eps](const PathRecord& r) { return r.sup_abs_S1_over_N > eps; });
    row.kolmogorov_bound = row.var_S1_over_N / (eps * eps);
    xs.push_back(n);
    ys.push_back(row.sup_Sstar_sq.mean);
    report.rows.push_back(row);
  }
  report.fit = rate_fit(xs, ys);
  return report;
}

struct FrictionRateRow {
  std::int64_t N = 0;
  std::array<Estimate, 3> max_abs_Vs;  // E[max_n |Vs^i_n(phihat)|]
  double max_ledger_identity_error = 0.0;
};

struct FrictionRateReport {
  std::array<RateFit, 3> fits;  // against N; the bound rate is 2H - 1/2 for i = 1, 2 and 2H - 1 for i = 3
  std::vector<FrictionRateRow> rows;
};

inline FrictionRateReport friction_rate_report(std::span<const ExperimentResult> experiments) {
  if (experiments.size() < 3) throw DomainError("friction rate report needs at least 3 horizons");
  FrictionRateReport report;
  std::array<std::vector<double>, 3> ys;
  std::vector<double> xs;
  for (const auto& e : experiments) {
    FrictionRateRow row;
    row.N = e.N;
    for (int t = 0; t < 3; ++t) {
      row.max_abs_Vs[t] = detail::estimate_of(e, [t](const PathRecord& r) { return r.max_abs_Vs[t]; });
      ys[t].push_back(row.max_abs_Vs[t].mean);
    }
    for (const auto& r : e.records) row.max_ledger_identity_error = std::max(row.max_ledger_identity_error, r.ledger_identity_error);
    xs.push_back(static_cast<double>(e.N));
    report.rows.push_back(row);
  }
  for (int t = 0; t < 3; ++t) report.fits[t] = rate_fit(xs, ys[t]);
  return report;
}

}  // namespace fracbin
