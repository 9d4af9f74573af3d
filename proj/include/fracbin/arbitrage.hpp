#pragma once

// The explicit arbitrage strategies and their schedules.
//
//   phi_k     = N^{H-1} X_k / S_k            (k >= 1; phi_{-1} = phi_0 = 0)
//   N V_n(phi) = sum_{k<=n} X_{k-1} X_k = S^(1)_n + S^(2)_n + S^(3)_n + S^(4)_n
//   phihat_k  = 1{k < T_N} phi_k,   psi = phihat / c_N
//
// with T_N = min(T1, T2, T3 - 1, T4 - 1) built from first passages of
// S^(i)_k / N below -eps_N.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "fracbin/error.hpp"
#include "fracbin/kernel.hpp"
#include "fracbin/ledger.hpp"
#include "fracbin/market.hpp"

namespace fracbin {

inline StockPositionProcess base_positions(const MarketPath& path, const ModelParams& params) {
  const std::int64_t N = path.N();
  const double scale = std::pow(static_cast<double>(N), params.H - 1.0);
  auto phi = StockPositionProcess::zeros(N);
  for (std::int64_t k = 1; k <= N; ++k) {
    const auto uk = static_cast<size_t>(k);
    phi.at(k) = scale * path.X[uk] / path.S[uk];
  }
  return phi;
}

/// theta[i][k] and prefix sums S[i][n] for i = 0..3 (terms (1)..(4)) and
/// k, n = 0..N; index 0 and the k = 1 terms are zero.
struct ThetaDecomposition {
  std::array<std::vector<double>, 4> theta;
  std::array<std::vector<double>, 4> S;

  std::int64_t N() const noexcept { return static_cast<std::int64_t>(S[0].size()) - 1; }
};

inline ThetaDecomposition theta_decomposition(const MarketPath& path, const KernelTable& table) {
  const std::int64_t N = path.N();
  if (table.N() != N) throw ShapeError("path and kernel table horizons differ");
  ThetaDecomposition d;
  for (int t = 0; t < 4; ++t) {
    d.theta[t].assign(static_cast<size_t>(N + 1), 0.0);
    d.S[t].assign(static_cast<size_t>(N + 1), 0.0);
  }
  for (std::int64_t k = 2; k <= N; ++k) {
    const auto uk = static_cast<size_t>(k);
    const double a = table.g(k - 1) * path.signs.at(k - 1);
    const double b = table.g(k) * path.signs.at(k);
    d.theta[0][uk] = a * b;
    d.theta[1][uk] = b * path.Y[uk - 1];
    d.theta[2][uk] = a * path.Y[uk];
    d.theta[3][uk] = path.Y[uk - 1] * path.Y[uk];
  }
  for (int t = 0; t < 4; ++t) {
    for (std::int64_t k = 1; k <= N; ++k) {
      const auto uk = static_cast<size_t>(k);
      d.S[t][uk] = d.S[t][uk - 1] + d.theta[t][uk];
    }
  }
  return d;
}

struct Schedules {
  std::int64_t N = 0;
  double H = 0.0;
  double kappa = 1.0;
  double eps_multiplier = 1.0;
  double eps_N = 0.0;
  double B12 = 0.0;
  double c_hat_N = 0.0;
  double c_N = 0.0;
  double C_N = 0.0;
  double lambda_N = 0.0;
};

/// Exponent of the friction schedule, (2H - 1/4) ^ (H + 1/2).
inline double friction_exponent(double H) { return std::min(2.0 * H - 0.25, H + 0.5); }

/// max_{2<=n<=N} [g_{n-1} g_n + g_n sum_{l<=n-2} j_{n-1}(l)], a sure bound on |theta^(1) + theta^(2)|.
inline double sign_bound_b12(std::int64_t N, const KernelTable& table) {
  if (N < 2 || N > table.N()) throw IndexError("B12 horizon outside the kernel table");
  double best = 0.0;
  for (std::int64_t n = 2; n <= N; ++n) {
    double mass = 0.0;
    if (n >= 3)
      for (double w : table.row(n - 1)) mass += w;
    best = std::max(best, table.g(n - 1) * table.g(n) + table.g(n) * mass);
  }
  return best;
}

inline Schedules make_schedules(std::int64_t N, double H, const KernelTable& table, double theta, double kappa = 1.0,
                                double eps_multiplier = 1.0) {
  if (N < 3) throw DomainError("schedules need N >= 3");
  if (!(kappa > 0.0) || !(eps_multiplier > 0.0) || !(theta > 0.0)) {
    throw DomainError("kappa, eps_multiplier and theta must be positive");
  }
  if (H != table.params().H) throw DomainError("schedule H differs from the kernel table");
  const double n = static_cast<double>(N);
  const double log_n = std::log(n);
  Schedules s;
  s.N = N;
  s.H = H;
  s.kappa = kappa;
  s.eps_multiplier = eps_multiplier;
  s.eps_N = eps_multiplier * log_n / std::pow(n, std::min(0.5, 2.0 - 2.0 * H));
  s.B12 = sign_bound_b12(N, table);
  s.c_hat_N = 4.0 * s.eps_N + s.B12 / n;
  s.c_N = std::sqrt(s.c_hat_N);
  s.C_N = theta / (2.0 * s.c_N);
  s.lambda_N = kappa * std::pow(n, -friction_exponent(H)) / std::sqrt(log_n);
  return s;
}

/// Stopping indices; std::nullopt means the event never happens before N.
struct StoppingReport {
  std::array<std::optional<std::int64_t>, 4> T;
  std::optional<std::int64_t> TN;
};

inline StoppingReport stopping_times(const ThetaDecomposition& decomp, double eps) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  const std::int64_t N = decomp.N();
  const double n = static_cast<double>(N);
  StoppingReport report;
  for (int t = 0; t < 4; ++t) {
    for (std::int64_t k = 1; k <= N; ++k) {
      if (decomp.S[t][static_cast<size_t>(k)] / n < -eps) {
        report.T[t] = k;
        break;
      }
    }
  }
  auto consider = [&](std::optional<std::int64_t> candidate) {
    if (candidate && (!report.TN || *candidate < *report.TN)) report.TN = candidate;
  };
  consider(report.T[0]);
  consider(report.T[1]);
  if (report.T[2]) consider(*report.T[2] - 1);
  if (report.T[3]) consider(*report.T[3] - 1);
  return report;
}

/// phihat_k = 1{k < T_N} phi_k.
inline StockPositionProcess stop_positions(const StockPositionProcess& phi, const StoppingReport& report) {
  auto out = phi;
  if (report.TN) {
    for (std::int64_t k = std::max<std::int64_t>(*report.TN, -1); k <= phi.N(); ++k) out.at(k) = 0.0;
  }
  return out;
}

inline StockPositionProcess stopped_positions(const MarketPath& path, const ModelParams& params,
                                              const ThetaDecomposition& decomp, const Schedules& schedules) {
  if (schedules.N != path.N() || decomp.N() != path.N()) throw ShapeError("schedules, decomposition and path differ in N");
  return stop_positions(base_positions(path, params), stopping_times(decomp, schedules.eps_N));
}

/// psi = phihat / c_N.
inline StockPositionProcess scaled_positions(const StockPositionProcess& stopped, const Schedules& schedules) {
  if (!(schedules.c_N > 0.0)) throw DomainError("c_N must be positive");
  auto out = stopped;
  for (auto& value : out.phi1) value /= schedules.c_N;
  return out;
}

/// Everything the strategies produce on one path.
struct PathAnalysis {
  ThetaDecomposition theta;
  StoppingReport stopping;
  StockPositionProcess phi;
  StockPositionProcess phihat;
  StockPositionProcess psi;
  std::vector<double> V_phi;     // gains of phi
  std::vector<double> V_phihat;  // gains of phihat
  std::vector<double> V_psi;     // gains of psi
};

inline PathAnalysis analyze_path(const MarketPath& path, const ModelParams& params, const KernelTable& table,
                                 const Schedules& schedules) {
  if (schedules.N != path.N()) throw ShapeError("schedules and path differ in N");
  PathAnalysis a;
  a.theta = theta_decomposition(path, table);
  a.stopping = stopping_times(a.theta, schedules.eps_N);
  a.phi = base_positions(path, params);
  a.phihat = stop_positions(a.phi, a.stopping);
  a.psi = scaled_positions(a.phihat, schedules);
  a.V_phi = gains_process(a.phi, path.S);
  a.V_phihat = gains_process(a.phihat, path.S);
  a.V_psi = gains_process(a.psi, path.S);
  return a;
}

/// psi(lambda_N): bookkeeping with lambda_N, the friction sums, and the
/// realized penalty lambda_N (Vs1 + Vs2 + Vs3).
struct FrictionRun {
  double lambda = 0.0;
  LedgerResult ledger;
  std::vector<double> penalty;
};

inline FrictionRun friction_run(const StockPositionProcess& psi, const std::vector<double>& prices, double lambda) {
  FrictionRun run;
  run.lambda = lambda;
  run.ledger = run_ledger(psi, prices, lambda);
  const auto& d = run.ledger.decomposition;
  run.penalty.resize(d.Vs1.size());
  for (size_t n = 0; n < d.Vs1.size(); ++n) run.penalty[n] = lambda * (d.Vs1[n] + d.Vs2[n] + d.Vs3[n]);
  return run;
}

inline FrictionRun friction_run(const MarketPath& path, const ModelParams& params, const KernelTable& table,
                                const Schedules& schedules) {
  const auto analysis = analyze_path(path, params, table, schedules);
  return friction_run(analysis.psi, path.S, schedules.lambda_N);
}

}  // namespace fracbin
