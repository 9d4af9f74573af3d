#pragma once

// Self-financing bookkeeping under proportional costs charged on sales only:
// the ask is S_n and the bid is (1 - lambda) S_n. Position processes are indexed
// k = -1..N and stored at offset k + 1; price and value series use n = 0..N.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <vector>

#include "fracbin/error.hpp"

namespace fracbin {

struct StockPositionProcess {
  std::vector<double> phi1;

  static StockPositionProcess zeros(std::int64_t N) {
    return {std::vector<double>(static_cast<size_t>(N + 2), 0.0)};
  }

  std::int64_t N() const noexcept { return static_cast<std::int64_t>(phi1.size()) - 2; }
  double at(std::int64_t k) const { return phi1.at(static_cast<size_t>(k + 1)); }
  double& at(std::int64_t k) { return phi1.at(static_cast<size_t>(k + 1)); }
};

namespace detail {

inline double positive_part(double x) noexcept { return x > 0.0 ? x : 0.0; }
inline double negative_part(double x) noexcept { return x < 0.0 ? -x : 0.0; }

inline void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in [0, 1)");
}

inline void check_aligned(const StockPositionProcess& phi1, const std::vector<double>& prices) {
  if (phi1.phi1.size() < 2 || prices.size() + 1 != phi1.phi1.size()) {
    throw ShapeError("positions (k=-1..N) and prices (n=0..N) are not aligned");
  }
}

}  // namespace detail

/// Bond holdings phi0_k, k = -1..N, from the equality form of the
/// self-financing condition; phi0_{-1} = phi0_init.
inline std::vector<double> derive_bond_positions(const StockPositionProcess& phi1, const std::vector<double>& prices,
                                                 double lambda, double phi0_init) {
  detail::check_lambda(lambda);
  detail::check_aligned(phi1, prices);
  const std::int64_t N = phi1.N();
  std::vector<double> phi0(static_cast<size_t>(N + 2));
  phi0[0] = phi0_init;
  for (std::int64_t n = 0; n <= N; ++n) {
    const double trade = phi1.at(n) - phi1.at(n - 1);
    const double S = prices[static_cast<size_t>(n)];
    phi0[static_cast<size_t>(n + 1)] =
        phi0[static_cast<size_t>(n)] - detail::positive_part(trade) * S + (1.0 - lambda) * detail::negative_part(trade) * S;
  }
  return phi0;
}

/// V_n = phi0_n + (1 - lambda) (phi1_n)^+ S_n - (phi1_n)^- S_n for n = 0..N.
inline std::vector<double> liquidation_values(const std::vector<double>& phi0, const StockPositionProcess& phi1,
                                              const std::vector<double>& prices, double lambda) {
  detail::check_lambda(lambda);
  detail::check_aligned(phi1, prices);
  if (phi0.size() != phi1.phi1.size()) throw ShapeError("bond and stock positions differ in length");
  const std::int64_t N = phi1.N();
  std::vector<double> value(static_cast<size_t>(N + 1));
  for (std::int64_t n = 0; n <= N; ++n) {
    const double position = phi1.at(n);
    const double S = prices[static_cast<size_t>(n)];
    value[static_cast<size_t>(n)] = phi0[static_cast<size_t>(n + 1)] +
                                    (1.0 - lambda) * detail::positive_part(position) * S -
                                    detail::negative_part(position) * S;
  }
  return value;
}

/// Frictionless gains sum_{k<=n} phi1_{k-1} (S_k - S_{k-1}), n = 0..N.
inline std::vector<double> gains_process(const StockPositionProcess& phi1, const std::vector<double>& prices) {
  detail::check_aligned(phi1, prices);
  const std::int64_t N = phi1.N();
  std::vector<double> gains(static_cast<size_t>(N + 1), 0.0);
  for (std::int64_t n = 1; n <= N; ++n) {
    const auto un = static_cast<size_t>(n);
    gains[un] = gains[un - 1] + phi1.at(n - 1) * (prices[un] - prices[un - 1]);
  }
  return gains;
}

/// The three friction sums and the value process they reconstruct:
///   V_n = V_0 + gains_n - lambda (Vs1_n + Vs2_n + Vs3_n),  V_0 = -lambda |phi1_0| s0.
struct FrictionDecomposition {
  double V0 = 0.0;
  std::vector<double> gains;
  std::vector<double> Vs1;
  std::vector<double> Vs2;
  std::vector<double> Vs3;
  std::vector<double> value;
};

/// Requires zero endowment: no bond and no stock before time 0.
inline FrictionDecomposition friction_decomposition(const StockPositionProcess& phi1, const std::vector<double>& prices,
                                                    double lambda) {
  detail::check_lambda(lambda);
  detail::check_aligned(phi1, prices);
  if (phi1.at(-1) != 0.0) throw DomainError("friction decomposition needs phi1_{-1} = 0 (zero endowment)");
  const std::int64_t N = phi1.N();
  const auto size = static_cast<size_t>(N + 1);
  FrictionDecomposition out;
  out.V0 = -lambda * std::fabs(phi1.at(0)) * prices[0];
  out.gains = gains_process(phi1, prices);
  out.Vs1.assign(size, 0.0);
  out.Vs2.assign(size, 0.0);
  out.Vs3.assign(size, 0.0);
  out.value.assign(size, 0.0);
  out.value[0] = out.V0;
  for (std::int64_t k = 1; k <= N; ++k) {
    const auto uk = static_cast<size_t>(k);
    const double now = phi1.at(k);
    const double before = phi1.at(k - 1);
    double d1 = 0.0, d2 = 0.0, d3 = 0.0;
    if (now - before >= 0.0) {
      d1 = detail::positive_part(now) * prices[uk] - detail::positive_part(before) * prices[uk - 1];
    } else {
      d2 = detail::negative_part(now) * prices[uk] - detail::negative_part(before) * prices[uk - 1];
      d3 = before * (prices[uk] - prices[uk - 1]);
    }
    out.Vs1[uk] = out.Vs1[uk - 1] + d1;
    out.Vs2[uk] = out.Vs2[uk - 1] + d2;
    out.Vs3[uk] = out.Vs3[uk - 1] + d3;
    out.value[uk] = out.V0 + out.gains[uk] - lambda * (out.Vs1[uk] + out.Vs2[uk] + out.Vs3[uk]);
  }
  return out;
}

struct LedgerResult {
  std::vector<double> phi0;  // k = -1..N
  std::vector<double> value;  // n = 0..N, from the bookkeeping
  FrictionDecomposition decomposition;
  /// max_n |bookkeeping - reconstruction| / (gross notional traded up to n + current exposure)
  double identity_error = 0.0;
};

/// Runs the bookkeeping with zero endowment and cross-checks it against the
/// decomposition.
inline LedgerResult run_ledger(const StockPositionProcess& phi1, const std::vector<double>& prices, double lambda) {
  LedgerResult out;
  out.phi0 = derive_bond_positions(phi1, prices, lambda, 0.0);
  out.value = liquidation_values(out.phi0, phi1, prices, lambda);
  out.decomposition = friction_decomposition(phi1, prices, lambda);
  double traded = 0.0;
  for (std::int64_t n = 0; n <= phi1.N(); ++n) {
    const auto un = static_cast<size_t>(n);
    traded += std::fabs(phi1.at(n) - phi1.at(n - 1)) * prices[un];
    const double scale = traded + std::fabs(out.phi0[un + 1]) + std::fabs(phi1.at(n)) * prices[un];
    const double diff = std::fabs(out.value[un] - out.decomposition.value[un]);
    if (diff > 0.0) out.identity_error = std::max(out.identity_error, diff / scale);
  }
  return out;
}

/// CSV n,phi0,phi1,S,V_lambda,Vs1,Vs2,Vs3 for n = 0..N.
inline void write_ledger_csv(std::ostream& out, const StockPositionProcess& phi1, const std::vector<double>& prices,
                             const LedgerResult& ledger) {
  out << "n,phi0,phi1,S,V_lambda,Vs1,Vs2,Vs3\n";
  char buffer[256];
  const auto& d = ledger.decomposition;
  for (std::int64_t n = 0; n <= phi1.N(); ++n) {
    const auto un = static_cast<size_t>(n);
    std::snprintf(buffer, sizeof buffer, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(n),
                  ledger.phi0[un + 1], phi1.at(n), prices[un], ledger.value[un], d.Vs1[un], d.Vs2[un], d.Vs3[un]);
    out << buffer;
  }
}

}  // namespace fracbin
