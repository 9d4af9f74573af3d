#pragma once

// Exact small-N cross-checks: every closed-form moment is compared with the
// plain average over all 2^N sign paths. Conditional expectations given
// xi_1..xi_r are averages over the contiguous blocks of 2^{N-r} paths that
// share a prefix in lexicographic order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fracbin/arbitrage.hpp"
#include "fracbin/diagnostics.hpp"
#include "fracbin/stats.hpp"

namespace fracbin {

struct EnumerationCheck {
  std::string name;
  double exact = 0.0;
  double enumerated = 0.0;
  double abs_error() const { return std::fabs(exact - enumerated); }
};

struct EnumerationReport {
  std::int64_t N = 0;
  std::uint64_t paths = 0;
  std::vector<EnumerationCheck> checks;

  double max_abs_error() const {
    double worst = 0.0;
    for (const auto& c : checks) worst = std::max(worst, c.abs_error());
    return worst;
  }
};

namespace detail {

inline double mean_of(const std::vector<double>& values) {
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  return sum.value() / static_cast<double>(values.size());
}

/// E[values | xi_1..xi_r] for paths in lexicographic order, r <= N.
inline std::vector<double> conditional_on_prefix(const std::vector<double>& values, std::int64_t N, std::int64_t r) {
  r = std::clamp<std::int64_t>(r, 0, N);
  const size_t block = size_t{1} << (N - r);
  std::vector<double> out(values.size());
  for (size_t start = 0; start < values.size(); start += block) {
    CompensatedSum sum;
    for (size_t p = start; p < start + block; ++p) sum.add(values[p]);
    const double avg = sum.value() / static_cast<double>(block);
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(start), out.begin() + static_cast<std::ptrdiff_t>(start + block), avg);
  }
  return out;
}

inline double l2_norm(const std::vector<double>& values) {
  CompensatedSum sum;
  for (double v : values) sum.add(v * v);
  return std::sqrt(sum.value() / static_cast<double>(values.size()));
}

}  // namespace detail

/// Compares the exact formulas with full enumeration at horizon table.N()
/// (at most kMaxEnumerationHorizon).
inline EnumerationReport enumeration_checks(const KernelTable& table, const ModelParams& params) {
  const std::int64_t N = table.N();
  std::vector<MarketPath> paths;
  enumerate_paths(table, params, [&](const MarketPath& path) { paths.push_back(path); });
  const size_t P = paths.size();
  const auto over_paths = [&](auto f) {
    std::vector<double> values(P);
    for (size_t p = 0; p < P; ++p) values[p] = f(paths[p]);
    return values;
  };

  EnumerationReport report;
  report.N = N;
  report.paths = P;
  auto add = [&](std::string name, double exact, double enumerated) {
    report.checks.push_back({std::move(name), exact, enumerated});
  };

  std::vector<ThetaDecomposition> decomps;
  decomps.reserve(P);
  for (const auto& path : paths) decomps.push_back(theta_decomposition(path, table));
  const auto uN = static_cast<size_t>(N);
  const double n = static_cast<double>(N);

  const auto V = over_paths([&](const MarketPath& path) {
    return gains_process(base_positions(path, params), path.S)[uN];
  });
  add("E[V_N(phi)]", expected_value_phi(N, table), detail::mean_of(V));

  std::vector<std::vector<double>> S(4, std::vector<double>(P));
  for (size_t p = 0; p < P; ++p)
    for (int t = 0; t < 4; ++t) S[t][p] = decomps[p].S[t][uN];
  add("E[S1_N]", 0.0, detail::mean_of(S[0]));
  add("E[S2_N]", 0.0, detail::mean_of(S[1]));
  add("E[S3_N]/N", expected_s3(N, table) / n, detail::mean_of(S[2]) / n);
  add("E[S4_N]/N", expected_s4_prefix(N, table).back() / n, detail::mean_of(S[3]) / n);
  add("Var[S1_N]", s1_variance(N, table), std::pow(detail::l2_norm(S[0]), 2));
  add("Var[S2_N]", s2_variance(N, table), std::pow(detail::l2_norm(S[1]), 2));

  for (std::int64_t k = 1; k <= N; ++k) {
    const auto uk = static_cast<size_t>(k);
    const auto Y = over_paths([&](const MarketPath& path) { return path.Y[uk]; });
    add("Var[Y_" + std::to_string(k) + "]", y_variance(k, table), std::pow(detail::l2_norm(Y), 2));
    if (k >= 2) {
      const auto cross = over_paths([&](const MarketPath& path) { return path.Y[uk - 1] * path.Y[uk]; });
      add("E[Y_" + std::to_string(k - 1) + " Y_" + std::to_string(k) + "]", y_cross_expectation(k, table),
          detail::mean_of(cross));
    }
  }

  // Centred products Y*_k, with the centring itself taken from enumeration.
  std::vector<std::vector<double>> star(static_cast<size_t>(N + 1));
  for (std::int64_t k = 2; k <= N; ++k) {
    const auto uk = static_cast<size_t>(k);
    auto values = over_paths([&](const MarketPath& path) { return path.Y[uk - 1] * path.Y[uk]; });
    const double mean = detail::mean_of(values);
    for (double& v : values) v -= mean;
    star[uk] = std::move(values);
  }
  // F*_j is generated by xi_1..xi_{j-1} (trivial for j <= 1).
  auto star_conditional = [&](std::int64_t k, std::int64_t j) {
    return detail::conditional_on_prefix(star[static_cast<size_t>(k)], N, std::max<std::int64_t>(j - 1, 0));
  };

  for (std::int64_t k = 2; k <= N; ++k) {
    for (std::int64_t m = 0; m <= k; ++m) {
      add("mixingale k=" + std::to_string(k) + " m=" + std::to_string(m), mixingale_norm(k, m, table),
          detail::l2_norm(star_conditional(k, k - m)));
    }
  }

  for (std::int64_t k = 0; k <= N - 2; ++k) {
    std::vector<double> martingale(P, 0.0);
    for (std::int64_t i = k + 2; i <= N; ++i) {
      const auto upper = star_conditional(i, i - k);
      const auto lower = star_conditional(i, i - k - 1);
      for (size_t p = 0; p < P; ++p) martingale[p] += upper[p] - lower[p];
    }
    add("Var[Y_{N," + std::to_string(k) + "}]", martingale_variance(N, k, table),
        std::pow(detail::l2_norm(martingale), 2));
  }
  return report;
}

}  // namespace fracbin
