#pragma once

// Independent references for the test suite.
//
// Kernel integrals: a long-double product midpoint rule on each unit cell,
// extrapolated over step halvings with the error exponents that the endpoint
// and corner singularities produce (even powers for the smooth part).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

using real = long double;

/// Removes the error terms h^e, e in `exponents` (ascending), from values
/// computed at h, h/2, h/4, ...
inline real richardson(std::vector<real> values, const std::vector<real>& exponents) {
  for (size_t j = 0; j + 1 < values.size() && j < exponents.size(); ++j) {
    const real factor = std::pow(2.0L, exponents[j]);
    for (size_t l = 0; l + 1 < values.size() - j; ++l) values[l] = (factor * values[l + 1] - values[l]) / (factor - 1.0L);
  }
  return values.front();
}

/// Sorted union of {base + k : k >= 0} over the bases and the even integers.
inline std::vector<real> exponent_ladder(const std::vector<real>& bases, size_t count) {
  std::vector<real> all;
  for (int k = 1; k <= static_cast<int>(count); ++k) all.push_back(2.0L * k);
  for (real b : bases)
    for (int k = 0; k <= static_cast<int>(count); ++k) all.push_back(b + k);
  std::sort(all.begin(), all.end());
  std::vector<real> out;
  for (real e : all)
    if (out.empty() || e - out.back() > 1e-12L) out.push_back(e);
  out.resize(std::min(out.size(), count));
  return out;
}

template <class F>
real midpoint(const F& f, int M) {
  real total = 0.0L;
  for (int a = 0; a < M; ++a) {
    real row = 0.0L;
    const real s = (a + 0.5L) / M;
    for (int b = 0; b < M; ++b) row += f(s, (b + 0.5L) / M);
    total += row;
  }
  return total / (static_cast<real>(M) * M);
}

template <class F>
real extrapolated(const F& f, const std::vector<real>& bases, int levels, int M0 = 10) {
  std::vector<real> values;
  for (int l = 0; l < levels; ++l) values.push_back(midpoint(f, M0 << l));
  return richardson(values, exponent_ladder(bases, static_cast<size_t>(levels - 1)));
}

/// j_n(i) for sigma = cH = 1: (H - 1/2) times the cell integral.
inline double j(std::int64_t n, std::int64_t i, double H) {
  const real q = static_cast<real>(H) - 0.5L;
  const real d = static_cast<real>(n - i);
  const real n1 = static_cast<real>(n - 1);
  const real i1 = static_cast<real>(i - 1);
  auto f = [&](real s, real t) {
    return std::pow(i1 + s, -q) * std::pow(t + n1, q) * std::pow(t + d - s, q - 1.0L);
  };
  std::vector<real> bases;
  if (i == 1) bases.push_back(1.0L - q);
  if (n - i == 1) bases.push_back(1.0L + q);
  const int levels = bases.empty() ? 4 : 5 + static_cast<int>(bases.size());
  return static_cast<double>(q * extrapolated(f, bases, levels));
}

/// g_n for n >= 2, sigma = cH = 1.
inline double g(std::int64_t n, double H) {
  const real q = static_cast<real>(H) - 0.5L;
  const real n1 = static_cast<real>(n - 1);
  auto f = [&](real s, real t) {
    const real u = 1.0L - s;
    return std::pow(n1 + s, -q) * std::pow(u, q) * std::pow(t * u + n1 + s, q) * std::pow(t, q - 1.0L);
  };
  return static_cast<double>(q * extrapolated(f, {q, 2.0L * q + 1.0L}, 7));
}

}  // namespace oracle
