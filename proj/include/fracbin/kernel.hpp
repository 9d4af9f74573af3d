#pragma once

// Deterministic model quantities of the fractional binary market: the
// autocovariance rho, the history weights j_n(i), the innovation weights g_n,
// the limit constants of the strategy value, and exact moments of the history
// process Y_n = sum_{i<n} j_n(i) xi_i.

#include <gsl/gsl_sf_zeta.h>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fracbin/error.hpp"
#include "fracbin/parallel.hpp"
#include "fracbin/params.hpp"
#include "fracbin/quadrature.hpp"

namespace fracbin {

/// Autocovariance of fractional Gaussian noise with Hurst exponent h:
/// (1/2)[(k+1)^{2h} + |k-1|^{2h} - 2 k^{2h}].
inline double rho(std::uint64_t k, double h) {
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("rho: h must lie in (0, 1]");
  const double a = 2.0 * h;
  if (k == 0) return 1.0;
  const double kk = static_cast<double>(k);
  if (k < 16) return 0.5 * (std::pow(kk + 1.0, a) + std::pow(kk - 1.0, a) - 2.0 * std::pow(kk, a));
  // k^a * sum_{j>=1} C(a, 2j) k^{-2j}; the direct form cancels catastrophically.
  const double u2 = 1.0 / (kk * kk);
  double binom = 1.0;
  double power = 1.0;
  double sum = 0.0;
  for (int n = 1; n <= 24; ++n) {
    binom *= (a - (n - 1)) / n;
    if (n % 2 == 0) {
      power *= u2;
      const double term = binom * power;
      sum += term;
      if (std::fabs(term) < 1e-19 * std::fabs(sum)) break;
    }
  }
  return std::pow(kk, a) * sum;
}

namespace detail {

inline void check_cell(std::int64_t n, std::int64_t i) {
  if (n < 2) throw IndexError("j_n(i) needs n >= 2");
  if (i < 1 || i > n - 1) throw IndexError("j_n(i) needs 1 <= i <= n-1");
}

/// Weighted factors of a regular cell (2 <= i <= n-2) at one resolution level.
///   x-factor:  w_a ((i-1) + u_a)^{-q}
///   v-factor:  w_b (u_b + (n-1))^{q}
///   joint:     (u_b + (d - u_a))^{q-1},  d = n - i
/// Both the standalone and the batched table path use exactly these formulas
/// and the same summation order, so their results are bit-identical.
inline double x_factor(const CompositeRule& rule, size_t a, std::int64_t i, double q) {
  return rule.weights[a] * std::pow(static_cast<double>(i - 1) + rule.nodes[a], -q);
}
inline double v_factor(const CompositeRule& rule, size_t b, std::int64_t n, double q) {
  return rule.weights[b] * std::pow(rule.nodes[b] + static_cast<double>(n - 1), q);
}
inline double joint_factor(const CompositeRule& rule, size_t a, size_t b, std::int64_t d, double q) {
  return std::pow(rule.nodes[b] + (static_cast<double>(d) - rule.nodes[a]), q - 1.0);
}

inline double regular_level(std::int64_t n, std::int64_t i, double q, const CompositeRule& rule) {
  const size_t M = rule.nodes.size();
  std::vector<double> cw(M);
  for (size_t b = 0; b < M; ++b) cw[b] = v_factor(rule, b, n, q);
  const std::int64_t d = n - i;
  double total = 0.0;
  for (size_t a = 0; a < M; ++a) {
    double inner = 0.0;
    for (size_t b = 0; b < M; ++b) inner += cw[b] * joint_factor(rule, a, b, d, q);
    total += x_factor(rule, a, i, q) * inner;
  }
  return total;
}

/// Unscaled regular cell by plain panel doubling from two panels upwards; used
/// when the two-level fast path does not certify the tolerance.
inline double regular_fallback(std::int64_t n, std::int64_t i, double q, const QuadratureConfig& quad) {
  const double nm1 = static_cast<double>(n - 1);
  auto f = [=](double x, double v) { return std::pow(x, -q) * std::pow(v + nm1, q) * std::pow(v + nm1 - x, q - 1.0); };
  return integrate_2d(f, Axis::plain(static_cast<double>(i - 1), static_cast<double>(i)), Axis::plain(0.0, 1.0),
                      quad, n, i, 2);
}

/// Unscaled integral for the cell i = 1, n >= 3: weight x^{-q} at x = 0.
inline double first_cell(std::int64_t n, double q, const QuadratureConfig& quad) {
  const double nm1 = static_cast<double>(n - 1);
  auto f = [=](double x, double v) { return std::pow(v + nm1, q) * std::pow(v + nm1 - x, q - 1.0); };
  return integrate_2d(f, Axis::lower(0.0, 1.0, -q), Axis::plain(0.0, 1.0), quad, n, 1);
}

/// Unscaled integral for the cell i = n - 1, which carries the corner
/// singularity (v + s)^{q-1} at s = i - x = 0, v = 0. The corner square
/// [0,1/2]^2 in (s, v) is split along the diagonal and each triangle mapped to
/// a square (Duffy), which turns the singularity into a radial weight r^q.
inline double last_cell(std::int64_t n, double q, const QuadratureConfig& quad) {
  const std::int64_t i = n - 1;
  const double di = static_cast<double>(i);
  double total = 0.0;
  // v = s w
  total += integrate_2d(
      [=](double s, double w) { return std::pow(di - s, -q) * std::pow(s * w + di, q) * std::pow(1.0 + w, q - 1.0); },
      Axis::lower(0.0, 0.5, q), Axis::plain(0.0, 1.0), quad, n, i);
  // s = v w
  total += integrate_2d(
      [=](double v, double w) { return std::pow(di - v * w, -q) * std::pow(v + di, q) * std::pow(w + 1.0, q - 1.0); },
      Axis::lower(0.0, 0.5, q), Axis::plain(0.0, 1.0), quad, n, i);
  // s in [0, 1/2], v in [1/2, 1]
  total += integrate_2d(
      [=](double s, double v) { return std::pow(di - s, -q) * std::pow(v + di, q) * std::pow(v + s, q - 1.0); },
      Axis::plain(0.0, 0.5), Axis::plain(0.5, 1.0), quad, n, i);
  // x in [i-1, i-1/2]; for i = 1 this half carries the x^{-q} weight
  if (i >= 2) {
    total += integrate_2d(
        [=](double x, double v) { return std::pow(x, -q) * std::pow(v + di, q) * std::pow(v + di - x, q - 1.0); },
        Axis::plain(di - 1.0, di - 0.5), Axis::plain(0.0, 1.0), quad, n, i);
  } else {
    total += integrate_2d([=](double x, double v) { return std::pow(v + 1.0, q) * std::pow(v + 1.0 - x, q - 1.0); },
                          Axis::lower(0.0, 0.5, -q), Axis::plain(0.0, 1.0), quad, n, i);
  }
  return total;
}

inline double regular_cell(std::int64_t n, std::int64_t i, double q, const QuadratureConfig& quad) {
  const auto coarse_rule = composite_rule(quad.nodes_per_panel, 1);
  const auto fine_rule = composite_rule(quad.nodes_per_panel, 2);
  const double coarse = regular_level(n, i, q, coarse_rule);
  const double fine = regular_level(n, i, q, fine_rule);
  if (quad.max_panels >= 2 && converged(coarse, fine, quad)) return fine;
  return regular_fallback(n, i, q, quad);
}

}  // namespace detail

/// History weight j_n(i), 1 <= i <= n-1.
inline double compute_j(std::int64_t n, std::int64_t i, const ModelParams& params, const QuadratureConfig& quad) {
  params.validate();
  quad.validate();
  detail::check_cell(n, i);
  const double q = params.H - 0.5;
  double unscaled = 0.0;
  if (i == n - 1) {
    unscaled = detail::last_cell(n, q, quad);
  } else if (i == 1) {
    unscaled = detail::first_cell(n, q, quad);
  } else {
    unscaled = detail::regular_cell(n, i, q, quad);
  }
  return params.kernel_scale() * unscaled;
}

/// Innovation weight g_n, n >= 1.
inline double compute_g(std::int64_t n, const ModelParams& params, const QuadratureConfig& quad) {
  params.validate();
  quad.validate();
  if (n < 1) throw IndexError("g_n needs n >= 1");
  const double q = params.H - 0.5;
  double unscaled = 0.0;
  if (n >= 2) {
    const double dn = static_cast<double>(n);
    unscaled = integrate_2d(
        [=](double x, double y) { return std::pow(x, -q) * std::pow(y * (dn - x) + x, q); },
        Axis::upper(dn - 1.0, dn, q), Axis::lower(0.0, 1.0, q - 1.0), quad, n, 0);
  } else {
    // n = 1: x^{-q} and y^{q-1} meet at the origin; split off [0,1/2]^2 and
    // resolve it with the two Duffy triangles.
    unscaled += integrate_2d(
        [=](double x, double y) { return std::pow(x, -q) * std::pow(y * (1.0 - x) + x, q); },
        Axis::upper(0.5, 1.0, q), Axis::lower(0.0, 1.0, q - 1.0), quad, 1, 0);
    unscaled += integrate_2d(
        [=](double x, double y) {
          return std::pow(1.0 - x, q) * std::pow(y * (1.0 - x) + x, q) * std::pow(y, q - 1.0);
        },
        Axis::lower(0.0, 0.5, -q), Axis::plain(0.5, 1.0), quad, 1, 0);
    // y = x w
    unscaled += integrate_2d(
        [=](double x, double w) { return std::pow(1.0 - x, q) * std::pow(1.0 + w - x * w, q); },
        Axis::lower(0.0, 0.5, q), Axis::lower(0.0, 1.0, q - 1.0), quad, 1, 0);
    // x = y w
    unscaled += integrate_2d(
        [=](double y, double w) { return std::pow(1.0 - y * w, q) * std::pow(w + 1.0 - y * w, q); },
        Axis::lower(0.0, 0.5, q), Axis::lower(0.0, 1.0, -q), quad, 1, 0);
  }
  return params.kernel_scale() * unscaled;
}

/// Precomputed g_n (n = 1..N) and j_n(i) (2 <= n <= N, 1 <= i <= n-1).
/// Immutable after construction.
class KernelTable {
 public:
  KernelTable() = default;
  KernelTable(std::int64_t N, ModelParams params, QuadratureConfig quad, std::vector<double> g_row,
              std::vector<double> j_rows)
      : N_(N), params_(params), quad_(quad), g_row_(std::move(g_row)), j_rows_(std::move(j_rows)) {
    if (N_ < 2) throw DomainError("kernel table needs N >= 2");
    if (static_cast<std::int64_t>(g_row_.size()) != N_ || static_cast<std::int64_t>(j_rows_.size()) != j_count(N_)) {
      throw ShapeError("kernel table payload does not match N");
    }
  }

  /// Number of j entries for horizon N: (N-1)N/2.
  static std::int64_t j_count(std::int64_t N) { return (N - 1) * N / 2; }
  static std::int64_t row_offset(std::int64_t n) { return (n - 2) * (n - 1) / 2; }

  std::int64_t N() const noexcept { return N_; }
  const ModelParams& params() const noexcept { return params_; }
  const QuadratureConfig& quad() const noexcept { return quad_; }

  double g(std::int64_t n) const {
    if (n < 1 || n > N_) throw IndexError("g_n index out of range");
    return g_row_[static_cast<size_t>(n - 1)];
  }
  double j(std::int64_t n, std::int64_t i) const {
    if (n < 2 || n > N_ || i < 1 || i > n - 1) throw IndexError("j_n(i) index out of range");
    return j_rows_[static_cast<size_t>(row_offset(n) + i - 1)];
  }
  /// j_n(1..n-1); empty for n = 1.
  std::span<const double> row(std::int64_t n) const {
    if (n < 1 || n > N_) throw IndexError("kernel row out of range");
    if (n == 1) return {};
    return {j_rows_.data() + row_offset(n), static_cast<size_t>(n - 1)};
  }

  const std::vector<double>& g_row() const noexcept { return g_row_; }
  const std::vector<double>& j_rows() const noexcept { return j_rows_; }

 private:
  std::int64_t N_ = 0;
  ModelParams params_{};
  QuadratureConfig quad_{};
  std::vector<double> g_row_;
  std::vector<double> j_rows_;
};

/// Builds the table for horizon N. Every entry is a pure function of
/// (n, i, params, quad), so the result is bit-identical for any worker count
/// and equals compute_j / compute_g entry by entry.
inline KernelTable build_kernel_table(std::int64_t N, const ModelParams& params, const QuadratureConfig& quad,
                                      unsigned workers = 0) {
  params.validate();
  quad.validate();
  if (N < 2) throw DomainError("kernel table needs N >= 2");
  const double q = params.H - 0.5;
  const double scale = params.kernel_scale();
  std::vector<double> g_row(static_cast<size_t>(N));
  std::vector<double> j_rows(static_cast<size_t>(KernelTable::j_count(N)));
  auto slot = [&](std::int64_t n, std::int64_t i) -> double& {
    return j_rows[static_cast<size_t>(KernelTable::row_offset(n) + i - 1)];
  };

  // Singular cells and g_n, one n per task.
  parallel_for(1, N + 1, workers, [&](std::int64_t n) {
    g_row[static_cast<size_t>(n - 1)] = compute_g(n, params, quad);
    if (n >= 2) slot(n, n - 1) = scale * detail::last_cell(n, q, quad);
    if (n >= 3) slot(n, 1) = scale * detail::first_cell(n, q, quad);
  });

  if (N >= 4) {
    // Regular cells, one diagonal d = n - i per task. The joint factor depends
    // only on d, so it is evaluated once per diagonal; the x- and v-factors are
    // shared across diagonals.
    const auto coarse_rule = composite_rule(quad.nodes_per_panel, 1);
    const auto fine_rule = composite_rule(quad.nodes_per_panel, 2);
    struct Level {
      const CompositeRule* rule;
      size_t M;
      std::vector<double> xw;  // [a][i], i in [0, N]
      std::vector<double> cw;  // [b][n], n in [0, N]
    };
    Level levels[2] = {{&coarse_rule, coarse_rule.nodes.size(), {}, {}},
                       {&fine_rule, fine_rule.nodes.size(), {}, {}}};
    const auto stride = static_cast<size_t>(N + 1);
    for (auto& level : levels) {
      level.xw.assign(level.M * stride, 0.0);
      level.cw.assign(level.M * stride, 0.0);
      for (size_t a = 0; a < level.M; ++a) {
        for (std::int64_t i = 2; i <= N - 2; ++i) level.xw[a * stride + i] = detail::x_factor(*level.rule, a, i, q);
        for (std::int64_t n = 4; n <= N; ++n) level.cw[a * stride + n] = detail::v_factor(*level.rule, a, n, q);
      }
    }
    parallel_for(2, N - 1, workers, [&](std::int64_t d) {
      const std::int64_t n_lo = d + 2;
      const auto count = static_cast<size_t>(N - n_lo + 1);
      std::vector<double> value[2];
      std::vector<double> inner(count);
      std::vector<double> joint;
      for (int L = 0; L < 2; ++L) {
        const Level& level = levels[L];
        const size_t M = level.M;
        joint.resize(M * M);
        for (size_t a = 0; a < M; ++a)
          for (size_t b = 0; b < M; ++b) joint[a * M + b] = detail::joint_factor(*level.rule, a, b, d, q);
        auto& total = value[L];
        total.assign(count, 0.0);
        for (size_t a = 0; a < M; ++a) {
          std::fill(inner.begin(), inner.end(), 0.0);
          for (size_t b = 0; b < M; ++b) {
            const double kab = joint[a * M + b];
            const double* cw = level.cw.data() + b * stride + n_lo;
            for (size_t t = 0; t < count; ++t) inner[t] += cw[t] * kab;
          }
          const double* xw = level.xw.data() + a * stride + (n_lo - d);
          for (size_t t = 0; t < count; ++t) total[t] += xw[t] * inner[t];
        }
      }
      for (size_t t = 0; t < count; ++t) {
        const std::int64_t n = n_lo + static_cast<std::int64_t>(t);
        const std::int64_t i = n - d;
        double unscaled = value[1][t];
        if (!(quad.max_panels >= 2 && detail::converged(value[0][t], value[1][t], quad))) {
          unscaled = detail::regular_fallback(n, i, q, quad);
        }
        slot(n, i) = scale * unscaled;
      }
    });
  }
  return KernelTable(N, params, quad, std::move(g_row), std::move(j_rows));
}

/// Sum over k >= 1 + lag of rho(k) rho(k - lag) (lag 0 or 1).
struct RhoSeries {
  double value = 0.0;
  std::int64_t head_terms = 0;  // explicit terms summed, k <= head_terms
  double tail_bound = 0.0;      // estimated error of the asymptotic tail
};

/// The explicit head runs to K; the tail sum_{k>K} is evaluated from the
/// asymptotic expansion rho(k) rho(k-lag) = sum_m c_m k^{4h-m} term by term
/// with Hurwitz zeta functions. K is the smallest power of two >= 64 whose
/// first omitted expansion term, doubled, is below tail_tol.
inline RhoSeries rho_product_series(double h, int lag, double tail_tol) {
  if (!(h > 0.5 && h < 0.75)) throw DomainError("rho series needs h in (1/2, 3/4)");
  if (lag != 0 && lag != 1) throw DomainError("rho series lag must be 0 or 1");
  if (!(tail_tol > 0.0)) throw DomainError("tail_tol must be > 0");
  const double a = 2.0 * h;
  constexpr int kOrder = 16;
  // Coefficients of k^{-n} in rho(k - l) / k^a.
  auto coefficients = [&](double l) {
    std::vector<double> c(kOrder + 2, 0.0);
    double binom = 1.0;
    for (int n = 0; n <= kOrder + 1; ++n) {
      if (n > 0) binom *= (a - (n - 1)) / n;
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      const double bracket = std::pow(l - 1.0, n) + std::pow(l + 1.0, n) - 2.0 * std::pow(l, n);
      c[static_cast<size_t>(n)] = 0.5 * binom * sign * bracket;
    }
    return c;
  };
  const auto c0 = coefficients(0.0);
  const auto cl = coefficients(static_cast<double>(lag));
  std::vector<double> gamma(kOrder + 2, 0.0);
  for (int m = 0; m <= kOrder + 1; ++m)
    for (int n = 0; n <= m; ++n) gamma[static_cast<size_t>(m)] += c0[static_cast<size_t>(n)] * cl[static_cast<size_t>(m - n)];

  std::int64_t K = 64;
  double bound = 0.0;
  for (;; K *= 2) {
    const double next = static_cast<double>(kOrder + 1);
    bound = 2.0 * std::fabs(gamma[kOrder + 1]) * gsl_sf_hzeta(next - 2.0 * a, static_cast<double>(K + 1));
    if (bound <= tail_tol || K >= (std::int64_t{1} << 40)) break;
  }
  double head = 0.0;
  for (std::int64_t k = 1 + lag; k <= K; ++k)
    head += rho(static_cast<std::uint64_t>(k), h) * rho(static_cast<std::uint64_t>(k - lag), h);
  double tail = 0.0;
  for (int m = kOrder; m >= 4; --m)
    tail += gamma[static_cast<size_t>(m)] * gsl_sf_hzeta(m - 2.0 * a, static_cast<double>(K + 1));
  return {head + tail, K, bound};
}

/// Limit of the frictionless strategy value: theta = V4 + V3 with
/// V4 = 4 g^2 sum_{k>=2} rho(k) rho(k-1) and V3 = g^2 (2^{H+1/2} - 2).
struct ThetaLimit {
  double theta = 0.0;
  double V4 = 0.0;
  double V3 = 0.0;
  std::int64_t head_terms = 0;
  double tail_bound = 0.0;
};

inline ThetaLimit theta_limit(const ModelParams& params, double tail_tol) {
  params.validate();
  const double h = params.h();
  if (h >= 0.75) throw DomainError("theta_limit: the rho series diverges for h >= 3/4");
  const double g = params.g();
  const auto series = rho_product_series(h, 1, tail_tol / (4.0 * g * g));
  ThetaLimit out;
  out.V4 = 4.0 * g * g * series.value;
  out.V3 = g * g * (std::pow(2.0, params.H + 0.5) - 2.0);
  out.theta = out.V4 + out.V3;
  out.head_terms = series.head_terms;
  out.tail_bound = 4.0 * g * g * series.tail_bound;
  return out;
}

/// Variance of the limit history Y = 2g sum_k rho(k) xi_k: 4 g^2 sum_{k>=1} rho(k)^2.
inline double y_limit_variance(const ModelParams& params, double tail_tol) {
  params.validate();
  const double g = params.g();
  return 4.0 * g * g * rho_product_series(params.h(), 0, tail_tol / (4.0 * g * g)).value;
}

/// E[Y_{k-1} Y_k] = sum_{i=1}^{k-2} j_k(i) j_{k-1}(i).
inline double y_cross_expectation(std::int64_t k, const KernelTable& table) {
  if (k < 2 || k > table.N()) throw IndexError("y_cross_expectation needs 2 <= k <= N");
  const auto now = table.row(k);
  const auto before = table.row(k - 1);
  double sum = 0.0;
  for (size_t i = 0; i < before.size(); ++i) sum += now[i] * before[i];
  return sum;
}

/// Var[Y_k] = sum_{i=1}^{k-1} j_k(i)^2.
inline double y_variance(std::int64_t k, const KernelTable& table) {
  if (k < 1 || k > table.N()) throw IndexError("y_variance needs 1 <= k <= N");
  double sum = 0.0;
  for (double value : table.row(k)) sum += value * value;
  return sum;
}

}  // namespace fracbin
