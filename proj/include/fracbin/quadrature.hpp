#pragma once

// Deterministic tensor-product Gauss-Legendre quadrature on rectangles.
//
// Endpoint algebraic singularities are removed by a power substitution: for an
// axis graded at its lower end with weight (x-lo)^alpha,
//
//   x = lo + L t^r,  r = p / (alpha + 1),
//   (x-lo)^alpha dx = L^(alpha+1) r t^(p-1) dt,
//
// with p the smallest integer >= 3(alpha+1). The weight is applied
// analytically, so the integrand callback only sees the smooth factor, and the
// leading non-polynomial term of the transformed integrand is at least t^3.
// Panels are uniform in t and doubled until two successive levels agree.

#include <gsl/gsl_integration.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "fracbin/error.hpp"
#include "fracbin/params.hpp"

namespace fracbin {

/// m-point Gauss-Legendre rule on [0, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const GaussLegendre& gauss_legendre(int m) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[m];
  if (!slot) {
    if (m < 2) throw DomainError("Gauss-Legendre rule needs at least 2 nodes");
    auto rule = std::make_unique<GaussLegendre>();
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<size_t>(m));
    if (table == nullptr) throw DomainError("cannot allocate Gauss-Legendre table");
    rule->nodes.resize(static_cast<size_t>(m));
    rule->weights.resize(static_cast<size_t>(m));
    for (int a = 0; a < m; ++a) {
      gsl_integration_glfixed_point(0.0, 1.0, static_cast<size_t>(a), &rule->nodes[static_cast<size_t>(a)],
                                    &rule->weights[static_cast<size_t>(a)], table);
    }
    gsl_integration_glfixed_table_free(table);
    slot = std::move(rule);
  }
  return *slot;
}

/// Composite rule on [0, 1] with `panels` equal panels: node (p + u_a) / P.
struct CompositeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline CompositeRule composite_rule(int m, int panels) {
  const auto& gl = gauss_legendre(m);
  CompositeRule rule;
  rule.nodes.reserve(static_cast<size_t>(m * panels));
  rule.weights.reserve(static_cast<size_t>(m * panels));
  const double P = panels;
  for (int p = 0; p < panels; ++p) {
    for (int a = 0; a < m; ++a) {
      rule.nodes.push_back((p + gl.nodes[static_cast<size_t>(a)]) / P);
      rule.weights.push_back(gl.weights[static_cast<size_t>(a)] / P);
    }
  }
  return rule;
}

enum class Grading { none, lower, upper };

/// One axis of a rectangle. A graded axis carries the weight (x-lo)^alpha
/// (lower) or (hi-x)^alpha (upper), alpha > -1, which the integrand omits.
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  Grading grading = Grading::none;
  double alpha = 0.0;

  static Axis plain(double lo, double hi) { return {lo, hi, Grading::none, 0.0}; }
  static Axis lower(double lo, double hi, double alpha) { return {lo, hi, Grading::lower, alpha}; }
  static Axis upper(double lo, double hi, double alpha) { return {lo, hi, Grading::upper, alpha}; }
};

namespace detail {

struct AxisNodes {
  std::vector<double> x;
  std::vector<double> w;
};

inline AxisNodes map_axis(const Axis& axis, const CompositeRule& rule) {
  AxisNodes out;
  const size_t count = rule.nodes.size();
  out.x.resize(count);
  out.w.resize(count);
  const double L = axis.hi - axis.lo;
  if (axis.grading == Grading::none) {
    for (size_t a = 0; a < count; ++a) {
      out.x[a] = axis.lo + L * rule.nodes[a];
      out.w[a] = L * rule.weights[a];
    }
    return out;
  }
  const double e = axis.alpha + 1.0;
  if (!(e > 0.0)) throw DomainError("graded axis needs alpha > -1");
  const double p = std::max(1.0, std::ceil(3.0 * e));
  const double r = p / e;
  const double scale = std::pow(L, e) * r;
  for (size_t a = 0; a < count; ++a) {
    const double t = rule.nodes[a];
    const double offset = L * std::pow(t, r);
    out.x[a] = axis.grading == Grading::lower ? axis.lo + offset : axis.hi - offset;
    out.w[a] = scale * std::pow(t, p - 1.0) * rule.weights[a];
  }
  return out;
}

template <class F>
double tensor_sum(const F& f, const AxisNodes& ax, const AxisNodes& ay) {
  double total = 0.0;
  for (size_t a = 0; a < ax.x.size(); ++a) {
    double inner = 0.0;
    for (size_t b = 0; b < ay.x.size(); ++b) inner += ay.w[b] * f(ax.x[a], ay.x[b]);
    total += ax.w[a] * inner;
  }
  return total;
}

inline bool converged(double coarse, double fine, const QuadratureConfig& cfg) {
  return std::fabs(fine - coarse) <= std::max(cfg.rel_tol * std::fabs(fine), cfg.abs_tol);
}

}  // namespace detail

/// Integrates f(x, y) times the axis weights over ax x ay, doubling the panel
/// count per axis from `start_panels` until successive levels agree. The
/// (n, i) pair only labels the error.
template <class F>
double integrate_2d(const F& f, const Axis& ax, const Axis& ay, const QuadratureConfig& cfg, std::int64_t n = -1,
                    std::int64_t i = -1, int start_panels = 1) {
  double previous = 0.0;
  bool have_previous = false;
  for (int panels = start_panels; panels <= cfg.max_panels; panels *= 2) {
    const auto rule = composite_rule(cfg.nodes_per_panel, panels);
    const double value = detail::tensor_sum(f, detail::map_axis(ax, rule), detail::map_axis(ay, rule));
    if (have_previous && detail::converged(previous, value, cfg)) return value;
    previous = value;
    have_previous = true;
  }
  throw QuadratureError("quadrature did not converge within max_panels", n, i);
}

}  // namespace fracbin
