#pragma once

#include <cmath>
#include <string>

#include "fracbin/error.hpp"

namespace fracbin {

/// Parameters of the N-period fractional binary market.
///
/// `cH` is the normalization constant of the limit weight g = sigma*cH/(H+1/2).
/// The kernel integrals j_n(i) and g_n carry the factor sigma*(H-1/2)*cH, which
/// is the normalization under which g_n -> g.
struct ModelParams {
  double H = 0.75;
  double sigma = 1.0;
  double cH = 1.0;
  double s0 = 1.0;

  void validate() const {
    if (!(H > 0.5 && H < 1.0)) throw DomainError("H must lie in (1/2, 1), got " + std::to_string(H));
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be > 0");
    if (!(cH > 0.0) || !std::isfinite(cH)) throw DomainError("cH must be > 0");
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw DomainError("s0 must be > 0");
  }

  /// Hurst exponent of the limiting autocovariance, H/2 + 1/4.
  double h() const noexcept { return H / 2.0 + 0.25; }

  /// Limit of g_n.
  double g() const noexcept { return sigma * cH / (H + 0.5); }

  /// Prefactor of the kernel integrals.
  double kernel_scale() const noexcept { return sigma * (H - 0.5) * cH; }
};

struct QuadratureConfig {
  int nodes_per_panel = 16;
  int max_panels = 1024;
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;

  void validate() const {
    if (nodes_per_panel < 2) throw DomainError("nodes_per_panel must be >= 2");
    if (max_panels < 1) throw DomainError("max_panels must be >= 1");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("quadrature tolerances must be > 0");
  }
};

}  // namespace fracbin
