#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fracbin/error.hpp"

namespace fracbin {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Sample mean with standard error = sample std / sqrt(count).
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::uint64_t count = 0;
};

/// Values are reduced in the given order, so equal inputs give equal bits.
inline Estimate estimate(std::span<const double> values) {
  Estimate out;
  out.count = values.size();
  if (values.empty()) return out;
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  out.mean = sum.value() / static_cast<double>(values.size());
  if (values.size() > 1) {
    CompensatedSum squares;
    for (double v : values) squares.add((v - out.mean) * (v - out.mean));
    out.se = std::sqrt(squares.value() / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return out;
}

inline Estimate proportion(std::span<const bool> hits) {
  std::vector<double> values(hits.begin(), hits.end());
  return estimate(values);
}

/// Least-squares line through (log x, log y).
struct RateFit {
  std::vector<double> log_x;
  std::vector<double> log_y;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_norm = 0.0;
};

inline RateFit rate_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ShapeError("rate_fit needs equally many x and y values");
  if (xs.size() < 3) throw DomainError("rate_fit needs at least 3 points");
  RateFit fit;
  for (size_t a = 0; a < xs.size(); ++a) {
    if (!(std::isfinite(xs[a]) && std::isfinite(ys[a]) && xs[a] > 0.0 && ys[a] > 0.0)) {
      throw DomainError("rate_fit needs finite positive points");
    }
    if (a > 0 && !(xs[a] > xs[a - 1])) throw DomainError("rate_fit needs strictly increasing x");
    fit.log_x.push_back(std::log(xs[a]));
    fit.log_y.push_back(std::log(ys[a]));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t a = 0; a < xs.size(); ++a) {
    mx += fit.log_x[a];
    my += fit.log_y[a];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t a = 0; a < xs.size(); ++a) {
    sxx += (fit.log_x[a] - mx) * (fit.log_x[a] - mx);
    sxy += (fit.log_x[a] - mx) * (fit.log_y[a] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (size_t a = 0; a < xs.size(); ++a) {
    const double r = fit.log_y[a] - (fit.intercept + fit.slope * fit.log_x[a]);
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  return fit;
}

}  // namespace fracbin
