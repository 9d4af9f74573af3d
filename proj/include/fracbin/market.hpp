#pragma once

// Exact realizations of the N-period fractional binary market:
//   Y_n = sum_{i<n} j_n(i) xi_i,  X_n = Y_n + g_n xi_n,  S_n = (1 + X_n / N^H) S_{n-1}.
// Arrays are indexed by n = 0..N; X_0 = Y_0 = 0 and S_0 = s0.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "fracbin/error.hpp"
#include "fracbin/kernel.hpp"
#include "fracbin/parallel.hpp"
#include "fracbin/rng.hpp"

namespace fracbin {

/// xi_1..xi_N stored 0-based (xi[0] is xi_1); every entry is -1 or +1.
struct SignPath {
  std::vector<std::int8_t> xi;

  std::int64_t N() const noexcept { return static_cast<std::int64_t>(xi.size()); }
  /// xi_n for 1 <= n <= N, and 0 for n = 0.
  int at(std::int64_t n) const { return n == 0 ? 0 : xi.at(static_cast<size_t>(n - 1)); }
};

struct MarketPath {
  SignPath signs;
  std::vector<double> Y;
  std::vector<double> X;
  std::vector<double> S;

  std::int64_t N() const noexcept { return signs.N(); }
};

inline SignPath draw_signs(std::int64_t N, SeedSpec seed) {
  SignStream stream(seed);
  SignPath path;
  path.xi.resize(static_cast<size_t>(N));
  for (std::int64_t k = 0; k < N; ++k) path.xi[static_cast<size_t>(k)] = static_cast<std::int8_t>(stream.sign(k));
  return path;
}

namespace detail {

inline void check_compatible(const KernelTable& table, const ModelParams& params) {
  params.validate();
  const auto& p = table.params();
  if (p.H != params.H || p.sigma != params.sigma || p.cH != params.cH) {
    throw DomainError("kernel table was built for different (H, sigma, cH)");
  }
}

/// Fills X and S from Y and the signs.
inline void close_path(MarketPath& path, const KernelTable& table, const ModelParams& params) {
  const std::int64_t N = path.N();
  const double scale = std::pow(static_cast<double>(N), params.H);
  path.X.assign(static_cast<size_t>(N + 1), 0.0);
  path.S.assign(static_cast<size_t>(N + 1), 0.0);
  path.S[0] = params.s0;
  for (std::int64_t n = 1; n <= N; ++n) {
    const auto un = static_cast<size_t>(n);
    path.X[un] = path.Y[un] + table.g(n) * path.signs.at(n);
    const double factor = 1.0 + path.X[un] / scale;
    if (!(factor > 0.0)) throw PriceError(n);
    path.S[un] = factor * path.S[un - 1];
  }
}

}  // namespace detail

inline MarketPath path_from_signs(const SignPath& signs, const KernelTable& table, const ModelParams& params) {
  detail::check_compatible(table, params);
  if (signs.N() != table.N()) throw ShapeError("sign path length differs from table horizon");
  for (auto s : signs.xi)
    if (s != 1 && s != -1) throw DomainError("signs must be -1 or +1");
  const std::int64_t N = table.N();
  MarketPath path;
  path.signs = signs;
  path.Y.assign(static_cast<size_t>(N + 1), 0.0);
  for (std::int64_t n = 2; n <= N; ++n) {
    const auto row = table.row(n);
    double y = 0.0;
    for (size_t i = 0; i < row.size(); ++i) y += row[i] * static_cast<double>(signs.xi[i]);
    path.Y[static_cast<size_t>(n)] = y;
  }
  detail::close_path(path, table, params);
  return path;
}

inline MarketPath simulate_path(const KernelTable& table, const ModelParams& params, SeedSpec seed) {
  return path_from_signs(draw_signs(table.N(), seed), table, params);
}

/// Simulates paths first_index .. first_index + count - 1 of `master_seed` and
/// hands each to visit(path_index, path). Histories are accumulated for a block
/// of paths at once in the same per-path order as path_from_signs, so every path
/// is bit-identical to simulate_path. visit may run concurrently for distinct
/// paths when workers > 1.
template <class Visit>
void simulate_paths(const KernelTable& table, const ModelParams& params, std::uint64_t master_seed,
                    std::uint64_t first_index, std::uint64_t count, unsigned workers, const Visit& visit) {
  detail::check_compatible(table, params);
  constexpr std::int64_t kBlock = 16;
  const std::int64_t N = table.N();
  const auto blocks = static_cast<std::int64_t>((count + kBlock - 1) / kBlock);
  parallel_for(0, blocks, workers, [&](std::int64_t block) {
    const std::uint64_t begin = first_index + static_cast<std::uint64_t>(block * kBlock);
    const auto width = static_cast<std::int64_t>(std::min<std::uint64_t>(kBlock, first_index + count - begin));
    std::vector<MarketPath> paths(static_cast<size_t>(width));
    std::vector<double> xi(static_cast<size_t>(N * kBlock), 0.0);  // [i][b]
    for (std::int64_t b = 0; b < width; ++b) {
      auto& path = paths[static_cast<size_t>(b)];
      path.signs = draw_signs(N, {master_seed, begin + static_cast<std::uint64_t>(b)});
      path.Y.assign(static_cast<size_t>(N + 1), 0.0);
      for (std::int64_t i = 0; i < N; ++i)
        xi[static_cast<size_t>(i * kBlock + b)] = static_cast<double>(path.signs.xi[static_cast<size_t>(i)]);
    }
    double acc[kBlock];
    for (std::int64_t n = 2; n <= N; ++n) {
      const auto row = table.row(n);
      for (auto& value : acc) value = 0.0;
      const double* x = xi.data();
      for (size_t i = 0; i < row.size(); ++i, x += kBlock) {
        const double w = row[i];
        for (std::int64_t b = 0; b < kBlock; ++b) acc[b] += w * x[b];
      }
      for (std::int64_t b = 0; b < width; ++b) paths[static_cast<size_t>(b)].Y[static_cast<size_t>(n)] = acc[b];
    }
    for (std::int64_t b = 0; b < width; ++b) {
      auto& path = paths[static_cast<size_t>(b)];
      detail::close_path(path, table, params);
      visit(begin + static_cast<std::uint64_t>(b), path);
    }
  });
}

inline constexpr std::int64_t kMaxEnumerationHorizon = 22;

/// Visits all 2^N paths once, in lexicographic sign order with -1 < +1 and
/// xi_1 most significant.
template <class Visit>
void enumerate_paths(const KernelTable& table, const ModelParams& params, const Visit& visit) {
  const std::int64_t N = table.N();
  if (N > kMaxEnumerationHorizon) {
    throw TooLargeError("enumeration refuses N=" + std::to_string(N) + " > " +
                        std::to_string(kMaxEnumerationHorizon));
  }
  SignPath signs;
  signs.xi.resize(static_cast<size_t>(N));
  const std::uint64_t total = std::uint64_t{1} << N;
  for (std::uint64_t code = 0; code < total; ++code) {
    for (std::int64_t k = 0; k < N; ++k)
      signs.xi[static_cast<size_t>(k)] = ((code >> (N - 1 - k)) & 1u) ? 1 : -1;
    visit(path_from_signs(signs, table, params));
  }
}

/// CSV dump n,xi,Y,X,S with 17 significant digits; row n = 0 carries xi = 0.
inline void write_path_csv(std::ostream& out, const MarketPath& path) {
  out << "n,xi,Y,X,S\n";
  char buffer[160];
  for (std::int64_t n = 0; n <= path.N(); ++n) {
    const auto un = static_cast<size_t>(n);
    std::snprintf(buffer, sizeof buffer, "%lld,%d,%.17g,%.17g,%.17g\n", static_cast<long long>(n), path.signs.at(n),
                  path.Y[un], path.X[un], path.S[un]);
    out << buffer;
  }
}

}  // namespace fracbin
