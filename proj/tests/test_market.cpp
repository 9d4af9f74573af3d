#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "fracbin/market.hpp"
#include "fracbin/stats.hpp"

using namespace fracbin;

namespace {

const KernelTable& table_for(std::int64_t N) {
  static std::map<std::int64_t, KernelTable> cache;
  auto it = cache.find(N);
  if (it == cache.end()) it = cache.emplace(N, build_kernel_table(N, ModelParams{}, {})).first;
  return it->second;
}

SignPath constant_signs(std::int64_t N, int s) {
  SignPath p;
  p.xi.assign(static_cast<size_t>(N), static_cast<std::int8_t>(s));
  return p;
}

}  // namespace

TEST(Rng, SplitMixOutputFunction) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(mix64(0x9e3779b97f4a7c15ULL), 0xe220a8397b1dcdafULL);
}

TEST(Rng, FrozenSignPrefix) {
  const int expected[] = {-1, -1, -1, 1, -1, 1, -1, -1, -1, 1, 1, 1, 1, 1, -1, 1, 1, -1, 1, -1};
  const auto signs = draw_signs(20, {42, 0});
  for (int k = 0; k < 20; ++k) EXPECT_EQ(signs.xi[static_cast<size_t>(k)], expected[k]) << k;
  const int second_block[] = {-1, 1, -1, -1, -1, 1, 1, -1, 1, -1};
  const auto longer = draw_signs(70, {42, 7});
  for (int k = 0; k < 10; ++k) EXPECT_EQ(longer.xi[static_cast<size_t>(60 + k)], second_block[k]) << k;
}

TEST(Rng, StreamsDifferAcrossPathsAndSeeds) {
  const auto a = draw_signs(128, {42, 0});
  EXPECT_NE(a.xi, draw_signs(128, {42, 1}).xi);
  EXPECT_NE(a.xi, draw_signs(128, {43, 0}).xi);
  EXPECT_EQ(a.xi, draw_signs(128, {42, 0}).xi);
}

TEST(Rng, FairCoin) {
  const int paths = 100000;
  double sum = 0.0;
  for (int p = 0; p < paths; ++p) sum += SignStream({7, static_cast<std::uint64_t>(p)}).sign(0);
  EXPECT_LT(std::fabs(sum / paths), 3.0 / std::sqrt(paths));
}

TEST(PathFromSigns, AllPlusAttainsSignBound) {
  ModelParams p;
  const auto& t = table_for(4);
  const auto path = path_from_signs(constant_signs(4, 1), t, p);
  EXPECT_EQ(path.Y[0], 0.0);
  EXPECT_EQ(path.Y[1], 0.0);
  EXPECT_EQ(path.X[0], 0.0);
  EXPECT_EQ(path.S[0], p.s0);
  for (std::int64_t n = 2; n <= 4; ++n) {
    double bound = 0.0;
    for (double w : t.row(n)) bound += w;
    EXPECT_DOUBLE_EQ(path.Y[static_cast<size_t>(n)], bound);
  }
  for (std::int64_t n = 1; n <= 4; ++n) EXPECT_GT(path.S[static_cast<size_t>(n)], path.S[static_cast<size_t>(n - 1)]);
}

TEST(PathFromSigns, FlippingSignsNegatesHistory) {
  ModelParams p;
  const auto& t = table_for(64);
  const auto signs = draw_signs(64, {3, 9});
  auto flipped = signs;
  for (auto& s : flipped.xi) s = static_cast<std::int8_t>(-s);
  const auto a = path_from_signs(signs, t, p);
  const auto b = path_from_signs(flipped, t, p);
  for (size_t n = 0; n <= 64; ++n) {
    EXPECT_EQ(a.Y[n], -b.Y[n]);
    EXPECT_EQ(a.X[n], -b.X[n]);
  }
}

TEST(PathFromSigns, InvariantsHold) {
  ModelParams p;
  p.s0 = 3.5;
  const auto& t = table_for(128);
  const auto path = simulate_path(t, p, {11, 4});
  const double scale = std::pow(128.0, p.H);
  for (std::int64_t n = 1; n <= 128; ++n) {
    const auto un = static_cast<size_t>(n);
    const double ulp = std::numeric_limits<double>::epsilon() * std::max(std::fabs(path.X[un]), std::fabs(path.Y[un]));
    EXPECT_NEAR(std::fabs(path.X[un] - path.Y[un]), t.g(n), ulp);
    EXPECT_GT(path.S[un], 0.0);
    double bound = 0.0;
    long double reverse = 0.0L;
    const auto row = t.row(n);
    for (double w : row) bound += w;
    for (size_t i = row.size(); i-- > 0;) reverse += static_cast<long double>(row[i]) * path.signs.xi[i];
    EXPECT_LE(std::fabs(path.Y[un]), bound * (1 + 1e-15));
    EXPECT_NEAR(path.Y[un], static_cast<double>(reverse), 1e-12 * std::max(1.0, bound));
    EXPECT_NEAR(path.S[un] / path.S[un - 1] - 1.0, path.X[un] / scale, 4e-16 * path.S[un] / path.S[un - 1]);
  }
}

TEST(PathFromSigns, RejectsBadInputs) {
  ModelParams p;
  const auto& t = table_for(8);
  EXPECT_THROW(path_from_signs(constant_signs(7, 1), t, p), ShapeError);
  auto bad = constant_signs(8, 1);
  bad.xi[3] = 0;
  EXPECT_THROW(path_from_signs(bad, t, p), DomainError);
  auto other = p;
  other.H = 0.8;
  EXPECT_THROW(path_from_signs(constant_signs(8, 1), t, other), DomainError);
}

TEST(PathFromSigns, NonPositivePriceIsReported) {
  ModelParams p;
  p.sigma = 20.0;
  const auto t = build_kernel_table(4, p, {});
  try {
    path_from_signs(constant_signs(4, -1), t, p);
    FAIL() << "expected PriceError";
  } catch (const PriceError& e) {
    EXPECT_EQ(e.n(), 1);
  }
}

TEST(SimulatePath, Deterministic) {
  ModelParams p;
  const auto& t = table_for(64);
  const auto a = simulate_path(t, p, {42, 5});
  const auto b = simulate_path(t, p, {42, 5});
  EXPECT_EQ(a.signs.xi, b.signs.xi);
  EXPECT_EQ(a.Y, b.Y);
  EXPECT_EQ(a.S, b.S);
}

TEST(SimulatePaths, BatchedEqualsSingleForAnyWorkerCount) {
  ModelParams p;
  const auto& t = table_for(100);
  for (unsigned workers : {1u, 3u}) {
    std::vector<MarketPath> got(37);
    simulate_paths(t, p, 42, 5, 37, workers, [&](std::uint64_t index, const MarketPath& path) { got[index - 5] = path; });
    for (std::uint64_t k = 0; k < 37; ++k) {
      const auto ref = simulate_path(t, p, {42, 5 + k});
      ASSERT_EQ(got[k].signs.xi, ref.signs.xi);
      ASSERT_EQ(got[k].Y, ref.Y) << k;
      ASSERT_EQ(got[k].X, ref.X) << k;
      ASSERT_EQ(got[k].S, ref.S) << k;
    }
  }
}

TEST(SimulatePaths, HistoryVarianceMatchesKernel) {
  ModelParams p;
  const std::int64_t N = 256;
  const auto& t = table_for(N);
  const std::uint64_t paths = 10000;
  std::vector<double> y(paths);
  simulate_paths(t, p, 42, 0, paths, 0, [&](std::uint64_t index, const MarketPath& path) { y[index] = path.Y[N]; });
  std::vector<double> sq(paths);
  for (size_t k = 0; k < paths; ++k) sq[k] = y[k] * y[k];
  const auto second = estimate(sq);
  EXPECT_LT(std::fabs(second.mean - y_variance(N, t)), 3.0 * second.se);
  const auto first = estimate(y);
  EXPECT_LT(std::fabs(first.mean), 3.0 * first.se);
}

TEST(SimulatePaths, LinearFunctionalIsCentered) {
  ModelParams p;
  const auto& t = table_for(64);
  std::vector<double> values(20000);
  simulate_paths(t, p, 99, 0, values.size(), 0, [&](std::uint64_t index, const MarketPath& path) {
    double sum = 0.0;
    for (std::int64_t k = 1; k <= 64; ++k) sum += std::cos(0.3 * k) * path.signs.at(k);
    values[index] = sum;
  });
  const auto e = estimate(values);
  EXPECT_LT(std::fabs(e.mean), 3.0 * e.se);
}

TEST(Enumeration, CountAndOrder) {
  ModelParams p;
  const auto& t = table_for(3);
  std::vector<std::vector<std::int8_t>> seen;
  enumerate_paths(t, p, [&](const MarketPath& path) { seen.push_back(path.signs.xi); });
  ASSERT_EQ(seen.size(), 8u);
  EXPECT_EQ(seen.front(), (std::vector<std::int8_t>{-1, -1, -1}));
  EXPECT_EQ(seen[1], (std::vector<std::int8_t>{-1, -1, 1}));
  EXPECT_EQ(seen[4], (std::vector<std::int8_t>{1, -1, -1}));
  EXPECT_EQ(seen.back(), (std::vector<std::int8_t>{1, 1, 1}));
}

TEST(Enumeration, RefusesLargeHorizon) {
  const auto t = build_kernel_table(23, ModelParams{}, {});
  EXPECT_THROW(enumerate_paths(t, ModelParams{}, [](const MarketPath&) {}), TooLargeError);
}

TEST(Enumeration, InnovationUncorrelatedWithHistory) {
  // Y_{k-1} does not depend on xi_k, so both halves sum the same values in the
  // same order and the average of xi_k Y_{k-1} is exactly zero.
  ModelParams p;
  const auto& t = table_for(10);
  std::vector<double> plus(11, 0.0), minus(11, 0.0);
  enumerate_paths(t, p, [&](const MarketPath& path) {
    for (std::int64_t k = 2; k <= 10; ++k) {
      auto& side = path.signs.at(k) > 0 ? plus : minus;
      side[static_cast<size_t>(k)] += path.Y[static_cast<size_t>(k - 1)];
    }
  });
  for (std::int64_t k = 2; k <= 10; ++k) EXPECT_EQ(plus[static_cast<size_t>(k)] - minus[static_cast<size_t>(k)], 0.0) << k;
}

TEST(Enumeration, TerminalPriceMean) {
  ModelParams p;
  p.s0 = 2.0;
  const std::int64_t N = 12;
  const auto& t = table_for(N);
  const long double scale = std::pow(static_cast<long double>(N), static_cast<long double>(p.H));
  long double reference = 0.0L;
  CompensatedSum library;
  std::size_t count = 0;
  enumerate_paths(t, p, [&](const MarketPath& path) {
    long double product = 1.0L;
    for (std::int64_t n = 1; n <= N; ++n) {
      long double y = 0.0L;
      const auto row = t.row(n);
      for (size_t i = row.size(); i-- > 0;) y += static_cast<long double>(row[i]) * path.signs.xi[i];
      product *= 1.0L + (y + t.g(n) * path.signs.at(n)) / scale;
    }
    reference += product;
    library.add(path.S[N]);
    ++count;
  });
  ASSERT_EQ(count, 4096u);
  EXPECT_NEAR(library.value() / count, static_cast<double>(p.s0 * reference / count), 1e-12);
}

TEST(PathCsv, Format) {
  ModelParams p;
  const auto path = path_from_signs(constant_signs(4, 1), table_for(4), p);
  std::ostringstream out;
  write_path_csv(out, path);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,xi,Y,X,S");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,0,0,1");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}
