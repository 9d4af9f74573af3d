#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fracbin/ledger.hpp"
#include "fracbin/market.hpp"

using namespace fracbin;

namespace {

std::vector<double> ramp_prices(std::int64_t N) {
  std::vector<double> S(static_cast<size_t>(N + 1));
  for (std::int64_t n = 0; n <= N; ++n) S[static_cast<size_t>(n)] = 1.0 + 0.1 * n + 0.05 * std::sin(n);
  return S;
}

// Random adapted strategy: phi_k depends on xi_1..xi_k through the running sum;
// no holdings before time 0 and liquidated at N.
StockPositionProcess random_strategy(const MarketPath& path, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const double a = coef(gen), b = coef(gen), c = coef(gen), d = coef(gen);
  const std::int64_t N = path.N();
  auto phi = StockPositionProcess::zeros(N);
  double running = 0.0;
  for (std::int64_t k = 0; k < N; ++k) {
    running += path.signs.at(k);
    phi.at(k) = d + a * std::tanh(b * running) + c * path.X[static_cast<size_t>(k)];
  }
  return phi;
}

// Independent cash-account bookkeeping in long double.
std::vector<long double> reference_values(const StockPositionProcess& phi, const std::vector<double>& S, double lambda) {
  std::vector<long double> out;
  long double cash = 0.0L;
  long double held = 0.0L;
  for (size_t n = 0; n < S.size(); ++n) {
    const long double target = phi.at(static_cast<std::int64_t>(n));
    const long double trade = target - held;
    if (trade > 0) cash -= trade * S[n];
    else cash += (1.0L - lambda) * (-trade) * S[n];
    held = target;
    out.push_back(held >= 0 ? cash + (1.0L - lambda) * held * S[n] : cash + held * S[n]);
  }
  return out;
}

}  // namespace

TEST(BondPositions, NoTradesKeepInitialBond) {
  const auto S = ramp_prices(10);
  const auto phi0 = derive_bond_positions(StockPositionProcess::zeros(10), S, 0.2, 3.0);
  ASSERT_EQ(phi0.size(), 12u);
  for (double v : phi0) EXPECT_EQ(v, 3.0);
}

TEST(BondPositions, RoundTripTelescopes) {
  const std::int64_t N = 10;
  const auto S = ramp_prices(N);
  auto phi = StockPositionProcess::zeros(N);
  for (std::int64_t k = 0; k < N; ++k) phi.at(k) = 1.0;
  const auto frictionless = derive_bond_positions(phi, S, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(frictionless.back(), 0.5 - S[0] + S[N]);
  const auto taxed = derive_bond_positions(phi, S, 0.1, 0.5);
  EXPECT_DOUBLE_EQ(taxed.back(), 0.5 - S[0] + 0.9 * S[N]);
}

TEST(BondPositions, RejectsBadInputs) {
  const auto S = ramp_prices(5);
  EXPECT_THROW(derive_bond_positions(StockPositionProcess::zeros(4), S, 0.0, 0.0), ShapeError);
  EXPECT_THROW(derive_bond_positions(StockPositionProcess::zeros(5), S, 1.0, 0.0), DomainError);
  EXPECT_THROW(derive_bond_positions(StockPositionProcess::zeros(5), S, -0.1, 0.0), DomainError);
}

TEST(LiquidationValues, SimplePortfolios) {
  const std::int64_t N = 6;
  const auto S = ramp_prices(N);
  const auto flat = liquidation_values(std::vector<double>(N + 2, 2.5), StockPositionProcess::zeros(N), S, 0.3);
  for (double v : flat) EXPECT_EQ(v, 2.5);

  auto longs = StockPositionProcess::zeros(N);
  auto shorts = StockPositionProcess::zeros(N);
  for (std::int64_t k = -1; k <= N; ++k) {
    longs.at(k) = 1.0;
    shorts.at(k) = -1.0;
  }
  const std::vector<double> no_bond(N + 2, 0.0);
  const auto long_values = liquidation_values(no_bond, longs, S, 0.0);
  const auto short_values = liquidation_values(no_bond, shorts, S, 0.4);
  for (std::int64_t n = 0; n <= N; ++n) {
    EXPECT_EQ(long_values[static_cast<size_t>(n)], S[static_cast<size_t>(n)]);
    EXPECT_EQ(short_values[static_cast<size_t>(n)], -S[static_cast<size_t>(n)]);
  }
}

TEST(FrictionDecomposition, FrictionlessIsGains) {
  const std::int64_t N = 20;
  const auto S = ramp_prices(N);
  auto phi = StockPositionProcess::zeros(N);
  for (std::int64_t k = 0; k < N; ++k) phi.at(k) = std::cos(0.7 * k);
  const auto d = friction_decomposition(phi, S, 0.0);
  double gains = 0.0;
  EXPECT_EQ(d.value[0], 0.0);
  for (std::int64_t n = 1; n <= N; ++n) {
    gains += phi.at(n - 1) * (S[static_cast<size_t>(n)] - S[static_cast<size_t>(n - 1)]);
    EXPECT_EQ(d.value[static_cast<size_t>(n)], gains);
  }
}

TEST(FrictionDecomposition, IncreasingLongOnlyHasNoSaleTerms) {
  const std::int64_t N = 15;
  const auto S = ramp_prices(N);
  auto phi = StockPositionProcess::zeros(N);
  for (std::int64_t k = 0; k <= N; ++k) phi.at(k) = 0.5 * k;
  const auto d = friction_decomposition(phi, S, 0.05);
  for (std::int64_t n = 0; n <= N; ++n) {
    EXPECT_EQ(d.Vs2[static_cast<size_t>(n)], 0.0);
    EXPECT_EQ(d.Vs3[static_cast<size_t>(n)], 0.0);
  }
  EXPECT_GT(d.Vs1.back(), 0.0);
}

TEST(FrictionDecomposition, InitialValue) {
  const std::int64_t N = 4;
  auto S = ramp_prices(N);
  auto phi = StockPositionProcess::zeros(N);
  phi.at(0) = -2.0;
  phi.at(1) = 1.0;
  const auto ledger = run_ledger(phi, S, 0.25);
  EXPECT_DOUBLE_EQ(ledger.value[0], -0.25 * 2.0 * S[0]);
  EXPECT_DOUBLE_EQ(ledger.decomposition.V0, -0.25 * 2.0 * S[0]);
}

TEST(FrictionDecomposition, RequiresZeroEndowment) {
  auto phi = StockPositionProcess::zeros(3);
  phi.at(-1) = 1.0;
  EXPECT_THROW(friction_decomposition(phi, ramp_prices(3), 0.1), DomainError);
}

TEST(Ledger, RandomAdaptedStrategiesSatisfyTheIdentity) {
  ModelParams p;
  const std::int64_t N = 64;
  const auto table = build_kernel_table(N, p, {});
  std::mt19937_64 gen(7);
  const double lambdas[] = {0.0, 0.01, 0.3};
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    const auto path = simulate_path(table, p, {2024, trial});
    const auto phi = random_strategy(path, gen);
    const double lambda = lambdas[trial % 3];
    const auto ledger = run_ledger(phi, path.S, lambda);
    const double V0 = -lambda * std::fabs(phi.at(0)) * p.s0;
    ASSERT_EQ(ledger.decomposition.value[0], V0);
    ASSERT_NEAR(ledger.value[0], V0, 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(phi.at(0)) * p.s0);
    worst = std::max(worst, ledger.identity_error);
    const auto reference = reference_values(phi, path.S, lambda);
    for (std::int64_t n = 0; n <= N; ++n) {
      const auto un = static_cast<size_t>(n);
      const double scale = std::max(1.0, std::fabs(static_cast<double>(reference[un])));
      ASSERT_NEAR(ledger.value[un], static_cast<double>(reference[un]), 1e-9 * scale) << trial << " " << n;
      ASSERT_NEAR(ledger.decomposition.value[un], static_cast<double>(reference[un]), 1e-9 * scale) << trial << " " << n;
    }
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Ledger, TerminalValueNonincreasingInLambda) {
  ModelParams p;
  const std::int64_t N = 64;
  const auto table = build_kernel_table(N, p, {});
  std::mt19937_64 gen(11);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto path = simulate_path(table, p, {5, trial});
    const auto phi = random_strategy(path, gen);
    double previous = run_ledger(phi, path.S, 0.0).value.back();
    for (double lambda = 0.05; lambda < 0.95; lambda += 0.05) {
      const double value = run_ledger(phi, path.S, lambda).value.back();
      ASSERT_LE(value, previous + 1e-12 * std::fabs(previous)) << trial << " " << lambda;
      previous = value;
    }
  }
}

TEST(Ledger, CsvLayout) {
  const std::int64_t N = 3;
  const auto S = ramp_prices(N);
  auto phi = StockPositionProcess::zeros(N);
  phi.at(1) = 1.0;
  const auto ledger = run_ledger(phi, S, 0.1);
  std::ostringstream out;
  write_ledger_csv(out, phi, S, ledger);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,phi0,phi1,S,V_lambda,Vs1,Vs2,Vs3");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0,0,1,0,0,0,0");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, N + 1);
}
