#include <algorithm>
#include <cmath>
#include <random>

#include "coralfit/diagnostics.hpp"
#include "doctest.h"

using namespace coralfit;

namespace {

ChainSet iid_chains(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  ChainSet out(m, std::vector<double>(n));
  for (auto& c : out)
    for (double& x : c) x = z(rng);
  return out;
}

ChainSet ar1_chains(std::size_t m, std::size_t n, double rho,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  ChainSet out(m, std::vector<double>(n));
  const double sd = std::sqrt(1.0 - rho * rho);
  for (auto& c : out) {
    double x = z(rng);
    for (double& v : c) {
      x = rho * x + sd * z(rng);
      v = x;
    }
  }
  return out;
}

// Textbook between/within ratio without the degrees-of-freedom correction.
double plain_psrf(const ChainSet& chains) {
  const double m = chains.size(), n = chains[0].size();
  std::vector<double> means;
  double W = 0.0;
  for (const auto& c : chains) {
    double mu = 0.0;
    for (double x : c) mu += x / n;
    double s = 0.0;
    for (double x : c) s += (x - mu) * (x - mu);
    W += s / (n - 1) / m;
    means.push_back(mu);
  }
  double grand = 0.0;
  for (double mu : means) grand += mu / m;
  double B = 0.0;
  for (double mu : means) B += n * (mu - grand) * (mu - grand) / (m - 1);
  const double V = (n - 1) / n * W + (1 + 1 / m) * B / n;
  return std::sqrt(V / W);
}

}  // namespace

TEST_CASE("r_hat and ess on iid chains") {
  const auto chains = iid_chains(4, 10000, 1);
  const auto r = r_hat(chains);
  CHECK(r.point >= 0.99);
  CHECK(r.point <= 1.01);
  CHECK(r.upper95 >= r.point);
  ChainSet halves;
  for (const auto& c : chains) {
    halves.emplace_back(c.begin(), c.begin() + 5000);
    halves.emplace_back(c.begin() + 5000, c.end());
  }
  CHECK(r.point == doctest::Approx(plain_psrf(halves)).epsilon(1e-3));
  const double e = ess(chains);
  CHECK(e >= 0.9 * 40000);
  CHECK(e <= 1.1 * 40000);
}

TEST_CASE("ess of AR(1) chains matches the integrated autocorrelation time") {
  const auto chains = ar1_chains(4, 50000, 0.9, 2);
  const double expected = 4 * 50000 / 19.0;
  CHECK(std::abs(ess(chains) - expected) <= 0.2 * expected);
}

TEST_CASE("ess follows kept draws under thinning") {
  const auto full = iid_chains(4, 100000, 3);
  ChainSet thinned(4);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 9; i < full[c].size(); i += 10)
      thinned[c].push_back(full[c][i]);
  const double e = ess(thinned);
  CHECK(e >= 0.9 * 40000);
  CHECK(e <= 1.1 * 40000);
}

TEST_CASE("separated chain means fail the gate") {
  auto chains = iid_chains(4, 2000, 4);
  for (double& x : chains[2]) x += 10.0;
  for (double& x : chains[3]) x += 10.0;
  const auto r = r_hat(chains);
  CHECK(r.point > 3.0);
  // split halves have the same between-chain structure
  ChainSet halves;
  for (const auto& c : chains) {
    halves.emplace_back(c.begin(), c.begin() + 1000);
    halves.emplace_back(c.begin() + 1000, c.end());
  }
  // the degrees-of-freedom correction only inflates the plain ratio
  CHECK(plain_psrf(halves) > 3.0);
  CHECK(r.point >= plain_psrf(halves));
  const auto d = diagnose_parameter("x", chains);
  CHECK_FALSE(gate({d}).pass);
}

TEST_CASE("constant chains are degenerate") {
  ChainSet chains(4, std::vector<double>(100, 3.0));
  CHECK_THROWS_AS(r_hat(chains), DegenerateChainError);
  CHECK_THROWS_AS(ess(chains), DegenerateChainError);
  const auto d = diagnose_parameter("x", chains);
  CHECK(std::isinf(d.r_hat));
  CHECK(d.ess == 0.0);
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(r_hat(ChainSet{{1, 2, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(r_hat(ChainSet{std::vector<double>(20, 0.0),
                                 std::vector<double>(21, 0.0)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(r_hat(ChainSet{std::vector<double>(5, 0.0),
                                 std::vector<double>(5, 0.0)}),
                  std::invalid_argument);
}

TEST_CASE("affine and reversal invariance") {
  auto chains = ar1_chains(4, 3000, 0.7, 5);
  for (double& x : chains[1]) x += 0.3;
  const auto r0 = r_hat(chains);
  const double e0 = ess(chains);
  for (auto [a, b] : {std::pair{2.5, -7.0}, std::pair{-0.01, 100.0}}) {
    ChainSet mapped = chains;
    for (auto& c : mapped)
      for (double& x : c) x = a * x + b;
    CHECK(r_hat(mapped).point == doctest::Approx(r0.point).epsilon(1e-9));
    CHECK(r_hat(mapped).upper95 == doctest::Approx(r0.upper95).epsilon(1e-9));
    CHECK(ess(mapped) == doctest::Approx(e0).epsilon(1e-9));
  }
  ChainSet reversed = chains;
  for (auto& c : reversed) std::reverse(c.begin(), c.end());
  CHECK(ess(reversed) == doctest::Approx(e0).epsilon(1e-9));
}

TEST_CASE("split r_hat of 2 chains equals psrf of the 4 halves") {
  auto chains = ar1_chains(2, 4000, 0.5, 6);
  ChainSet halves;
  for (const auto& c : chains) {
    halves.emplace_back(c.begin(), c.begin() + 2000);
    halves.emplace_back(c.begin() + 2000, c.end());
  }
  CHECK(r_hat(chains).point == psrf(halves).point);
  CHECK(r_hat(chains).upper95 == psrf(halves).upper95);
}

TEST_CASE("gate thresholds") {
  std::vector<ParameterDiagnostics> ok{{"alpha", 1.0, 1.0, 1000},
                                       {"gamma", 1.0, 1.0, 1000}};
  CHECK(gate(ok).pass);

  auto low = ok;
  low[1].ess = 199;
  const auto rep = gate(low);
  CHECK_FALSE(rep.pass);
  REQUIRE(rep.failures.size() == 1);
  CHECK(rep.failures[0].find("gamma") != std::string::npos);

  auto high = ok;
  high[0].r_hat = 1.1000001;
  CHECK_FALSE(gate(high).pass);
  CHECK(gate(high, {1.2, 200}).pass);

  CHECK_FALSE(gate({}).pass);
}

TEST_CASE("published convergence table rows pass the gate") {
  // Gannett Cay 2001 and Thetford 1994 rows of the reported table
  CHECK(gate({{"alpha", 1.02, 1.06, 429},
              {"alpha_d", 1.01, 1.02, 1092},
              {"gamma", 1.01, 1.04, 990},
              {"T_d", 1.02, 1.05, 227}})
            .pass);
  CHECK(gate({{"alpha", 1.00, 1.01, 969},
              {"alpha_d", 1.08, 1.15, 287},
              {"gamma", 1.00, 1.02, 1549},
              {"T_d", 1.01, 1.03, 589}})
            .pass);
}
