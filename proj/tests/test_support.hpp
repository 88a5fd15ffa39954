#pragma once

// Shared generators and reference solutions for the test suites. Nothing in
// here calls into the growth or likelihood implementations.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "coralfit/growth.hpp"

namespace coralfit::testing {

inline GroupParams random_group(std::mt19937_64& rng, double max_td = 5.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GroupParams g;
  g.alpha = 0.05 + 0.95 * u(rng);
  g.gamma = 0.05 + 1.95 * u(rng);
  g.T_d = max_td * u(rng);
  g.alpha_d = 0.02 + 0.88 * u(rng);
  return g;
}

struct RandomCase {
  GrowthParams params;
  InitialState init;
};

inline RandomCase random_case(std::mt19937_64& rng, std::size_t groups) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomCase c;
  c.params.K = 40.0 + 60.0 * u(rng);
  for (std::size_t m = 0; m < groups; ++m) {
    c.params.groups.push_back(random_group(rng));
  }
  c.init.t0 = 1990.0 + 20.0 * u(rng);
  for (std::size_t m = 0; m < groups; ++m) {
    c.init.c0.push_back((0.005 + 0.2 * u(rng)) * c.params.K / groups);
  }
  return c;
}

/// Textbook logistic solution.
inline double logistic(double K, double c0, double r, double t) {
  const double e = std::exp(r * t);
  return K * c0 * e / (K + c0 * (e - 1.0));
}

/// Gompertz solution K exp(log(c0/K) e^{-r t}).
inline double gompertz(double K, double c0, double r, double t) {
  return K * std::exp(std::log(c0 / K) * std::exp(-r * t));
}

/// Direct transcription of the coupled biphasic system, used by the
/// fixed-step reference integrator.
inline std::vector<double> reference_rates(double t, double t0,
                                           const std::vector<double>& c,
                                           const GrowthParams& p) {
  double total = 0.0;
  for (double x : c) total += x;
  std::vector<double> out(c.size());
  for (std::size_t m = 0; m < c.size(); ++m) {
    const auto& g = p.groups[m];
    const double factor = (t <= t0 + g.T_d) ? g.alpha_d : 1.0;
    out[m] = factor * g.alpha / g.gamma * c[m] *
             (1.0 - std::pow(total / p.K, g.gamma));
  }
  return out;
}

/// Classical RK4 with fixed step h. Phase is taken from the step midpoint, so
/// change points must fall on multiples of h relative to t0.
inline std::vector<std::vector<double>> reference_rk4(
    const GrowthParams& p, const InitialState& init,
    const std::vector<double>& times, double h) {
  std::vector<double> y = init.c0;
  double t = init.t0;
  std::vector<std::vector<double>> out;
  auto axpy = [](const std::vector<double>& a, double s,
                 const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  for (double target : times) {
    while (t < target - 1e-12) {
      const double step = std::min(h, target - t);
      const double mid = t + 0.5 * step;
      auto f = [&](const std::vector<double>& c) {
        return reference_rates(mid, init.t0, c, p);
      };
      auto k1 = f(y);
      auto k2 = f(axpy(y, 0.5 * step, k1));
      auto k3 = f(axpy(y, 0.5 * step, k2));
      auto k4 = f(axpy(y, step, k3));
      for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += step / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      }
      t += step;
    }
    out.push_back(y);
  }
  return out;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace coralfit::testing
