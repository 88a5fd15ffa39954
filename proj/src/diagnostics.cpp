#include "coralfit/diagnostics.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <unsupported/Eigen/FFT>

namespace coralfit {
namespace {

void check_shape(const ChainSet& chains, std::size_t min_chains,
                 std::size_t min_length) {
  if (chains.size() < min_chains) {
    throw std::invalid_argument("diagnostics need at least " +
                                std::to_string(min_chains) + " chains");
  }
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) {
      throw std::invalid_argument("diagnostics need equal-length chains");
    }
  }
  if (n < min_length) {
    throw std::invalid_argument("diagnostics need chains of length >= " +
                                std::to_string(min_length));
  }
}

double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Sample variance (n - 1 denominator).
double variance(std::span<const double> x, double mu) {
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size() - 1);
}

double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

double upper_f_quantile(double p, double df1, double df2) {
  if (!(df2 < 1e7)) {
    boost::math::chi_squared_distribution<double> chi(df1);
    return boost::math::quantile(chi, p) / df1;
  }
  boost::math::fisher_f_distribution<double> f(df1, df2);
  return boost::math::quantile(f, p);
}

// Biased autocovariance at lags 0..n-1 via zero-padded FFT.
std::vector<double> autocovariance(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::size_t N = 1;
  while (N < 2 * n) N <<= 1;
  const double mu = mean(x);
  std::vector<double> padded(N, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[i] = x[i] - mu;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, padded);
  for (auto& f : freq) f = std::norm(f);
  std::vector<double> back;
  fft.inv(back, freq);
  back.resize(n);
  for (double& v : back) v /= static_cast<double>(n);
  return back;
}

}  // namespace

RHat psrf(const ChainSet& chains) {
  check_shape(chains, 2, 2);
  const double m = static_cast<double>(chains.size());
  const double n = static_cast<double>(chains.front().size());

  std::vector<double> xbar, s2, xbar_sq;
  for (const auto& c : chains) {
    const double mu = mean(c);
    xbar.push_back(mu);
    xbar_sq.push_back(mu * mu);
    s2.push_back(variance(c, mu));
  }
  const double w = mean(s2);
  if (!(w > 0.0)) {
    throw DegenerateChainError("r_hat: chains have zero within-chain variance");
  }
  const double muhat = mean(xbar);
  const double b = n * variance(xbar, muhat);

  const double var_w = variance(s2, w) / m;
  const double var_b = 2.0 * b * b / (m - 1.0);
  const double cov_wb =
      (n / m) * (covariance(s2, xbar_sq) - 2.0 * muhat * covariance(s2, xbar));

  const double V = (n - 1.0) / n * w + (1.0 + 1.0 / m) * b / n;
  const double var_V = ((n - 1.0) * (n - 1.0) * var_w +
                        (1.0 + 1.0 / m) * (1.0 + 1.0 / m) * var_b +
                        2.0 * (n - 1.0) * (1.0 + 1.0 / m) * cov_wb) /
                       (n * n);
  double df_adj = 1.0;
  if (var_V > 0.0) {
    const double df_V = 2.0 * V * V / var_V;
    df_adj = (df_V + 3.0) / (df_V + 1.0);
  }
  const double df_B = m - 1.0;
  const double df_W = var_w > 0.0 ? 2.0 * w * w / var_w
                                   : std::numeric_limits<double>::infinity();

  const double r2_fixed = (n - 1.0) / n;
  const double r2_random = (1.0 + 1.0 / m) * (1.0 / n) * (b / w);
  RHat out;
  out.point = std::sqrt(df_adj * (r2_fixed + r2_random));
  out.upper95 = std::sqrt(
      df_adj * (r2_fixed + upper_f_quantile(0.975, df_B, df_W) * r2_random));
  return out;
}

RHat r_hat(const ChainSet& chains) {
  check_shape(chains, 2, 10);
  const std::size_t n = chains.front().size();
  const std::size_t half = n / 2;
  ChainSet split;
  split.reserve(2 * chains.size());
  for (const auto& c : chains) {
    split.emplace_back(c.begin(), c.begin() + half);
    split.emplace_back(c.end() - half, c.end());
  }
  return psrf(split);
}

double ess(const ChainSet& chains) {
  check_shape(chains, 1, 4);
  const std::size_t n = chains.front().size();
  std::vector<double> rho(n, 0.0);
  for (const auto& c : chains) {
    const auto acov = autocovariance(c);
    if (!(acov[0] > 0.0)) {
      throw DegenerateChainError("ess: chain has zero variance");
    }
    for (std::size_t k = 0; k < n; ++k) rho[k] += acov[k] / acov[0];
  }
  for (double& r : rho) r /= static_cast<double>(chains.size());

  // Geyer: sum pairs Gamma_k = rho_2k + rho_2k+1 while positive, forced
  // monotone non-increasing.
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho[2 * k] + rho[2 * k + 1];
    if (pair < 0.0) break;
    pair = std::min(pair, prev);
    sum += pair;
    prev = pair;
  }
  // Antithetic chains can push tau below 1; cap ESS at N log10 N.
  const double total = static_cast<double>(n * chains.size());
  const double tau =
      std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(std::max(total, 10.0)));
  return total / tau;
}

ConvergenceReport gate(std::vector<ParameterDiagnostics> parameters,
                       const ConvergenceThresholds& thresholds,
                       std::size_t iterations_used) {
  ConvergenceReport report;
  report.iterations_used = iterations_used;
  report.pass = !parameters.empty();
  for (const auto& p : parameters) {
    if (!(p.r_hat <= thresholds.r_hat)) {
      std::ostringstream msg;
      msg << p.name << ": r_hat " << p.r_hat << " > " << thresholds.r_hat;
      report.failures.push_back(msg.str());
      report.pass = false;
    }
    if (!(p.ess >= thresholds.ess)) {
      std::ostringstream msg;
      msg << p.name << ": ess " << p.ess << " < " << thresholds.ess;
      report.failures.push_back(msg.str());
      report.pass = false;
    }
  }
  report.parameters = std::move(parameters);
  return report;
}

ParameterDiagnostics diagnose_parameter(const std::string& name,
                                        const ChainSet& chains) {
  ParameterDiagnostics d;
  d.name = name;
  try {
    const RHat r = r_hat(chains);
    d.r_hat = r.point;
    d.r_hat_upper95 = std::max(r.upper95, r.point);
    d.ess = ess(chains);
  } catch (const DegenerateChainError&) {
    d.r_hat = std::numeric_limits<double>::infinity();
    d.r_hat_upper95 = d.r_hat;
    d.ess = 0.0;
  }
  return d;
}

}  // namespace coralfit
