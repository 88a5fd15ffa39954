#pragma once

// Convergence diagnostics: potential scale reduction factor, effective sample
// size, and the pass/fail gate.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coralfit {

/// Raised when chains carry no within-chain variation.
class DegenerateChainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

using ChainSet = std::vector<std::vector<double>>;

struct RHat {
  double point = 1.0;
  double upper95 = 1.0;
};

/// Classical potential scale reduction factor over the given chains, with the
/// degrees-of-freedom correction and an F-based upper 97.5% quantile bound.
RHat psrf(const ChainSet& chains);

/// Split-chain version: every chain is halved (dropping the middle draw of an
/// odd-length chain) and passed to psrf as twice as many chains.
RHat r_hat(const ChainSet& chains);

/// Pooled effective sample size with per-chain autocorrelations averaged and
/// summed under Geyer's initial monotone positive sequence rule.
double ess(const ChainSet& chains);

struct ConvergenceThresholds {
  double r_hat = 1.1;
  double ess = 200.0;
};

struct ParameterDiagnostics {
  std::string name;
  double r_hat = 1.0;
  double r_hat_upper95 = 1.0;
  double ess = 0.0;
};

struct ConvergenceReport {
  std::vector<ParameterDiagnostics> parameters;
  bool pass = false;
  std::vector<std::string> failures;
  std::size_t iterations_used = 0;
};

/// pass iff every parameter has r_hat <= threshold and ess >= threshold.
ConvergenceReport gate(std::vector<ParameterDiagnostics> parameters,
                       const ConvergenceThresholds& thresholds = {},
                       std::size_t iterations_used = 0);

/// Diagnostics for one parameter. Degenerate chains report r_hat = +inf and
/// ess = 0 so the gate fails instead of throwing.
ParameterDiagnostics diagnose_parameter(const std::string& name,
                                        const ChainSet& chains);

}  // namespace coralfit
