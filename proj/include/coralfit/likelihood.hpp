#pragma once

// Gaussian observation model, uniform priors, and the unnormalised
// log-posterior over an unconstrained sampling space.

#include <atomic>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "coralfit/growth.hpp"

namespace coralfit {

/// Variance-of-mean entries below this value (%^2) are raised to it.
inline constexpr double kVarianceFloor = 1e-4;
/// Observed initial covers below this value (%) are raised to it; the model
/// needs strictly positive initial cover.
inline constexpr double kMinInitialCover = 1e-2;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// One recovery trajectory. Row j of `obs`/`variance` holds the M group
/// values at times[j]; times[0] is the disturbance visit t0.
struct Trajectory {
  std::string id;
  std::string reef;
  std::string site;
  std::vector<double> times;
  std::size_t num_groups = 1;
  std::vector<double> obs;
  std::vector<double> variance;
  double K = 100.0;

  std::size_t num_times() const { return times.size(); }
  double t0() const { return times.front(); }
  double duration() const { return times.back() - times.front(); }
  double obs_at(std::size_t j, std::size_t m) const {
    return obs[j * num_groups + m];
  }
  double var_at(std::size_t j, std::size_t m) const {
    return variance[j * num_groups + m];
  }

  /// Initial condition fixed at the disturbance-visit observation.
  InitialState initial_state() const;

  /// Raises variances to kVarianceFloor.
  void apply_variance_floor();

  /// Structural checks plus the requirement that the fixed initial cover
  /// lies below K.
  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Independent uniform priors per group; T_d's upper bound is the trajectory
/// duration.
struct PriorSpec {
  Interval alpha{0.0, 1.0};
  Interval gamma{0.0, 2.0};
  Interval alpha_d{0.0, 0.9};
  double duration = 1.0;
  std::size_t num_groups = 1;

  Interval T_d() const { return {0.0, duration}; }
  /// Bounds in flat free-parameter order [alpha, gamma, T_d, alpha_d] x M.
  std::vector<Interval> bounds() const;
  std::size_t dimension() const { return 4 * num_groups; }
  void validate() const;

  static PriorSpec for_trajectory(const Trajectory& traj);
};

/// Free-parameter names in flat order, suffixed _A/_C for two groups.
std::vector<std::string> parameter_names(std::size_t num_groups);

/// Scaled-logit map from sampling space onto the prior box.
GrowthParams transform(std::span<const double> z, const PriorSpec& prior,
                       double K);
/// Inverse of transform; throws std::domain_error on or outside a bound.
std::vector<double> inverse_transform(const GrowthParams& params,
                                      const PriorSpec& prior);
/// log |d theta / d z|.
double log_jacobian(std::span<const double> z, const PriorSpec& prior);

/// Free parameters of `params` in flat order (K excluded).
std::vector<double> free_parameters(const GrowthParams& params);
GrowthParams from_free_parameters(std::span<const double> theta, double K);

double log_likelihood(const Trajectory& traj, const SolutionGrid& solution);

/// Sum of log uniform densities; kNegInf outside the support.
double log_prior(const GrowthParams& params, const PriorSpec& prior);

/// Unnormalised log-posterior in sampling space. Reentrant; solver failures
/// evaluate to kNegInf and are counted.
class PosteriorTarget {
 public:
  PosteriorTarget(Trajectory traj, PriorSpec prior,
                  IntegrateOptions options = {});

  double operator()(std::span<const double> z) const;
  /// log-likelihood + log-prior at theta (no Jacobian).
  double log_posterior_theta(const GrowthParams& params) const;

  const Trajectory& trajectory() const { return traj_; }
  const PriorSpec& prior() const { return prior_; }
  std::size_t dimension() const { return prior_.dimension(); }
  std::size_t solver_failures() const { return failures_.load(); }
  GrowthParams to_params(std::span<const double> z) const {
    return transform(z, prior_, traj_.K);
  }

 private:
  Trajectory traj_;
  PriorSpec prior_;
  IntegrateOptions options_;
  InitialState init_;
  mutable std::atomic<std::size_t> failures_{0};
};

}  // namespace coralfit
