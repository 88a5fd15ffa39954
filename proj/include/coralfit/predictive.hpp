#pragma once

// Posterior predictive simulation, credible bands, observed quantiles and the
// coverage curve.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coralfit/likelihood.hpp"
#include "coralfit/random.hpp"

namespace coralfit {

inline constexpr std::array<double, 4> kBandLevels{50.0, 90.0, 95.0, 99.0};

/// Simulated datasets on a trajectory's visit times with equal-tailed bands.
struct PredictiveEnsemble {
  std::vector<double> times;
  std::size_t num_groups = 1;
  std::size_t num_draws = 0;
  /// sims[(d * T + j) * M + m]
  std::vector<double> sims;
  std::vector<double> levels;
  /// band_lo/hi[(l * T + j) * M + m]
  std::vector<double> band_lo;
  std::vector<double> band_hi;
  std::size_t redraws = 0;

  std::size_t num_times() const { return times.size(); }
  double sim(std::size_t d, std::size_t j, std::size_t m) const {
    return sims[(d * num_times() + j) * num_groups + m];
  }
  /// All simulated values at one time and group.
  std::vector<double> values(std::size_t j, std::size_t m) const;
  double lo(std::size_t l, std::size_t j, std::size_t m) const {
    return band_lo[(l * num_times() + j) * num_groups + m];
  }
  double hi(std::size_t l, std::size_t j, std::size_t m) const {
    return band_hi[(l * num_times() + j) * num_groups + m];
  }
};

/// Linear-interpolation (type 7) quantile of already sorted values.
double sorted_quantile(std::span<const double> sorted, double p);

/// Builds an ensemble from raw simulations and computes its bands.
PredictiveEnsemble make_ensemble(std::vector<double> times,
                                 std::size_t num_groups,
                                 std::vector<double> sims,
                                 std::span<const double> levels = kBandLevels);

/// n_draws simulated datasets, each from a parameter row picked uniformly from
/// `draws` (row-major, 4M free parameters per row) plus Gaussian noise with
/// the trajectory's variances. Rows whose solve fails are redrawn, up to
/// max_redraws in total.
PredictiveEnsemble simulate_predictive(std::span<const double> draws,
                                       const Trajectory& traj,
                                       std::size_t n_draws, Rng& rng,
                                       const IntegrateOptions& options = {},
                                       std::size_t max_redraws = 10000);

/// Empirical CDF at `obs` with ties counted half.
double observed_quantile(std::span<const double> sims, double obs);
/// Q matrix (time x group, row-major) for the trajectory's observations.
std::vector<double> observed_quantiles(const PredictiveEnsemble& ens,
                                       const Trajectory& traj);

/// Smallest equal-tailed credible level (in percent) containing a value at
/// quantile q.
double smallest_cri(double q);

/// Whether `obs` lies strictly inside the empirical equal-tailed beta%
/// interval of `sims`, decided on integer tail counts.
bool inside_empirical_interval(std::span<const double> sims, double obs,
                               int beta);

struct QuantileRecord {
  std::string trajectory;
  std::size_t group = 0;
  std::size_t visit = 0;
  double time = 0.0;
  double obs = 0.0;
  double q = 0.0;
  double beta = 0.0;
};

std::vector<QuantileRecord> quantile_records(const PredictiveEnsemble& ens,
                                             const Trajectory& traj);

struct CoverageCurve {
  std::vector<int> beta_grid;
  std::vector<double> p_hat;
  std::vector<double> s_hat;
  std::size_t num_obs = 0;
};

/// p_hat(B) = #{beta < B} / N over B = 1..99 with binomial standard errors.
CoverageCurve coverage_curve(std::span<const double> betas);

/// Betas of the records, optionally skipping each trajectory's first visit.
std::vector<double> coverage_betas(std::span<const QuantileRecord> records,
                                   bool exclude_initial = false);

}  // namespace coralfit
