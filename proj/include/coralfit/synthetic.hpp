#pragma once

// Synthetic trajectories and survey files drawn from the growth model.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coralfit/growth.hpp"
#include "coralfit/likelihood.hpp"
#include "coralfit/random.hpp"
#include "coralfit/survey.hpp"

namespace coralfit {

/// Model solution plus Gaussian noise with standard deviation noise_sd[j]
/// (shared by all groups). The first visit is the initial condition and is
/// reported without noise; variances are noise_sd[j]^2.
Trajectory generate_synthetic(const GrowthParams& params,
                              const InitialState& init,
                              std::span<const double> times,
                              std::span<const double> noise_sd, Rng& rng,
                              const IntegrateOptions& options = {});

/// n transect values whose sample mean is `mean` and whose variance of the
/// mean is sd_of_mean^2, in random order.
std::vector<double> fabricate_transects(double mean, double sd_of_mean,
                                        std::size_t n, Rng& rng);

struct SiteSimulation {
  std::string reef = "SIM";
  std::string site = "1";
  GrowthParams params;
  std::vector<double> c0;
  double t0 = 2000.0;  // decimal years
  std::size_t visits = 8;  // after t0
  double interval = 1.0;
  /// Noise sd of each visit mean (none at t0); transects spread to match.
  double noise_sd = 1.0;
  /// Cover before the disturbance, per group; defaults to 0.8 K split evenly.
  std::vector<double> pre_cover;
  std::size_t transects = 5;
};

/// Transect records for one pre-disturbance visit, the disturbance visit and
/// `visits` recovery visits. Group 0 is written as Acroporidae and group 1 as
/// other hard coral (a single group is written as other hard coral); abiotic
/// cover is 100 - K where the transect leaves room for it.
std::vector<TransectRecord> simulate_survey(const SiteSimulation& sim, Rng& rng);

}  // namespace coralfit
