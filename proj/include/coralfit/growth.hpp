#pragma once

// Biphasic Richards' growth dynamics for one or more coral groups sharing a
// carrying capacity.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coralfit/rkf45.hpp"

namespace coralfit {

/// Parameters of one coral group. The slow phase runs for `T_d` years after
/// the disturbance, with the growth rate scaled by `alpha_d`.
struct GroupParams {
  double alpha = 0.5;    // intrinsic rate, 1/years
  double gamma = 1.0;    // Richards shape; 1 is logistic, 0+ is Gompertz
  double T_d = 0.0;      // duration of the slow phase, years
  double alpha_d = 1.0;  // slow-phase rate scale factor

  void validate() const;
};

/// Per-group parameters plus the shared carrying capacity K (% area).
struct GrowthParams {
  std::vector<GroupParams> groups;
  double K = 100.0;

  std::size_t num_groups() const { return groups.size(); }
  void validate() const;

  /// Flat [alpha_1, gamma_1, T_d_1, alpha_d_1, ..., K].
  std::vector<double> flatten() const;
  static GrowthParams unflatten(std::span<const double> flat);
};

struct InitialState {
  double t0 = 0.0;
  std::vector<double> c0;

  void validate(const GrowthParams& params) const;
};

/// Mean cover evaluated on a time grid; cover is row-major (time x group).
struct SolutionGrid {
  std::vector<double> times;
  std::size_t num_groups = 0;
  std::vector<double> cover;

  double at(std::size_t time_index, std::size_t group) const {
    return cover[time_index * num_groups + group];
  }
  std::span<const double> row(std::size_t time_index) const {
    return {cover.data() + time_index * num_groups, num_groups};
  }
  std::vector<double> column(std::size_t group) const;
};

/// Per-group growth rate dC_m/dt. `slow_phase[m]` selects the alpha_d scaled
/// branch for group m (t <= t0 + T_d,m).
std::vector<double> rhs(std::span<const double> cover,
                        const GrowthParams& params,
                        std::span<const bool> slow_phase);

/// Phase flags for absolute time t.
std::vector<bool> slow_phase_flags(double t, double t0,
                                   const GrowthParams& params);

/// Closed-form single-group solution. The second branch restarts from the
/// cover reached at t0 + T_d so the curve is continuous for any t0.
SolutionGrid solve_analytic(const GrowthParams& params,
                            const InitialState& init,
                            std::span<const double> times);

/// Closed-form single-group cover at one time.
double analytic_cover(const GroupParams& group, double K, double c0,
                      double elapsed);

using IntegrateOptions = Rkf45Options;

/// RKF4(5) solution of the coupled system, restarted at every change point
/// and stepped exactly onto each requested output time.
SolutionGrid integrate(const GrowthParams& params, const InitialState& init,
                       std::span<const double> times,
                       const IntegrateOptions& options = {});

/// Analytic for one group, numerical otherwise.
SolutionGrid solve(const GrowthParams& params, const InitialState& init,
                   std::span<const double> times,
                   const IntegrateOptions& options = {});

}  // namespace coralfit
