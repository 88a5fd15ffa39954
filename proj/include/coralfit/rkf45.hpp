#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace coralfit {

/// Raised when the adaptive integrator cannot make progress or produces a
/// non-finite state.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// dy/dt = f(t, y), written into dydt.
using OdeFunction = std::function<void(double t, std::span<const double> y,
                                       std::span<double> dydt)>;

struct Rkf45Options {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double initial_step = 1e-3;
  double min_step = 1e-12;
  double max_step = 1.0;
  double safety = 0.9;
  std::size_t max_steps = 1'000'000;
};

struct Rkf45Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Fehlberg 4(5) embedded pair with local extrapolation. Advances `y` from
/// `t_start` to `t_end` without stepping past `t_end`; every time listed in
/// `stops` (inside the interval, sorted) is hit exactly and reported through
/// `on_stop`. Throws SolverError on step underflow or a non-finite state.
void rkf45_integrate(const OdeFunction& f, double t_start, double t_end,
                     std::vector<double>& y, std::span<const double> stops,
                     const std::function<void(double, std::span<const double>)>&
                         on_stop,
                     const Rkf45Options& options, Rkf45Stats* stats = nullptr);

}  // namespace coralfit
