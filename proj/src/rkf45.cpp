#include "coralfit/rkf45.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace coralfit {
namespace {

// Fehlberg tableau.
constexpr double c2 = 1.0 / 4.0, c3 = 3.0 / 8.0, c4 = 12.0 / 13.0,
                 c6 = 1.0 / 2.0;
constexpr double a21 = 1.0 / 4.0;
constexpr double a31 = 3.0 / 32.0, a32 = 9.0 / 32.0;
constexpr double a41 = 1932.0 / 2197.0, a42 = -7200.0 / 2197.0,
                 a43 = 7296.0 / 2197.0;
constexpr double a51 = 439.0 / 216.0, a52 = -8.0, a53 = 3680.0 / 513.0,
                 a54 = -845.0 / 4104.0;
constexpr double a61 = -8.0 / 27.0, a62 = 2.0, a63 = -3544.0 / 2565.0,
                 a64 = 1859.0 / 4104.0, a65 = -11.0 / 40.0;
constexpr double b1 = 16.0 / 135.0, b3 = 6656.0 / 12825.0,
                 b4 = 28561.0 / 56430.0, b5 = -9.0 / 50.0, b6 = 2.0 / 55.0;
// fifth minus fourth order weights
constexpr double e1 = b1 - 25.0 / 216.0, e3 = b3 - 1408.0 / 2565.0,
                 e4 = b4 - 2197.0 / 4104.0, e5 = b5 + 1.0 / 5.0, e6 = b6;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

void rkf45_integrate(
    const OdeFunction& f, double t_start, double t_end, std::vector<double>& y,
    std::span<const double> stops,
    const std::function<void(double, std::span<const double>)>& on_stop,
    const Rkf45Options& options, Rkf45Stats* stats) {
  if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0)) {
    throw std::invalid_argument("rkf45: tolerances must be positive");
  }
  if (t_end < t_start) {
    throw std::invalid_argument("rkf45: t_end precedes t_start");
  }
  const std::size_t n = y.size();
  std::array<std::vector<double>, 6> k;
  for (auto& ki : k) ki.assign(n, 0.0);
  std::vector<double> tmp(n), y5(n);

  Rkf45Stats local;
  Rkf45Stats& st = stats ? *stats : local;

  std::size_t next_stop = 0;
  while (next_stop < stops.size() && stops[next_stop] <= t_start) {
    if (stops[next_stop] == t_start && on_stop) on_stop(t_start, y);
    ++next_stop;
  }

  double t = t_start;
  double h = std::min(options.initial_step, options.max_step);
  std::size_t steps = 0;

  while (t < t_end) {
    const double target = next_stop < stops.size()
                              ? std::min(stops[next_stop], t_end)
                              : t_end;
    double h_try = std::min(h, options.max_step);
    bool landing = false;
    // Absorb a remainder that would leave a sliver below the step floor.
    if (t + h_try >= target || target - (t + h_try) < options.min_step) {
      h_try = target - t;
      landing = true;
    }

    if (++steps > options.max_steps) {
      throw SolverError("rkf45: exceeded maximum number of steps");
    }

    f(t, y, k[0]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h_try * a21 * k[0][i];
    f(t + c2 * h_try, tmp, k[1]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h_try * (a31 * k[0][i] + a32 * k[1][i]);
    f(t + c3 * h_try, tmp, k[2]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h_try * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
    f(t + c4 * h_try, tmp, k[3]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h_try * (a51 * k[0][i] + a52 * k[1][i] +
                               a53 * k[2][i] + a54 * k[3][i]);
    f(t + h_try, tmp, k[4]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h_try * (a61 * k[0][i] + a62 * k[1][i] +
                               a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i]);
    f(t + c6 * h_try, tmp, k[5]);
    st.evaluations += 6;

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y5[i] = y[i] + h_try * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] +
                              b5 * k[4][i] + b6 * k[5][i]);
      const double e = h_try * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] +
                                e5 * k[4][i] + e6 * k[5][i]);
      const double scale =
          options.abs_tol +
          options.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / scale);
    }

    if (!std::isfinite(err) || !all_finite(y5)) {
      std::ostringstream msg;
      msg << "rkf45: non-finite state at t = " << t << " with step " << h_try;
      throw SolverError(msg.str());
    }

    if (err <= 1.0) {
      t = landing ? target : t + h_try;
      y.swap(y5);
      ++st.accepted;
      const double grow =
          err == 0.0 ? 5.0
                     : std::clamp(options.safety * std::pow(err, -0.2), 0.2,
                                  5.0);
      // A landing step is shortened to hit its target; it must not shrink
      // the step proposal unless the error estimate asks for it.
      h = (landing && grow >= 1.0) ? std::max(h, h_try * grow) : h_try * grow;
      while (next_stop < stops.size() && stops[next_stop] <= t) {
        if (on_stop) on_stop(stops[next_stop], y);
        ++next_stop;
      }
    } else {
      ++st.rejected;
      h = h_try * std::max(0.1, options.safety * std::pow(err, -0.25));
      if (h < options.min_step) {
        std::ostringstream msg;
        msg << "rkf45: step size underflow (" << h << ") at t = " << t
            << "; the problem may be stiff";
        throw SolverError(msg.str());
      }
    }
  }
}

}  // namespace coralfit
