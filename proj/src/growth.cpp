#include "coralfit/growth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace coralfit {
namespace {

constexpr double kCapacityRoundoff = 1e-12;

// log(1 + exp(x)) without overflow.
double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Richards' growth from cover c over elapsed time tau at the given rate,
// evaluated through u = (K/C)^gamma - 1 in log space so large gamma*log(K/c)
// cannot overflow and tiny gamma keeps full precision.
double richards_cover(double K, double c, double gamma, double rate,
                      double tau) {
  if (c == K || tau == 0.0) return c;
  const double g = gamma * std::log(K / c);
  if (g > 0.0) {
    const double log_u0 = g > 30.0 ? g + std::log1p(-std::exp(-g))
                                   : std::log(std::expm1(g));
    const double log_u = log_u0 - rate * tau;
    return K * std::exp(-log1p_exp(log_u) / gamma);
  }
  // c > K: u0 in (-1, 0), decay towards K.
  const double u = std::expm1(g) * std::exp(-rate * tau);
  return K * std::exp(-std::log1p(u) / gamma);
}

// Unchecked per-group rates for the integrator; trial stage states may leave
// the physical domain.
void rates_into(std::span<const double> cover, const GrowthParams& params,
                const std::vector<bool>& slow, std::span<double> out) {
  const double total = std::accumulate(cover.begin(), cover.end(), 0.0);
  const double log_ratio = std::log(total / params.K);
  const bool at_capacity = std::abs(total - params.K) <= kCapacityRoundoff;
  for (std::size_t m = 0; m < params.groups.size(); ++m) {
    const GroupParams& g = params.groups[m];
    // (1 - (S/K)^gamma) / gamma
    double bracket = -std::expm1(g.gamma * log_ratio) / g.gamma;
    if (at_capacity) bracket = std::max(bracket, 0.0);
    const double scale = slow[m] ? g.alpha_d : 1.0;
    out[m] = scale * g.alpha * cover[m] * bracket;
  }
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::domain_error(std::string(what) + " must be finite");
  }
}

}  // namespace

void GroupParams::validate() const {
  require_finite(alpha, "alpha");
  require_finite(gamma, "gamma");
  require_finite(T_d, "T_d");
  require_finite(alpha_d, "alpha_d");
  if (!(alpha > 0.0)) throw std::domain_error("alpha must be positive");
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  if (!(T_d >= 0.0)) throw std::domain_error("T_d must be non-negative");
  if (!(alpha_d > 0.0 && alpha_d <= 1.0)) {
    throw std::domain_error("alpha_d must lie in (0, 1]");
  }
}

void GrowthParams::validate() const {
  if (groups.empty()) throw std::domain_error("at least one group required");
  require_finite(K, "K");
  if (!(K > 0.0 && K <= 100.0)) throw std::domain_error("K must lie in (0, 100]");
  for (const auto& g : groups) g.validate();
}

std::vector<double> GrowthParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(4 * groups.size() + 1);
  for (const auto& g : groups) {
    flat.insert(flat.end(), {g.alpha, g.gamma, g.T_d, g.alpha_d});
  }
  flat.push_back(K);
  return flat;
}

GrowthParams GrowthParams::unflatten(std::span<const double> flat) {
  if (flat.size() < 5 || (flat.size() - 1) % 4 != 0) {
    throw std::invalid_argument("flat parameter vector must have 4M + 1 entries");
  }
  GrowthParams p;
  const std::size_t M = (flat.size() - 1) / 4;
  for (std::size_t m = 0; m < M; ++m) {
    p.groups.push_back(
        {flat[4 * m], flat[4 * m + 1], flat[4 * m + 2], flat[4 * m + 3]});
  }
  p.K = flat.back();
  return p;
}

void InitialState::validate(const GrowthParams& params) const {
  require_finite(t0, "t0");
  if (c0.size() != params.num_groups()) {
    throw std::domain_error("initial cover count does not match group count");
  }
  double total = 0.0;
  for (double c : c0) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::domain_error("initial covers must be positive");
    }
    total += c;
  }
  if (total > params.K + kCapacityRoundoff) {
    std::ostringstream msg;
    msg << "initial cover " << total << " exceeds carrying capacity "
        << params.K;
    throw std::domain_error(msg.str());
  }
}

std::vector<double> SolutionGrid::column(std::size_t group) const {
  std::vector<double> out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) out[j] = at(j, group);
  return out;
}

std::vector<bool> slow_phase_flags(double t, double t0,
                                   const GrowthParams& params) {
  std::vector<bool> slow(params.num_groups());
  for (std::size_t m = 0; m < slow.size(); ++m) {
    slow[m] = t <= t0 + params.groups[m].T_d;
  }
  return slow;
}

std::vector<double> rhs(std::span<const double> cover,
                        const GrowthParams& params,
                        std::span<const bool> slow_phase) {
  if (!(params.K > 0.0)) throw std::domain_error("K must be positive");
  if (cover.size() != params.num_groups() ||
      slow_phase.size() != params.num_groups()) {
    throw std::invalid_argument("rhs: dimension mismatch");
  }
  for (double c : cover) {
    if (!(c > 0.0)) throw std::domain_error("rhs: cover must be positive");
  }
  std::vector<double> out(cover.size());
  rates_into(cover, params,
             std::vector<bool>(slow_phase.begin(), slow_phase.end()), out);
  return out;
}

double analytic_cover(const GroupParams& group, double K, double c0,
                      double elapsed) {
  const double slow_rate = group.alpha_d * group.alpha;
  if (elapsed <= group.T_d) {
    return richards_cover(K, c0, group.gamma, slow_rate, elapsed);
  }
  const double c_d = richards_cover(K, c0, group.gamma, slow_rate, group.T_d);
  return richards_cover(K, c_d, group.gamma, group.alpha,
                        elapsed - group.T_d);
}

namespace {

void check_times(std::span<const double> times, double t0) {
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!std::isfinite(times[j]) || times[j] < t0) {
      throw std::domain_error("output times must be finite and >= t0");
    }
    if (j > 0 && !(times[j] > times[j - 1])) {
      throw std::invalid_argument("output times must be strictly increasing");
    }
  }
}

}  // namespace

SolutionGrid solve_analytic(const GrowthParams& params,
                            const InitialState& init,
                            std::span<const double> times) {
  if (params.num_groups() != 1) {
    throw std::domain_error("closed-form solution requires a single group");
  }
  params.validate();
  init.validate(params);
  check_times(times, init.t0);

  SolutionGrid grid;
  grid.times.assign(times.begin(), times.end());
  grid.num_groups = 1;
  grid.cover.resize(times.size());
  const GroupParams& g = params.groups.front();
  for (std::size_t j = 0; j < times.size(); ++j) {
    grid.cover[j] = analytic_cover(g, params.K, init.c0.front(),
                                   times[j] - init.t0);
  }
  return grid;
}

SolutionGrid integrate(const GrowthParams& params, const InitialState& init,
                       std::span<const double> times,
                       const IntegrateOptions& options) {
  params.validate();
  init.validate(params);
  check_times(times, init.t0);

  const std::size_t M = params.num_groups();
  SolutionGrid grid;
  grid.times.assign(times.begin(), times.end());
  grid.num_groups = M;
  grid.cover.assign(times.size() * M, 0.0);
  if (times.empty()) return grid;

  const double t0 = init.t0;
  const double t_end = times.back();

  std::vector<double> bounds{t0};
  for (const auto& g : params.groups) {
    const double change = t0 + g.T_d;
    if (change > t0 && change < t_end) bounds.push_back(change);
  }
  std::sort(bounds.begin() + 1, bounds.end());
  bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
  bounds.push_back(t_end);

  std::vector<double> y = init.c0;
  std::size_t row = 0;
  auto record = [&](double, std::span<const double> state) {
    std::copy(state.begin(), state.end(), grid.cover.begin() + row * M);
    ++row;
  };

  auto first = times.begin();
  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    const double a = bounds[s];
    const double b = bounds[s + 1];
    const std::vector<bool> slow = slow_phase_flags(0.5 * (a + b), t0, params);
    OdeFunction f = [&params, &slow](double, std::span<const double> c,
                                     std::span<double> dc) {
      rates_into(c, params, slow, dc);
    };
    auto last = std::upper_bound(first, times.end(), b);
    rkf45_integrate(f, a, b, y, std::span<const double>(first, last), record,
                    options);
    first = last;
  }
  // Every time equal to t0 when t_end == t0.
  for (; first != times.end(); ++first) record(*first, y);

  for (double c : grid.cover) {
    if (!std::isfinite(c)) throw SolverError("integrate: non-finite cover");
  }
  return grid;
}

SolutionGrid solve(const GrowthParams& params, const InitialState& init,
                   std::span<const double> times,
                   const IntegrateOptions& options) {
  if (params.num_groups() == 1) return solve_analytic(params, init, times);
  return integrate(params, init, times, options);
}

}  // namespace coralfit
