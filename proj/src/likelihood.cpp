#include "coralfit/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace coralfit {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// lo + (hi - lo) * logistic(z), evaluated from the nearer bound.
double scaled_logistic(double z, const Interval& b) {
  if (z <= 0.0) return b.lo + b.width() / (1.0 + std::exp(-z));
  return b.hi - b.width() / (1.0 + std::exp(z));
}

}  // namespace

InitialState Trajectory::initial_state() const {
  InitialState init;
  init.t0 = t0();
  init.c0.resize(num_groups);
  for (std::size_t m = 0; m < num_groups; ++m) {
    init.c0[m] = std::max(obs_at(0, m), kMinInitialCover);
  }
  return init;
}

void Trajectory::apply_variance_floor() {
  for (double& v : variance) v = std::max(v, kVarianceFloor);
}

void Trajectory::validate() const {
  if (num_groups == 0) throw std::invalid_argument("trajectory has no groups");
  if (times.size() < 2) {
    throw std::invalid_argument("trajectory " + id + " needs at least two times");
  }
  if (obs.size() != times.size() * num_groups ||
      variance.size() != times.size() * num_groups) {
    throw std::invalid_argument("trajectory " + id + ": dimension mismatch");
  }
  for (std::size_t j = 1; j < times.size(); ++j) {
    if (!(times[j] > times[j - 1])) {
      throw std::invalid_argument("trajectory " + id +
                                  ": times must be strictly increasing");
    }
  }
  for (double x : obs) {
    if (!(x >= 0.0 && x <= 100.0)) {
      throw std::invalid_argument("trajectory " + id +
                                  ": observations must lie in [0, 100]");
    }
  }
  for (double v : variance) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("trajectory " + id +
                                  ": variances must be positive and finite");
    }
  }
  if (!(K > 0.0 && K <= 100.0)) {
    throw std::invalid_argument("trajectory " + id + ": K must lie in (0, 100]");
  }
  double c0 = 0.0;
  for (double c : initial_state().c0) c0 += c;
  if (c0 >= K) {
    std::ostringstream msg;
    msg << "trajectory " << id << ": initial cover " << c0
        << " is not below K = " << K;
    throw std::invalid_argument(msg.str());
  }
}

std::vector<Interval> PriorSpec::bounds() const {
  std::vector<Interval> out;
  out.reserve(dimension());
  for (std::size_t m = 0; m < num_groups; ++m) {
    out.insert(out.end(), {alpha, gamma, T_d(), alpha_d});
  }
  return out;
}

void PriorSpec::validate() const {
  if (num_groups == 0) throw std::invalid_argument("prior: no groups");
  for (const auto& b : bounds()) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
      throw std::invalid_argument("prior bounds must be finite and ordered");
    }
  }
  if (!(alpha.lo >= 0.0 && gamma.lo >= 0.0 && alpha_d.lo >= 0.0 &&
        alpha_d.hi <= 1.0)) {
    throw std::invalid_argument("prior bounds leave the model's parameter domain");
  }
}

PriorSpec PriorSpec::for_trajectory(const Trajectory& traj) {
  PriorSpec p;
  p.duration = traj.duration();
  p.num_groups = traj.num_groups;
  return p;
}

std::vector<std::string> parameter_names(std::size_t num_groups) {
  static const char* base[] = {"alpha", "gamma", "T_d", "alpha_d"};
  std::vector<std::string> names;
  for (std::size_t m = 0; m < num_groups; ++m) {
    for (const char* b : base) {
      std::string n = b;
      if (num_groups == 2) n += (m == 0 ? "_A" : "_C");
      else if (num_groups > 2) n += "_" + std::to_string(m + 1);
      names.push_back(n);
    }
  }
  return names;
}

std::vector<double> free_parameters(const GrowthParams& params) {
  std::vector<double> theta = params.flatten();
  theta.pop_back();
  return theta;
}

GrowthParams from_free_parameters(std::span<const double> theta, double K) {
  std::vector<double> flat(theta.begin(), theta.end());
  flat.push_back(K);
  return GrowthParams::unflatten(flat);
}

GrowthParams transform(std::span<const double> z, const PriorSpec& prior,
                       double K) {
  const auto bounds = prior.bounds();
  if (z.size() != bounds.size()) {
    throw std::invalid_argument("transform: dimension mismatch");
  }
  std::vector<double> theta(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) throw std::domain_error("transform: non-finite z");
    theta[i] = scaled_logistic(z[i], bounds[i]);
  }
  return from_free_parameters(theta, K);
}

std::vector<double> inverse_transform(const GrowthParams& params,
                                      const PriorSpec& prior) {
  const auto bounds = prior.bounds();
  const auto theta = free_parameters(params);
  if (theta.size() != bounds.size()) {
    throw std::invalid_argument("inverse_transform: dimension mismatch");
  }
  std::vector<double> z(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto& b = bounds[i];
    if (!(theta[i] > b.lo && theta[i] < b.hi)) {
      throw std::domain_error(
          "inverse_transform: value on or outside the prior bound");
    }
    // logit of the position within the interval, from the nearer end
    const double below = theta[i] - b.lo;
    const double above = b.hi - theta[i];
    z[i] = std::log(below) - std::log(above);
  }
  return z;
}

double log_jacobian(std::span<const double> z, const PriorSpec& prior) {
  const auto bounds = prior.bounds();
  if (z.size() != bounds.size()) {
    throw std::invalid_argument("log_jacobian: dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    // log(b - a) + log sigma(z) + log(1 - sigma(z))
    total += std::log(bounds[i].width()) - log1p_exp(-z[i]) - log1p_exp(z[i]);
  }
  return total;
}

double log_likelihood(const Trajectory& traj, const SolutionGrid& solution) {
  const std::size_t M = traj.num_groups;
  if (solution.num_groups != M || solution.times.size() != traj.num_times() ||
      traj.obs.size() != traj.num_times() * M ||
      traj.variance.size() != traj.num_times() * M) {
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < traj.num_times(); ++j) {
    for (std::size_t m = 0; m < M; ++m) {
      const double c = solution.at(j, m);
      if (!std::isfinite(c)) {
        throw std::invalid_argument("log_likelihood: non-finite model cover");
      }
      const double r = traj.obs_at(j, m) - c;
      const double v = traj.var_at(j, m);
      total += kLog2Pi + std::log(v) + r * r / v;
    }
  }
  return -0.5 * total;
}

double log_prior(const GrowthParams& params, const PriorSpec& prior) {
  const auto bounds = prior.bounds();
  const auto theta = free_parameters(params);
  if (theta.size() != bounds.size()) {
    throw std::invalid_argument("log_prior: dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!bounds[i].contains(theta[i])) return kNegInf;
    total -= std::log(bounds[i].width());
  }
  return total;
}

PosteriorTarget::PosteriorTarget(Trajectory traj, PriorSpec prior,
                                 IntegrateOptions options)
    : traj_(std::move(traj)), prior_(prior), options_(options) {
  traj_.validate();
  prior_.validate();
  if (prior_.num_groups != traj_.num_groups) {
    throw std::invalid_argument("prior and trajectory group counts differ");
  }
  init_ = traj_.initial_state();
}

double PosteriorTarget::log_posterior_theta(const GrowthParams& params) const {
  const double lp = log_prior(params, prior_);
  if (lp == kNegInf) return kNegInf;
  try {
    const auto sol = solve(params, init_, traj_.times, options_);
    const double ll = log_likelihood(traj_, sol);
    if (!std::isfinite(ll)) throw SolverError("non-finite log-likelihood");
    return ll + lp;
  } catch (const std::exception&) {
    failures_.fetch_add(1, std::memory_order_relaxed);
    return kNegInf;
  }
}

double PosteriorTarget::operator()(std::span<const double> z) const {
  for (double x : z) {
    if (!std::isfinite(x)) return kNegInf;
  }
  const double lp = log_posterior_theta(to_params(z));
  if (lp == kNegInf) return kNegInf;
  return lp + log_jacobian(z, prior_);
}

}  // namespace coralfit
