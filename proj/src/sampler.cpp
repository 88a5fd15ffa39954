#include "coralfit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace coralfit {

bool cholesky_rank_one_update(Eigen::MatrixXd& L, Eigen::VectorXd v,
                              double sigma) {
  const Eigen::Index d = L.rows();
  Eigen::MatrixXd work = L;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double lkk = work(k, k);
    const double r2 = lkk * lkk + sigma * v(k) * v(k);
    if (!(r2 > 0.0) || !std::isfinite(r2)) return false;
    const double r = std::sqrt(r2);
    const double c = r / lkk;
    const double s = v(k) / lkk;
    work(k, k) = r;
    for (Eigen::Index i = k + 1; i < d; ++i) {
      work(i, k) = (work(i, k) + sigma * s * v(i)) / c;
      v(i) = c * v(i) - s * work(i, k);
    }
  }
  L = std::move(work);
  return true;
}

namespace {

// Jittered re-factorisation of L L^T + sigma v v^T.
Eigen::MatrixXd refactor(const Eigen::MatrixXd& L, const Eigen::VectorXd& v,
                         double sigma) {
  Eigen::MatrixXd cov = L * L.transpose() + sigma * v * v.transpose();
  cov = 0.5 * (cov + cov.transpose());
  const Eigen::Index d = cov.rows();
  double jitter = 1e-12 * std::max(cov.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov + jitter * Eigen::MatrixXd::Identity(d, d));
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd out = llt.matrixL();
      if (out.allFinite()) return out;
    }
    jitter *= 10.0;
  }
  return L;
}

}  // namespace

RamState initial_ram_state(std::vector<double> z, const LogDensity& target,
                           const RamSettings& settings) {
  RamState s;
  const auto d = static_cast<Eigen::Index>(z.size());
  s.log_post = target(z);
  s.z = std::move(z);
  s.S = settings.initial_scale * Eigen::MatrixXd::Identity(d, d);
  return s;
}

RamState ram_step(RamState state, const LogDensity& target, Rng& rng,
                  const RamSettings& settings) {
  const auto d = static_cast<Eigen::Index>(state.z.size());
  const std::size_t n = state.iter + 1;

  std::normal_distribution<double> normal;
  Eigen::VectorXd u(d);
  for (Eigen::Index i = 0; i < d; ++i) u(i) = normal(rng);
  const Eigen::VectorXd step = state.S.triangularView<Eigen::Lower>() * u;

  std::vector<double> proposal(state.z);
  for (Eigen::Index i = 0; i < d; ++i) proposal[i] += step(i);
  const double lp = target(proposal);

  double accept_prob = 0.0;
  if (!std::isnan(lp) && lp != kNegInf) {
    accept_prob = (state.log_post == kNegInf || lp >= state.log_post)
                      ? 1.0
                      : std::exp(lp - state.log_post);
  }
  const double draw = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (draw < accept_prob) {
    state.z = std::move(proposal);
    state.log_post = lp;
    ++state.accept_count;
  }

  const double norm = u.norm();
  if (settings.adapt && norm > 0.0) {
    const double eta =
        std::min(1.0, static_cast<double>(d) *
                          std::pow(static_cast<double>(n), -settings.step_exponent));
    const double sigma = eta * (accept_prob - settings.target_acceptance);
    const Eigen::VectorXd v = step / norm;
    if (!cholesky_rank_one_update(state.S, v, sigma)) {
      state.S = refactor(state.S, v, sigma);
      ++state.refactor_count;
    }
  }
  state.iter = n;
  return state;
}

std::vector<double> ChainRun::column(std::size_t p) const {
  std::vector<double> out(num_draws());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = draws[i * num_params + p];
  return out;
}

RamChain::RamChain(LogDensity target, std::vector<double> z0,
                   std::uint64_t seed, std::size_t thin, RamSettings settings,
                   OutputMap to_output, std::optional<InitSampler> init_sampler,
                   std::size_t init_retries)
    : target_(std::move(target)),
      settings_(settings),
      to_output_(std::move(to_output)),
      rng_(make_stream(seed, 0)) {
  if (thin == 0) throw std::invalid_argument("thin must be positive");
  if (z0.empty()) {
    if (!init_sampler) throw std::invalid_argument("no starting point given");
    z0 = (*init_sampler)(rng_);
  }
  state_ = initial_ram_state(std::move(z0), target_, settings_);
  std::size_t retries = 0;
  while (!(state_.log_post > kNegInf)) {
    if (!init_sampler || retries >= init_retries) {
      throw std::runtime_error(
          "chain initialisation failed: log-posterior is -inf at every start");
    }
    ++retries;
    state_ = initial_ram_state((*init_sampler)(rng_), target_, settings_);
  }
  run_.seed = seed;
  run_.thin = thin;
  run_.num_params =
      to_output_ ? to_output_(state_.z).size() : state_.z.size();
}

void RamChain::advance(std::size_t iterations) {
  for (std::size_t i = 0; i < iterations; ++i) {
    state_ = ram_step(std::move(state_), target_, rng_, settings_);
    if (state_.iter % run_.thin == 0) {
      if (to_output_) {
        const auto out = to_output_(state_.z);
        run_.draws.insert(run_.draws.end(), out.begin(), out.end());
      } else {
        run_.draws.insert(run_.draws.end(), state_.z.begin(), state_.z.end());
      }
      run_.log_post_trace.push_back(state_.log_post);
      run_.iterations.push_back(state_.iter);
    }
  }
  run_.total_iterations = state_.iter;
  run_.refactor_count = state_.refactor_count;
  run_.acceptance_rate =
      state_.iter == 0 ? 0.0
                       : static_cast<double>(state_.accept_count) /
                             static_cast<double>(state_.iter);
}

void RamChain::rethin(std::size_t new_thin) {
  if (new_thin == 0 || new_thin % run_.thin != 0) {
    throw std::invalid_argument("new thinning must be a multiple of the old");
  }
  ChainRun kept = run_;
  kept.draws.clear();
  kept.log_post_trace.clear();
  kept.iterations.clear();
  kept.thin = new_thin;
  for (std::size_t i = 0; i < run_.num_draws(); ++i) {
    if (run_.iterations[i] % new_thin != 0) continue;
    const auto row = run_.draw(i);
    kept.draws.insert(kept.draws.end(), row.begin(), row.end());
    kept.log_post_trace.push_back(run_.log_post_trace[i]);
    kept.iterations.push_back(run_.iterations[i]);
  }
  run_ = std::move(kept);
}

ChainRun RamChain::snapshot(std::size_t burn_in) const {
  ChainRun out = run_;
  const auto first = std::upper_bound(run_.iterations.begin(),
                                      run_.iterations.end(), burn_in) -
                     run_.iterations.begin();
  out.iterations.erase(out.iterations.begin(), out.iterations.begin() + first);
  out.log_post_trace.erase(out.log_post_trace.begin(),
                           out.log_post_trace.begin() + first);
  out.draws.erase(out.draws.begin(),
                  out.draws.begin() + first * static_cast<std::ptrdiff_t>(run_.num_params));
  return out;
}

ChainRun run_chain(const LogDensity& target, std::vector<double> init,
                   std::size_t n_iter, std::uint64_t seed, std::size_t thin,
                   const RamSettings& settings, const OutputMap& to_output,
                   std::optional<InitSampler> init_sampler) {
  if (n_iter == 0) throw std::invalid_argument("n_iter must be at least 1");
  RamChain chain(target, std::move(init), seed, thin, settings, to_output,
                 std::move(init_sampler));
  chain.advance(n_iter);
  return chain.snapshot(0);
}

void FitConfig::validate() const {
  if (chains < 2) throw std::invalid_argument("at least two chains required");
  if (max_iterations == 0) {
    throw std::invalid_argument("iteration cap must be at least 1");
  }
  if (round_length == 0) throw std::invalid_argument("round length must be >= 1");
  if (thin == 0) throw std::invalid_argument("thin must be >= 1");
  if (max_stored_per_chain < 20) {
    throw std::invalid_argument("max stored draws per chain must be >= 20");
  }
  if (!(thresholds.r_hat > 0.0) || !(thresholds.ess > 0.0)) {
    throw std::invalid_argument("convergence thresholds must be positive");
  }
  if (!(ram.target_acceptance > 0.0 && ram.target_acceptance < 1.0) ||
      !(ram.initial_scale > 0.0)) {
    throw std::invalid_argument("invalid RAM settings");
  }
  if (!(solver.rel_tol > 0.0) || !(solver.abs_tol > 0.0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  PriorSpec probe;
  probe.alpha = alpha_prior;
  probe.gamma = gamma_prior;
  probe.alpha_d = alpha_d_prior;
  probe.validate();
}

PriorSpec FitConfig::prior_for(const Trajectory& traj) const {
  PriorSpec p = PriorSpec::for_trajectory(traj);
  p.alpha = alpha_prior;
  p.gamma = gamma_prior;
  p.alpha_d = alpha_d_prior;
  return p;
}

std::vector<double> FitResult::pooled_draws() const {
  std::vector<double> out;
  for (const auto& c : chains) out.insert(out.end(), c.draws.begin(), c.draws.end());
  return out;
}

std::vector<ChainSet> parameter_chains(const std::vector<ChainRun>& chains) {
  if (chains.empty()) return {};
  std::vector<ChainSet> out(chains.front().num_params);
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (const auto& c : chains) out[p].push_back(c.column(p));
  }
  return out;
}

ConvergenceReport diagnose_chains(const std::vector<ChainRun>& chains,
                                  const std::vector<std::string>& names,
                                  const ConvergenceThresholds& thresholds,
                                  std::size_t iterations_used) {
  const auto sets = parameter_chains(chains);
  std::vector<ParameterDiagnostics> params;
  for (std::size_t p = 0; p < sets.size(); ++p) {
    params.push_back(diagnose_parameter(
        p < names.size() ? names[p] : "p" + std::to_string(p), sets[p]));
  }
  return gate(std::move(params), thresholds, iterations_used);
}

FitResult run_fit(const Trajectory& traj, const FitConfig& config) {
  config.validate();
  const PriorSpec prior = config.prior_for(traj);
  const PosteriorTarget target(traj, prior, config.solver);

  LogDensity density = [&target](std::span<const double> z) { return target(z); };
  OutputMap to_theta = [&target](std::span<const double> z) {
    return free_parameters(target.to_params(z));
  };
  const std::size_t d = prior.dimension();
  // independent prior draws mapped to sampling space
  InitSampler prior_draw = [d](Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> z(d);
    for (double& x : z) {
      double u = 0.0;
      while (u == 0.0) u = unif(rng);
      x = std::log(u) - std::log1p(-u);
    }
    return z;
  };

  std::vector<RamChain> chains;
  chains.reserve(config.chains);
  for (std::size_t c = 0; c < config.chains; ++c) {
    chains.emplace_back(density, std::vector<double>{},
                        derive_seed(config.seed, c + 1), config.thin, config.ram,
                        to_theta, prior_draw, config.init_retries);
  }

  FitResult result;
  result.trajectory_id = traj.id;
  result.parameter_names = parameter_names(traj.num_groups);

  std::size_t done = 0;
  std::vector<ChainRun> kept;
  while (done < config.max_iterations) {
    const std::size_t step = std::min(config.round_length, config.max_iterations - done);
    if (config.parallel_chains) {
      std::vector<std::thread> workers;
      for (auto& ch : chains) workers.emplace_back([&ch, step] { ch.advance(step); });
      for (auto& w : workers) w.join();
    } else {
      for (auto& ch : chains) ch.advance(step);
    }
    done += step;

    while (chains.front().num_stored() > config.max_stored_per_chain) {
      const std::size_t next = 2 * chains.front().thin();
      for (auto& ch : chains) ch.rethin(next);
    }

    kept.clear();
    for (const auto& ch : chains) kept.push_back(ch.snapshot(done / 2));
    if (kept.front().num_draws() < 10) continue;
    result.report = diagnose_chains(kept, result.parameter_names,
                                    config.thresholds, done);
    if (result.report.pass) break;
  }
  if (kept.front().num_draws() < 10) {
    result.report = gate({}, config.thresholds, done);
    result.report.failures.push_back("too few post-burn-in draws to diagnose");
  }

  result.chains = std::move(kept);
  result.iterations_per_chain = done;
  result.solver_failures = target.solver_failures();
  for (const auto& ch : chains) result.refactorizations += ch.state().refactor_count;
  return result;
}

}  // namespace coralfit
