#pragma once

// Robust adaptive random-walk Metropolis (Vihola 2012) chains and the
// multi-chain fitting loop with round-based convergence checks.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coralfit/diagnostics.hpp"
#include "coralfit/likelihood.hpp"
#include "coralfit/random.hpp"

namespace coralfit {

using LogDensity = std::function<double(std::span<const double>)>;
/// Maps a sampling-space point to the stored representation.
using OutputMap = std::function<std::vector<double>(std::span<const double>)>;
/// Produces a fresh starting point.
using InitSampler = std::function<std::vector<double>(Rng&)>;

struct RamSettings {
  double target_acceptance = 0.234;
  double step_exponent = 2.0 / 3.0;
  double initial_scale = 0.1;
  bool adapt = true;
};

struct RamState {
  std::vector<double> z;
  double log_post = kNegInf;
  Eigen::MatrixXd S;  // lower triangular, positive diagonal
  std::size_t iter = 0;
  std::size_t accept_count = 0;
  std::size_t refactor_count = 0;
};

RamState initial_ram_state(std::vector<double> z, const LogDensity& target,
                           const RamSettings& settings = {});

/// One proposal, accept/reject, and (when enabled) a rank-one update of the
/// proposal factor towards the target acceptance rate.
RamState ram_step(RamState state, const LogDensity& target, Rng& rng,
                  const RamSettings& settings = {});

/// Rank-one update L L^T + sigma v v^T of a lower-triangular Cholesky factor
/// in place. Returns false if the result would not be positive definite.
bool cholesky_rank_one_update(Eigen::MatrixXd& L, Eigen::VectorXd v,
                              double sigma);

/// Kept draws of one chain, row-major (draw x parameter).
struct ChainRun {
  std::size_t num_params = 0;
  std::vector<double> draws;
  std::vector<double> log_post_trace;
  std::vector<std::size_t> iterations;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  std::size_t thin = 1;
  std::size_t total_iterations = 0;
  std::size_t refactor_count = 0;

  std::size_t num_draws() const { return log_post_trace.size(); }
  std::span<const double> draw(std::size_t i) const {
    return {draws.data() + i * num_params, num_params};
  }
  std::vector<double> column(std::size_t p) const;
};

/// A resumable chain storing every `thin`-th draw.
class RamChain {
 public:
  RamChain(LogDensity target, std::vector<double> z0, std::uint64_t seed,
           std::size_t thin = 1, RamSettings settings = {},
           OutputMap to_output = {},
           std::optional<InitSampler> init_sampler = std::nullopt,
           std::size_t init_retries = 100);

  void advance(std::size_t iterations);
  /// Raise the thinning interval to a multiple of the current one, discarding
  /// stored draws that no longer fall on it.
  void rethin(std::size_t new_thin);

  const RamState& state() const { return state_; }
  std::size_t thin() const { return run_.thin; }
  std::size_t num_stored() const { return run_.num_draws(); }
  /// Stored draws from iterations strictly after `burn_in`.
  ChainRun snapshot(std::size_t burn_in = 0) const;

 private:
  LogDensity target_;
  RamSettings settings_;
  OutputMap to_output_;
  Rng rng_;
  RamState state_;
  ChainRun run_;
};

/// Runs one chain for n_iter iterations; deterministic in (target, init,
/// seed). Starts at -inf are retried from init_sampler draws when given.
ChainRun run_chain(const LogDensity& target, std::vector<double> init,
                   std::size_t n_iter, std::uint64_t seed,
                   std::size_t thin = 1, const RamSettings& settings = {},
                   const OutputMap& to_output = {},
                   std::optional<InitSampler> init_sampler = std::nullopt);

struct FitConfig {
  std::size_t chains = 4;
  std::size_t max_iterations = 200000;
  std::size_t round_length = 20000;
  std::uint64_t seed = 1;
  std::size_t thin = 1;
  /// Stored draws per chain before the thinning interval doubles.
  std::size_t max_stored_per_chain = 50000;
  std::size_t init_retries = 100;
  bool parallel_chains = false;
  ConvergenceThresholds thresholds;
  RamSettings ram;
  IntegrateOptions solver;
  Interval alpha_prior{0.0, 1.0};
  Interval gamma_prior{0.0, 2.0};
  Interval alpha_d_prior{0.0, 0.9};

  void validate() const;
  PriorSpec prior_for(const Trajectory& traj) const;
};

struct FitResult {
  std::string trajectory_id;
  std::vector<std::string> parameter_names;
  /// Post-burn-in draws in parameter space, one run per chain.
  std::vector<ChainRun> chains;
  ConvergenceReport report;
  std::size_t iterations_per_chain = 0;
  std::size_t solver_failures = 0;
  std::size_t refactorizations = 0;

  bool converged() const { return report.pass; }
  /// All chains' draws concatenated, row-major.
  std::vector<double> pooled_draws() const;
};

/// Per-parameter chain sets from post-burn-in runs.
std::vector<ChainSet> parameter_chains(const std::vector<ChainRun>& chains);

ConvergenceReport diagnose_chains(const std::vector<ChainRun>& chains,
                                  const std::vector<std::string>& names,
                                  const ConvergenceThresholds& thresholds,
                                  std::size_t iterations_used);

/// Four (configurable) over-dispersed chains, checked every round after
/// discarding the first half of each chain, stopped on a passing gate or at
/// the iteration cap. A failing gate is reported, not thrown.
FitResult run_fit(const Trajectory& traj, const FitConfig& config);

}  // namespace coralfit
