#include "coralfit/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace coralfit {

std::vector<double> PredictiveEnsemble::values(std::size_t j,
                                               std::size_t m) const {
  std::vector<double> out(num_draws);
  for (std::size_t d = 0; d < num_draws; ++d) out[d] = sim(d, j, m);
  return out;
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p outside [0,1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(h));
  if (k + 1 >= sorted.size()) return sorted.back();
  return sorted[k] + (h - static_cast<double>(k)) * (sorted[k + 1] - sorted[k]);
}

PredictiveEnsemble make_ensemble(std::vector<double> times,
                                 std::size_t num_groups,
                                 std::vector<double> sims,
                                 std::span<const double> levels) {
  PredictiveEnsemble ens;
  ens.times = std::move(times);
  ens.num_groups = num_groups;
  const std::size_t cell = ens.times.size() * num_groups;
  if (cell == 0 || sims.empty() || sims.size() % cell != 0) {
    throw std::invalid_argument("simulation array does not match time x group");
  }
  ens.num_draws = sims.size() / cell;
  ens.sims = std::move(sims);
  ens.levels.assign(levels.begin(), levels.end());
  std::sort(ens.levels.begin(), ens.levels.end());
  ens.band_lo.resize(ens.levels.size() * cell);
  ens.band_hi.resize(ens.levels.size() * cell);
  for (std::size_t j = 0; j < ens.num_times(); ++j) {
    for (std::size_t m = 0; m < num_groups; ++m) {
      auto v = ens.values(j, m);
      std::sort(v.begin(), v.end());
      for (std::size_t l = 0; l < ens.levels.size(); ++l) {
        const double b = ens.levels[l] / 100.0;
        const std::size_t idx = (l * ens.num_times() + j) * num_groups + m;
        ens.band_lo[idx] = sorted_quantile(v, 0.5 * (1.0 - b));
        ens.band_hi[idx] = sorted_quantile(v, 0.5 * (1.0 + b));
      }
    }
  }
  return ens;
}

PredictiveEnsemble simulate_predictive(std::span<const double> draws,
                                       const Trajectory& traj,
                                       std::size_t n_draws, Rng& rng,
                                       const IntegrateOptions& options,
                                       std::size_t max_redraws) {
  const std::size_t M = traj.num_groups;
  const std::size_t P = 4 * M;
  if (draws.empty() || draws.size() % P != 0) {
    throw std::invalid_argument("posterior draws are empty or misshaped");
  }
  if (n_draws == 0) throw std::invalid_argument("n_draws must be at least 1");
  const std::size_t rows = draws.size() / P;
  const InitialState init = traj.initial_state();
  const std::size_t T = traj.num_times();

  std::uniform_int_distribution<std::size_t> pick(0, rows - 1);
  std::normal_distribution<double> noise;
  std::vector<double> sims;
  sims.reserve(n_draws * T * M);
  std::size_t redraws = 0;
  for (std::size_t d = 0; d < n_draws;) {
    const auto row = draws.subspan(pick(rng) * P, P);
    SolutionGrid sol;
    try {
      sol = solve(from_free_parameters(row, traj.K), init, traj.times, options);
    } catch (const std::exception&) {
      if (++redraws > max_redraws) {
        throw std::runtime_error("too many solver failures in predictive draws");
      }
      continue;
    }
    for (std::size_t j = 0; j < T; ++j) {
      for (std::size_t m = 0; m < M; ++m) {
        sims.push_back(sol.at(j, m) + std::sqrt(traj.var_at(j, m)) * noise(rng));
      }
    }
    ++d;
  }
  auto ens = make_ensemble(traj.times, M, std::move(sims));
  ens.redraws = redraws;
  return ens;
}

double observed_quantile(std::span<const double> sims, double obs) {
  if (sims.empty()) throw std::invalid_argument("no simulations");
  std::size_t below = 0, ties = 0;
  for (double s : sims) {
    if (s < obs) ++below;
    else if (s == obs) ++ties;
  }
  return (static_cast<double>(below) + 0.5 * static_cast<double>(ties)) /
         static_cast<double>(sims.size());
}

std::vector<double> observed_quantiles(const PredictiveEnsemble& ens,
                                       const Trajectory& traj) {
  if (ens.times != traj.times || ens.num_groups != traj.num_groups) {
    throw std::invalid_argument("ensemble was not simulated on this trajectory");
  }
  std::vector<double> q(ens.num_times() * ens.num_groups);
  for (std::size_t j = 0; j < ens.num_times(); ++j) {
    for (std::size_t m = 0; m < ens.num_groups; ++m) {
      q[j * ens.num_groups + m] = observed_quantile(ens.values(j, m), traj.obs_at(j, m));
    }
  }
  return q;
}

double smallest_cri(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q outside [0,1]");
  double beta = q < 0.5 ? 100.0 * (1.0 - 2.0 * q) : 100.0 * (2.0 * q - 1.0);
  // q is a ratio of counts; remove rounding noise around integer levels
  const double nearest = std::round(beta);
  if (std::abs(beta - nearest) < 1e-9) beta = nearest;
  return beta;
}

bool inside_empirical_interval(std::span<const double> sims, double obs,
                               int beta) {
  if (sims.empty()) throw std::invalid_argument("no simulations");
  long long below = 0, ties = 0;
  for (double s : sims) {
    if (s < obs) ++below;
    else if (s == obs) ++ties;
  }
  const long long n = static_cast<long long>(sims.size());
  // midpoint CDF c / 2n strictly between (1 - b) / 2 and (1 + b) / 2
  const long long c = 2 * below + ties;
  return 100 * std::llabs(c - n) < static_cast<long long>(beta) * n;
}

std::vector<QuantileRecord> quantile_records(const PredictiveEnsemble& ens,
                                             const Trajectory& traj) {
  const auto q = observed_quantiles(ens, traj);
  std::vector<QuantileRecord> out;
  for (std::size_t j = 0; j < ens.num_times(); ++j) {
    for (std::size_t m = 0; m < ens.num_groups; ++m) {
      const double qi = q[j * ens.num_groups + m];
      out.push_back({traj.id, m, j, traj.times[j], traj.obs_at(j, m), qi,
                     smallest_cri(qi)});
    }
  }
  return out;
}

CoverageCurve coverage_curve(std::span<const double> betas) {
  if (betas.empty()) throw std::invalid_argument("coverage curve needs observations");
  std::vector<double> sorted(betas.begin(), betas.end());
  std::sort(sorted.begin(), sorted.end());
  CoverageCurve c;
  c.num_obs = sorted.size();
  const double n = static_cast<double>(sorted.size());
  for (int b = 1; b <= 99; ++b) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(),
                                        static_cast<double>(b)) -
                       sorted.begin();
    const double p = static_cast<double>(below) / n;
    c.beta_grid.push_back(b);
    c.p_hat.push_back(p);
    c.s_hat.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return c;
}

std::vector<double> coverage_betas(std::span<const QuantileRecord> records,
                                   bool exclude_initial) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (exclude_initial && r.visit == 0) continue;
    out.push_back(r.beta);
  }
  return out;
}

}  // namespace coralfit
