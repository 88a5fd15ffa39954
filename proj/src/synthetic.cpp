#include "coralfit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "coralfit/csv.hpp"

namespace coralfit {

Trajectory generate_synthetic(const GrowthParams& params, const InitialState& init,
                              std::span<const double> times,
                              std::span<const double> noise_sd, Rng& rng,
                              const IntegrateOptions& options) {
  params.validate();
  init.validate(params);
  if (times.empty() || times.front() != init.t0) {
    throw std::invalid_argument("times must start at t0");
  }
  if (noise_sd.size() != times.size()) {
    throw std::invalid_argument("one noise sd per time required");
  }
  const std::size_t M = params.num_groups();
  const auto sol = solve(params, init, times, options);
  std::normal_distribution<double> z;
  Trajectory tr;
  tr.id = "synthetic";
  tr.num_groups = M;
  tr.K = params.K;
  tr.times.assign(times.begin(), times.end());
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!(noise_sd[j] >= 0.0)) throw std::invalid_argument("noise sd must be >= 0");
    for (std::size_t m = 0; m < M; ++m) {
      const double eps = j == 0 ? 0.0 : noise_sd[j] * z(rng);
      tr.obs.push_back(sol.at(j, m) + eps);
      tr.variance.push_back(noise_sd[j] * noise_sd[j]);
    }
  }
  return tr;
}

std::vector<double> fabricate_transects(double mean, double sd_of_mean,
                                        std::size_t n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("need at least 2 transects");
  // centred ramp with unit sample variance
  std::vector<double> pattern(n);
  const double mid = 0.5 * static_cast<double>(n - 1);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pattern[i] = static_cast<double>(i) - mid;
    ss += pattern[i] * pattern[i];
  }
  const double unit = std::sqrt(ss / static_cast<double>(n - 1));
  const double scale = sd_of_mean * std::sqrt(static_cast<double>(n)) / unit;
  std::shuffle(pattern.begin(), pattern.end(), rng);
  for (double& p : pattern) p = mean + scale * p;
  return pattern;
}

std::vector<TransectRecord> simulate_survey(const SiteSimulation& sim, Rng& rng) {
  const std::size_t M = sim.params.num_groups();
  if (M != 1 && M != 2) throw std::invalid_argument("simulation supports 1 or 2 groups");
  if (sim.c0.size() != M) throw std::invalid_argument("one initial cover per group");
  if (!(sim.interval > 0.0) || sim.visits == 0) {
    throw std::invalid_argument("simulation needs visits > 0 and interval > 0");
  }
  std::vector<double> pre = sim.pre_cover;
  if (pre.empty()) pre.assign(M, 0.8 * sim.params.K / static_cast<double>(M));
  if (pre.size() != M) throw std::invalid_argument("one pre-disturbance cover per group");

  // visit dates, with model times taken back from the rounded dates
  std::vector<std::string> dates;
  std::vector<double> times;
  for (std::size_t k = 0; k <= sim.visits + 1; ++k) {
    const double t = sim.t0 + (static_cast<double>(k) - 1.0) * sim.interval;
    dates.push_back(years_to_iso_date(t));
    times.push_back(*iso_date_to_years(dates.back()));
  }
  const std::vector<double> model_times(times.begin() + 1, times.end());
  const auto sol = solve(sim.params, InitialState{model_times.front(), sim.c0}, model_times);

  const char* labels[2] = {"acroporidae", "other_hard_coral"};
  const double abiotic = 100.0 - sim.params.K;
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<TransectRecord> out;
  for (std::size_t k = 0; k < dates.size(); ++k) {
    std::vector<std::vector<double>> cover(M);
    for (std::size_t m = 0; m < M; ++m) {
      // the visit at t0 stays exact, matching generate_synthetic
      const double eps = k == 1 ? 0.0 : sim.noise_sd * z(rng);
      const double mean = (k == 0 ? pre[m] : sol.at(k - 1, m)) + eps;
      cover[m] = fabricate_transects(mean, sim.noise_sd, sim.transects, rng);
    }
    for (std::size_t i = 0; i < sim.transects; ++i) {
      double coral = 0.0;
      for (std::size_t m = 0; m < M; ++m) {
        TransectRecord r;
        r.reef = sim.reef;
        r.site = sim.site;
        r.transect = "T" + std::to_string(i + 1);
        r.date = dates[k];
        r.time = times[k];
        r.label = labels[M == 1 ? 1 : m];
        r.group = M == 1 || m == 1 ? ModelGroup::other_hard_coral : ModelGroup::acroporidae;
        // survey covers are percentages, so the noise is clipped at the bounds
        r.cover = std::clamp(cover[m][i], 0.0, 100.0);
        coral += r.cover;
        out.push_back(std::move(r));
      }
      TransectRecord a;
      a.reef = sim.reef;
      a.site = sim.site;
      a.transect = "T" + std::to_string(i + 1);
      a.date = dates[k];
      a.time = times[k];
      a.label = "abiotic";
      a.group = ModelGroup::abiotic;
      a.cover = std::clamp(std::min(abiotic, 100.0 - coral), 0.0, 100.0);
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace coralfit
