#pragma once

// Splitting site series into recovery trajectories at disturbance visits.

#include <cstddef>
#include <string>
#include <vector>

#include "coralfit/likelihood.hpp"
#include "coralfit/survey.hpp"

namespace coralfit {

/// Inclusive visit-index range of one trajectory.
struct Span {
  std::string site;
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t post_visits() const { return end - start; }
  bool operator==(const Span&) const = default;
};

/// Each disturbance visit opens a span that closes at the visit before the
/// next disturbance (or the last visit). Spans with fewer than
/// `min_post_visits` visits after the start are dropped.
std::vector<Span> segment_spans(const SiteSeries& series,
                                const std::vector<DisturbanceEvent>& events,
                                std::size_t min_post_visits = 3);

/// One or two groups: total hard coral, or Acroporidae and other hard coral.
Trajectory make_trajectory(const SiteSeries& series, const Span& span,
                           std::size_t num_groups, double K);

/// Identifier `<reef>/<site>@<start date>`.
std::string trajectory_id(const SiteSeries& series, const Span& span);

/// A trajectory carrying both the total and the two-group series, so the
/// model size can be chosen later.
struct SurveyTrajectory {
  std::string id;
  std::string reef;
  std::string site;
  double K = 100.0;
  std::vector<std::string> dates;
  std::vector<double> times;
  std::vector<double> total_obs;
  std::vector<double> total_var;
  std::vector<double> group_obs;  // row-major, 2 per visit
  std::vector<double> group_var;

  Trajectory as_model(std::size_t num_groups) const;
};

SurveyTrajectory make_survey_trajectory(const SiteSeries& series,
                                        const Span& span, double K);

std::vector<Trajectory> segment(const SiteSeries& series,
                                const std::vector<DisturbanceEvent>& events,
                                std::size_t num_groups, double K,
                                std::size_t min_post_visits = 3);

}  // namespace coralfit
