#include "coralfit/segmentation.hpp"

#include <algorithm>
#include <stdexcept>

namespace coralfit {

std::vector<Span> segment_spans(const SiteSeries& series,
                                const std::vector<DisturbanceEvent>& events,
                                std::size_t min_post_visits) {
  std::vector<std::size_t> starts;
  for (const auto& e : events) {
    if (e.site != series.key()) continue;
    if (e.visit >= series.visits.size()) {
      throw std::invalid_argument("disturbance visit index out of range");
    }
    starts.push_back(e.visit);
  }
  if (!std::is_sorted(starts.begin(), starts.end())) {
    throw std::invalid_argument("disturbance events must be sorted by time");
  }
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  std::vector<Span> out;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const std::size_t end =
        i + 1 < starts.size() ? starts[i + 1] - 1 : series.visits.size() - 1;
    Span s{series.key(), starts[i], end};
    if (s.post_visits() >= min_post_visits) out.push_back(std::move(s));
  }
  return out;
}

std::string trajectory_id(const SiteSeries& series, const Span& span) {
  return series.key() + "@" + series.visits.at(span.start).date;
}

Trajectory make_trajectory(const SiteSeries& series, const Span& span,
                           std::size_t num_groups, double K) {
  if (num_groups != 1 && num_groups != 2) {
    throw std::invalid_argument("model must have 1 or 2 groups");
  }
  if (span.end >= series.visits.size() || span.start > span.end) {
    throw std::invalid_argument("span outside the site series");
  }
  Trajectory tr;
  tr.id = trajectory_id(series, span);
  tr.reef = series.reef;
  tr.site = series.site;
  tr.num_groups = num_groups;
  tr.K = K;
  constexpr auto acro = static_cast<std::size_t>(ModelGroup::acroporidae);
  constexpr auto other = static_cast<std::size_t>(ModelGroup::other_hard_coral);
  for (std::size_t k = span.start; k <= span.end; ++k) {
    const Visit& v = series.visits[k];
    tr.times.push_back(v.time);
    if (num_groups == 1) {
      tr.obs.push_back(v.hard_coral_mean);
      tr.variance.push_back(v.hard_coral_var_mean);
    } else {
      tr.obs.insert(tr.obs.end(), {v.mean[acro], v.mean[other]});
      tr.variance.insert(tr.variance.end(), {v.var_mean[acro], v.var_mean[other]});
    }
  }
  tr.apply_variance_floor();
  return tr;
}

SurveyTrajectory make_survey_trajectory(const SiteSeries& series,
                                        const Span& span, double K) {
  const Trajectory one = make_trajectory(series, span, 1, K);
  const Trajectory two = make_trajectory(series, span, 2, K);
  SurveyTrajectory s;
  s.id = one.id;
  s.reef = one.reef;
  s.site = one.site;
  s.K = K;
  for (std::size_t k = span.start; k <= span.end; ++k) {
    s.dates.push_back(series.visits[k].date);
  }
  s.times = one.times;
  s.total_obs = one.obs;
  s.total_var = one.variance;
  s.group_obs = two.obs;
  s.group_var = two.variance;
  return s;
}

Trajectory SurveyTrajectory::as_model(std::size_t num_groups) const {
  if (num_groups != 1 && num_groups != 2) {
    throw std::invalid_argument("model must have 1 or 2 groups");
  }
  Trajectory tr;
  tr.id = id;
  tr.reef = reef;
  tr.site = site;
  tr.K = K;
  tr.times = times;
  tr.num_groups = num_groups;
  tr.obs = num_groups == 1 ? total_obs : group_obs;
  tr.variance = num_groups == 1 ? total_var : group_var;
  return tr;
}

std::vector<Trajectory> segment(const SiteSeries& series,
                                const std::vector<DisturbanceEvent>& events,
                                std::size_t num_groups, double K,
                                std::size_t min_post_visits) {
  std::vector<Trajectory> out;
  for (const auto& span : segment_spans(series, events, min_post_visits)) {
    out.push_back(make_trajectory(series, span, num_groups, K));
  }
  return out;
}

}  // namespace coralfit
