#pragma once

// JSON and CSV persistence for segmented trajectories and disturbance events.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "coralfit/segmentation.hpp"
#include "coralfit/survey.hpp"

namespace coralfit {

nlohmann::ordered_json to_json(const SurveyTrajectory& t);
SurveyTrajectory survey_trajectory_from_json(const nlohmann::json& j);

/// `{"meta": ..., "trajectories": [...]}`
void write_trajectories(std::ostream& out, const std::vector<SurveyTrajectory>& ts,
                        const nlohmann::ordered_json& meta = nlohmann::ordered_json::object());
std::vector<SurveyTrajectory> read_trajectories(std::istream& in);

struct EventRow {
  DisturbanceEvent event;
  std::string date;
};

void write_events(std::ostream& out, const std::vector<EventRow>& events);

}  // namespace coralfit
