#include "coralfit/trajectory_io.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "coralfit/csv.hpp"

namespace coralfit {

nlohmann::ordered_json to_json(const SurveyTrajectory& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["reef"] = t.reef;
  j["site"] = t.site;
  j["K"] = t.K;
  j["dates"] = t.dates;
  j["times"] = t.times;
  j["total"] = {{"obs", t.total_obs}, {"variance", t.total_var}};
  j["groups"] = {{"names", {"acroporidae", "other_hard_coral"}},
                 {"obs", t.group_obs},
                 {"variance", t.group_var}};
  return j;
}

SurveyTrajectory survey_trajectory_from_json(const nlohmann::json& j) {
  SurveyTrajectory t;
  try {
    t.id = j.at("id").get<std::string>();
    t.reef = j.value("reef", "");
    t.site = j.value("site", "");
    t.K = j.at("K").get<double>();
    t.times = j.at("times").get<std::vector<double>>();
    t.dates = j.value("dates", std::vector<std::string>{});
    t.total_obs = j.at("total").at("obs").get<std::vector<double>>();
    t.total_var = j.at("total").at("variance").get<std::vector<double>>();
    if (j.contains("groups")) {
      t.group_obs = j["groups"].at("obs").get<std::vector<double>>();
      t.group_var = j["groups"].at("variance").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed trajectory entry: " + std::string(e.what()));
  }
  const std::size_t n = t.times.size();
  if (t.total_obs.size() != n || t.total_var.size() != n ||
      t.group_obs.size() != t.group_var.size() ||
      (!t.group_obs.empty() && t.group_obs.size() != 2 * n)) {
    throw std::invalid_argument("trajectory " + t.id + ": series lengths disagree");
  }
  return t;
}

void write_trajectories(std::ostream& out, const std::vector<SurveyTrajectory>& ts,
                        const nlohmann::ordered_json& meta) {
  nlohmann::ordered_json doc;
  doc["meta"] = meta;
  doc["trajectories"] = nlohmann::ordered_json::array();
  for (const auto& t : ts) doc["trajectories"].push_back(to_json(t));
  out << doc.dump(2) << '\n';
}

std::vector<SurveyTrajectory> read_trajectories(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("trajectories file is not valid JSON: " +
                                std::string(e.what()));
  }
  if (!doc.contains("trajectories") || !doc["trajectories"].is_array()) {
    throw std::invalid_argument("trajectories file lacks a 'trajectories' array");
  }
  std::vector<SurveyTrajectory> out;
  for (const auto& j : doc["trajectories"]) out.push_back(survey_trajectory_from_json(j));
  return out;
}

void write_events(std::ostream& out, const std::vector<EventRow>& events) {
  out << "site,visit,date,time,t,p_value\n";
  for (const auto& e : events) {
    out << csv_field(e.event.site) << ',' << e.event.visit << ',' << e.date << ','
        << format_number(e.event.time) << ',' << format_number(e.event.t) << ','
        << format_number(e.event.p_value) << '\n';
  }
}

}  // namespace coralfit
