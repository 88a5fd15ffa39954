#include "coralfit/survey.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "coralfit/csv.hpp"

namespace coralfit {
namespace {

std::string normalise_label(const std::string& s) {
  std::string out;
  for (char c : trim(s)) {
    if (c == '-' || c == ' ') c = '_';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

constexpr std::array<const char*, 6> kSurveyColumns{
    "reef", "site", "transect", "date", "group", "cover_percent"};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::size_t> header_positions(const std::vector<std::string>& header,
                                          const std::vector<std::string>& wanted,
                                          std::size_t line) {
  std::vector<std::size_t> pos;
  for (const auto& w : wanted) {
    std::size_t found = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (normalise_label(header[i]) == w) found = i;
    }
    if (found == header.size()) throw ParseError(line, "missing column '" + w + "'");
    pos.push_back(found);
  }
  return pos;
}

}  // namespace

std::string to_string(ModelGroup g) {
  switch (g) {
    case ModelGroup::acroporidae: return "acroporidae";
    case ModelGroup::other_hard_coral: return "other_hard_coral";
    case ModelGroup::abiotic: return "abiotic";
    case ModelGroup::silt: return "silt";
    case ModelGroup::other: return "other";
  }
  return "other";
}

std::optional<ModelGroup> model_group_from_string(const std::string& s) {
  const std::string n = normalise_label(s);
  for (std::size_t g = 0; g < kNumModelGroups; ++g) {
    if (to_string(static_cast<ModelGroup>(g)) == n) return static_cast<ModelGroup>(g);
  }
  return std::nullopt;
}

Taxonomy::Taxonomy() {
  for (std::size_t g = 0; g < kNumModelGroups; ++g) {
    add(to_string(static_cast<ModelGroup>(g)), static_cast<ModelGroup>(g));
  }
  add("acropora", ModelGroup::acroporidae);
  add("hard_coral", ModelGroup::other_hard_coral);
  add("sand", ModelGroup::abiotic);
  add("rock", ModelGroup::abiotic);
  add("rubble", ModelGroup::abiotic);
}

void Taxonomy::add(const std::string& raw_label, ModelGroup group) {
  map_[normalise_label(raw_label)] = group;
}

std::pair<ModelGroup, bool> Taxonomy::lookup(const std::string& raw_label) const {
  const auto it = map_.find(normalise_label(raw_label));
  if (it == map_.end()) return {ModelGroup::other, false};
  return {it->second, true};
}

Taxonomy Taxonomy::parse(std::istream& in) {
  Taxonomy t;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> pos;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (!fields) throw ParseError(line_no, "unterminated quote");
    if (pos.empty()) {
      pos = header_positions(*fields, {"raw_label", "model_group"}, line_no);
      continue;
    }
    if (fields->size() != 2) throw ParseError(line_no, "expected 2 fields");
    const auto g = model_group_from_string((*fields)[pos[1]]);
    if (!g) throw ParseError(line_no, "unknown model group '" + (*fields)[pos[1]] + "'");
    t.add((*fields)[pos[0]], *g);
  }
  return t;
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

ParsedSurvey parse_survey(std::istream& in, const Taxonomy& taxonomy) {
  ParsedSurvey out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> pos;
  std::size_t width = 0;
  std::set<std::string> unknown;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (!fields) throw ParseError(line_no, "unterminated quote");
    if (pos.empty()) {
      pos = header_positions(*fields, {kSurveyColumns.begin(), kSurveyColumns.end()},
                             line_no);
      width = fields->size();
      continue;
    }
    if (fields->size() != width) {
      throw ParseError(line_no, "expected " + std::to_string(width) + " fields, got " +
                                    std::to_string(fields->size()));
    }
    TransectRecord r;
    r.reef = trim((*fields)[pos[0]]);
    r.site = trim((*fields)[pos[1]]);
    r.transect = trim((*fields)[pos[2]]);
    r.date = trim((*fields)[pos[3]]);
    r.label = trim((*fields)[pos[4]]);
    if (r.reef.empty() || r.site.empty() || r.transect.empty() || r.label.empty()) {
      throw ParseError(line_no, "empty identifier field");
    }
    const auto t = iso_date_to_years(r.date);
    if (!t) throw ParseError(line_no, "invalid date '" + r.date + "'");
    r.time = *t;
    const auto cover = parse_number((*fields)[pos[5]]);
    if (!cover) throw ParseError(line_no, "invalid cover '" + (*fields)[pos[5]] + "'");
    r.cover = *cover;
    if (r.cover < 0.0 || r.cover > 100.0) {
      ++out.rejected;
      out.warnings.push_back("line " + std::to_string(line_no) + ": cover " +
                             format_number(r.cover) + " outside [0,100], row rejected");
      continue;
    }
    const auto [group, known] = taxonomy.lookup(r.label);
    r.group = group;
    if (!known && unknown.insert(r.label).second) {
      out.warnings.push_back("unknown taxon label '" + r.label + "' mapped to other");
    }
    out.records.push_back(std::move(r));
  }
  if (pos.empty()) out.warnings.push_back("empty survey file");
  return out;
}

void write_survey(std::ostream& out, const std::vector<TransectRecord>& records) {
  out << "reef,site,transect,date,group,cover_percent\n";
  for (const auto& r : records) {
    out << csv_field(r.reef) << ',' << csv_field(r.site) << ','
        << csv_field(r.transect) << ',' << r.date << ',' << csv_field(r.label) << ','
        << format_number(r.cover) << '\n';
  }
}

std::map<std::string, double> parse_site_metadata(std::istream& in) {
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> pos;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (!fields) throw ParseError(line_no, "unterminated quote");
    if (pos.empty()) {
      pos = header_positions(*fields, {"reef", "site", "k_override"}, line_no);
      continue;
    }
    if (fields->size() <= std::max({pos[0], pos[1], pos[2]})) {
      throw ParseError(line_no, "too few fields");
    }
    if (trim((*fields)[pos[2]]).empty()) continue;
    const auto k = parse_number((*fields)[pos[2]]);
    if (!k || *k <= 0.0 || *k > 100.0) throw ParseError(line_no, "invalid K_override");
    out[site_key(trim((*fields)[pos[0]]), trim((*fields)[pos[1]]))] = *k;
  }
  return out;
}

std::string site_key(const std::string& reef, const std::string& site) {
  return reef + "/" + site;
}

std::vector<double> Visit::hard_coral() const {
  std::vector<double> out;
  for (const auto& c : cover) {
    out.push_back(c[static_cast<std::size_t>(ModelGroup::acroporidae)] +
                  c[static_cast<std::size_t>(ModelGroup::other_hard_coral)]);
  }
  return out;
}

namespace {

void mean_and_var_of_mean(const std::vector<double>& x, double& mean, double& var) {
  const double n = static_cast<double>(x.size());
  mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  var = ss / (n - 1.0) / n;
}

}  // namespace

std::vector<SiteSeries> aggregate(const std::vector<TransectRecord>& records,
                                  std::size_t expected_transects) {
  struct Cell {
    std::string date;
    double time;
    std::map<std::string, std::array<double, kNumModelGroups>> transects;
    std::array<bool, kNumModelGroups> recorded{};
  };
  std::map<std::pair<std::string, std::string>, std::map<std::string, Cell>> sites;
  for (const auto& r : records) {
    auto& cell = sites[{r.reef, r.site}][r.date];
    cell.date = r.date;
    cell.time = r.time;
    const auto g = static_cast<std::size_t>(r.group);
    cell.transects[r.transect][g] += r.cover;
    cell.recorded[g] = true;
  }

  std::vector<SiteSeries> out;
  for (auto& [key, dates] : sites) {
    SiteSeries s;
    s.reef = key.first;
    s.site = key.second;
    for (auto& [date, cell] : dates) {
      if (cell.transects.size() < 2) {
        throw std::invalid_argument("site " + site_key(s.reef, s.site) + " on " + date +
                                    ": fewer than 2 transects, variance undefined");
      }
      Visit v;
      v.date = date;
      v.time = cell.time;
      v.recorded = cell.recorded;
      for (const auto& [id, covers] : cell.transects) {
        double sum = 0.0;
        for (double c : covers) sum += c;
        if (sum > 100.5) {
          throw std::invalid_argument("site " + site_key(s.reef, s.site) + " on " + date +
                                      ", transect " + id + ": covers sum to " +
                                      format_number(sum) + "%");
        }
        v.transects.push_back(id);
        v.cover.push_back(covers);
      }
      v.missing_transects = v.transects.size() < expected_transects;
      for (std::size_t g = 0; g < kNumModelGroups; ++g) {
        std::vector<double> x;
        for (const auto& c : v.cover) x.push_back(c[g]);
        mean_and_var_of_mean(x, v.mean[g], v.var_mean[g]);
      }
      mean_and_var_of_mean(v.hard_coral(), v.hard_coral_mean, v.hard_coral_var_mean);
      v.silt = v.mean[static_cast<std::size_t>(ModelGroup::silt)] > 0.0;
      s.visits.push_back(std::move(v));
    }
    std::sort(s.visits.begin(), s.visits.end(),
              [](const Visit& a, const Visit& b) { return a.time < b.time; });
    out.push_back(std::move(s));
  }
  return out;
}

TTest paired_decline_test(const std::vector<double>& before,
                          const std::vector<double>& after) {
  if (before.size() != after.size() || before.size() < 2) {
    throw std::invalid_argument("paired t-test needs at least 2 matched pairs");
  }
  const std::size_t n = before.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += (after[i] - before[i]) / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = after[i] - before[i] - mean;
    ss += d * d;
  }
  TTest r;
  r.pairs = n;
  r.df = static_cast<double>(n - 1);
  const double se = std::sqrt(ss / r.df / static_cast<double>(n));
  if (!(se > 0.0)) {
    r.t = mean < 0.0 ? -std::numeric_limits<double>::infinity()
                     : (mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.p = mean < 0.0 ? 0.0 : 1.0;
    return r;
  }
  r.t = mean / se;
  r.p = boost::math::cdf(boost::math::students_t_distribution<double>(r.df), r.t);
  return r;
}

std::vector<DisturbanceEvent> detect_disturbances(const SiteSeries& series,
                                                  double p_threshold,
                                                  std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(series.key() + ": " + w);
  };
  std::vector<DisturbanceEvent> out;
  for (std::size_t k = 1; k < series.visits.size(); ++k) {
    const Visit& a = series.visits[k - 1];
    const Visit& b = series.visits[k];
    const auto ha = a.hard_coral(), hb = b.hard_coral();
    std::vector<double> before, after;
    for (std::size_t i = 0; i < a.transects.size(); ++i) {
      const auto it = std::find(b.transects.begin(), b.transects.end(), a.transects[i]);
      if (it == b.transects.end()) {
        warn("transect " + a.transects[i] + " missing on " + b.date + ", pair dropped");
        continue;
      }
      before.push_back(ha[i]);
      after.push_back(hb[static_cast<std::size_t>(it - b.transects.begin())]);
    }
    for (const auto& id : b.transects) {
      if (std::find(a.transects.begin(), a.transects.end(), id) == a.transects.end()) {
        warn("transect " + id + " missing on " + a.date + ", pair dropped");
      }
    }
    if (before.size() < 2) {
      warn("fewer than 2 paired transects between " + a.date + " and " + b.date);
      continue;
    }
    const TTest t = paired_decline_test(before, after);
    if (t.p == 1.0 && t.t == 0.0) {
      warn("no change between " + a.date + " and " + b.date + ", test degenerate");
      continue;
    }
    if (t.p <= p_threshold) out.push_back({series.key(), k, b.time, t.t, t.p});
  }
  return out;
}

double estimate_K(const SiteSeries& series, std::optional<double> override_K) {
  if (override_K) {
    if (!(*override_K > 0.0 && *override_K <= 100.0)) {
      throw std::invalid_argument("K override must lie in (0, 100]");
    }
    return *override_K;
  }
  std::vector<double> abiotic;
  for (const auto& v : series.visits) {
    if (v.silt || !v.recorded[static_cast<std::size_t>(ModelGroup::abiotic)]) continue;
    abiotic.push_back(v.mean[static_cast<std::size_t>(ModelGroup::abiotic)]);
  }
  if (abiotic.empty()) {
    throw std::invalid_argument("site " + series.key() +
                                ": no abiotic cover to estimate K; supply K_override");
  }
  const double K = 100.0 - median(abiotic);
  if (!(K > 0.0)) throw std::invalid_argument("site " + series.key() + ": estimated K is 0");
  return K;
}

}  // namespace coralfit
