#pragma once

// Transect-level survey records, site aggregation, disturbance detection and
// carrying-capacity estimation.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coralfit {

enum class ModelGroup { acroporidae, other_hard_coral, abiotic, silt, other };
inline constexpr std::size_t kNumModelGroups = 5;

std::string to_string(ModelGroup g);
std::optional<ModelGroup> model_group_from_string(const std::string& s);

/// Raw taxon label -> model group. Lookups are case-insensitive and treat
/// '-', '_' and spaces alike; unknown labels map to `other`.
class Taxonomy {
 public:
  Taxonomy();  // built-in labels only
  void add(const std::string& raw_label, ModelGroup group);
  /// Second element is false when the label was not known.
  std::pair<ModelGroup, bool> lookup(const std::string& raw_label) const;
  /// Reads `raw_label,model_group` rows on top of the built-in labels.
  static Taxonomy parse(std::istream& in);

 private:
  std::map<std::string, ModelGroup> map_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct TransectRecord {
  std::string reef;
  std::string site;
  std::string transect;
  std::string date;  // ISO-8601
  double time = 0.0;  // decimal years
  std::string label;
  ModelGroup group = ModelGroup::other;
  double cover = 0.0;
};

struct ParsedSurvey {
  std::vector<TransectRecord> records;
  std::size_t rejected = 0;
  std::vector<std::string> warnings;
};

/// Header row `reef,site,transect,date,group,cover_percent`. Malformed rows
/// throw ParseError; covers outside [0,100] are rejected and counted.
ParsedSurvey parse_survey(std::istream& in, const Taxonomy& taxonomy = {});
void write_survey(std::ostream& out, const std::vector<TransectRecord>& records);

/// Optional `reef,site,K_override` metadata, keyed by site_key.
std::map<std::string, double> parse_site_metadata(std::istream& in);

std::string site_key(const std::string& reef, const std::string& site);

/// One survey visit of a site: per-transect group covers (summed over raw
/// labels) and their transect means and variances of the mean.
struct Visit {
  std::string date;
  double time = 0.0;
  std::vector<std::string> transects;  // sorted ids
  std::vector<std::array<double, kNumModelGroups>> cover;
  std::array<bool, kNumModelGroups> recorded{};
  std::array<double, kNumModelGroups> mean{};
  std::array<double, kNumModelGroups> var_mean{};
  double hard_coral_mean = 0.0;
  double hard_coral_var_mean = 0.0;
  bool missing_transects = false;
  bool silt = false;

  /// Acroporidae + other hard coral for each transect.
  std::vector<double> hard_coral() const;
};

struct SiteSeries {
  std::string reef;
  std::string site;
  std::vector<Visit> visits;  // sorted by time
  std::string key() const { return site_key(reef, site); }
};

/// Groups records by site and date. Throws on fewer than 2 transects at a
/// visit, or transect covers summing above 100.5%.
std::vector<SiteSeries> aggregate(const std::vector<TransectRecord>& records,
                                  std::size_t expected_transects = 5);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  std::size_t pairs = 0;
};

/// One-sided paired t-test for a decline from `before` to `after`.
/// Differences with zero spread give p = 0 for a strict decline and p = 1
/// otherwise.
TTest paired_decline_test(const std::vector<double>& before,
                          const std::vector<double>& after);

struct DisturbanceEvent {
  std::string site;
  std::size_t visit = 0;
  double time = 0.0;
  double t = 0.0;
  double p_value = 1.0;
};

/// Tests every consecutive visit pair of a site on total hard coral, with
/// transects paired by id.
std::vector<DisturbanceEvent> detect_disturbances(
    const SiteSeries& series, double p_threshold = 0.05,
    std::vector<std::string>* warnings = nullptr);

/// K = 100 - median abiotic cover over visits not flagged for silt; an
/// override always wins.
double estimate_K(const SiteSeries& series,
                  std::optional<double> override_K = std::nullopt);

}  // namespace coralfit
