#pragma once

// Run configuration shared by every command, loadable from a flat
// `key = value` file whose keys mirror the command-line flags.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "coralfit/sampler.hpp"

namespace coralfit {

struct RunConfig {
  std::size_t model = 1;
  FitConfig fit;
  std::size_t jobs = 1;
  double p_threshold = 0.05;
  std::size_t min_post_visits = 3;
  std::size_t expected_transects = 5;
  std::size_t predictive_draws = 4000;
  bool exclude_initial = false;
  bool include_unconverged = false;
  std::string taxonomy_path;
  std::string site_metadata_path;

  /// Throws std::invalid_argument naming the offending setting.
  void validate() const;

  /// Applies one setting; '-' and '_' are interchangeable in keys.
  void set(const std::string& key, const std::string& value);

  /// Reads `key = value` lines; '#' starts a comment.
  void load(std::istream& in);
  void load_file(const std::string& path);

  /// Sorted `key=value` lines of every setting that affects results (paths
  /// and job count excluded).
  std::string canonical() const;
  /// FNV-1a hash of canonical(), as 16 hex digits.
  std::string hash() const;
};

std::uint64_t fnv1a(const std::string& data);

}  // namespace coralfit
