#include "coralfit/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "coralfit/csv.hpp"

namespace coralfit {
namespace {

std::string normalise_key(std::string k) {
  for (char& c : k) {
    if (c == '_') c = '-';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return k;
}

double as_double(const std::string& key, const std::string& v) {
  const auto x = parse_number(v);
  if (!x) throw std::invalid_argument("config '" + key + "': not a number: " + v);
  return *x;
}

std::size_t as_count(const std::string& key, const std::string& v) {
  const double x = as_double(key, v);
  if (x < 0 || x != static_cast<double>(static_cast<std::uint64_t>(x))) {
    throw std::invalid_argument("config '" + key + "': not a non-negative integer: " + v);
  }
  return static_cast<std::size_t>(x);
}

bool as_bool(const std::string& key, const std::string& v) {
  const std::string t = normalise_key(trim(v));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw std::invalid_argument("config '" + key + "': not a boolean: " + v);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid config: " + what);
}

}  // namespace

void RunConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = normalise_key(trim(raw_key));
  const std::string v = trim(raw_value);
  if (key == "model") model = as_count(key, v);
  else if (key == "seed") fit.seed = as_count(key, v);
  else if (key == "jobs") jobs = as_count(key, v);
  else if (key == "chains") fit.chains = as_count(key, v);
  else if (key == "max-iters") fit.max_iterations = as_count(key, v);
  else if (key == "round-length") fit.round_length = as_count(key, v);
  else if (key == "thin") fit.thin = as_count(key, v);
  else if (key == "max-stored") fit.max_stored_per_chain = as_count(key, v);
  else if (key == "init-retries") fit.init_retries = as_count(key, v);
  else if (key == "rhat-threshold") fit.thresholds.r_hat = as_double(key, v);
  else if (key == "ess-threshold") fit.thresholds.ess = as_double(key, v);
  else if (key == "target-acceptance") fit.ram.target_acceptance = as_double(key, v);
  else if (key == "initial-scale") fit.ram.initial_scale = as_double(key, v);
  else if (key == "rel-tol") fit.solver.rel_tol = as_double(key, v);
  else if (key == "abs-tol") fit.solver.abs_tol = as_double(key, v);
  else if (key == "alpha-max") fit.alpha_prior.hi = as_double(key, v);
  else if (key == "gamma-max") fit.gamma_prior.hi = as_double(key, v);
  else if (key == "alpha-d-max") fit.alpha_d_prior.hi = as_double(key, v);
  else if (key == "p-threshold") p_threshold = as_double(key, v);
  else if (key == "min-post-visits") min_post_visits = as_count(key, v);
  else if (key == "expected-transects") expected_transects = as_count(key, v);
  else if (key == "predictive-draws") predictive_draws = as_count(key, v);
  else if (key == "exclude-initial") exclude_initial = as_bool(key, v);
  else if (key == "include-unconverged") include_unconverged = as_bool(key, v);
  else if (key == "taxonomy") taxonomy_path = v;
  else if (key == "site-metadata") site_metadata_path = v;
  else throw std::invalid_argument("unknown config key '" + raw_key + "'");
}

void RunConfig::load(std::istream& in) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(n) + ": expected key = value");
    }
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  load(in);
}

void RunConfig::validate() const {
  require(model == 1 || model == 2, "model must be 1 or 2");
  require(jobs >= 1, "jobs must be >= 1");
  require(p_threshold > 0.0 && p_threshold < 1.0, "p-threshold must lie in (0, 1)");
  require(min_post_visits >= 1, "min-post-visits must be >= 1");
  require(expected_transects >= 2, "expected-transects must be >= 2");
  require(predictive_draws >= 1, "predictive-draws must be >= 1");
  require(fit.seed >= 1, "seed must be positive");
  fit.validate();
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["model"] = std::to_string(model);
  kv["seed"] = std::to_string(fit.seed);
  kv["chains"] = std::to_string(fit.chains);
  kv["max-iters"] = std::to_string(fit.max_iterations);
  kv["round-length"] = std::to_string(fit.round_length);
  kv["thin"] = std::to_string(fit.thin);
  kv["max-stored"] = std::to_string(fit.max_stored_per_chain);
  kv["init-retries"] = std::to_string(fit.init_retries);
  kv["rhat-threshold"] = format_number(fit.thresholds.r_hat);
  kv["ess-threshold"] = format_number(fit.thresholds.ess);
  kv["target-acceptance"] = format_number(fit.ram.target_acceptance);
  kv["initial-scale"] = format_number(fit.ram.initial_scale);
  kv["rel-tol"] = format_number(fit.solver.rel_tol);
  kv["abs-tol"] = format_number(fit.solver.abs_tol);
  kv["alpha-max"] = format_number(fit.alpha_prior.hi);
  kv["gamma-max"] = format_number(fit.gamma_prior.hi);
  kv["alpha-d-max"] = format_number(fit.alpha_d_prior.hi);
  kv["p-threshold"] = format_number(p_threshold);
  kv["min-post-visits"] = std::to_string(min_post_visits);
  kv["expected-transects"] = std::to_string(expected_transects);
  kv["predictive-draws"] = std::to_string(predictive_draws);
  kv["exclude-initial"] = exclude_initial ? "true" : "false";
  kv["include-unconverged"] = include_unconverged ? "true" : "false";
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

}  // namespace coralfit
