#pragma once

// File-based pipeline commands behind the coralfit executable.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coralfit/config.hpp"
#include "coralfit/sampler.hpp"

namespace coralfit::cli {

namespace fs = std::filesystem;

/// Writes via a temporary sibling file and a rename.
void write_atomic(const fs::path& path, const std::string& content);

/// `# coralfit <what> config_hash=... seed=...` line.
std::string output_header(const std::string& what, const RunConfig& cfg);

/// File-system-safe, collision-resistant stem for a trajectory id.
std::string file_stem(const std::string& trajectory_id);

struct DrawsFile {
  std::string trajectory;
  std::size_t model = 1;
  bool converged = false;
  std::vector<std::string> names;
  std::vector<std::size_t> chain;
  std::vector<std::size_t> iteration;
  std::vector<double> values;  // row-major

  std::size_t num_params() const { return names.size(); }
  std::size_t num_rows() const { return chain.size(); }
  /// Per-chain runs rebuilt from the rows.
  std::vector<ChainRun> chains() const;
};

std::string format_draws(const FitResult& fit, std::size_t model, const RunConfig& cfg);
DrawsFile read_draws(const fs::path& path);

struct SegmentSummary {
  std::size_t sites = 0;
  std::size_t events = 0;
  std::size_t trajectories = 0;
  std::vector<std::string> warnings;
};
SegmentSummary cmd_segment(const fs::path& survey, const fs::path& out_dir,
                           const RunConfig& cfg);

struct FitSummary {
  std::size_t fitted = 0;
  std::size_t converged = 0;
  std::vector<std::string> errors;
};
FitSummary cmd_fit(const fs::path& trajectories, const fs::path& out_dir,
                   const RunConfig& cfg);

void cmd_diagnose(const fs::path& draws_dir, const fs::path& out_csv,
                  const RunConfig& cfg);

struct PredictSummary {
  std::size_t predicted = 0;
  std::vector<std::string> skipped;
};
PredictSummary cmd_predict(const fs::path& draws_dir, const fs::path& trajectories,
                           const fs::path& out_dir, const RunConfig& cfg);

void cmd_coverage(const fs::path& quantiles, const fs::path& out_csv,
                  const RunConfig& cfg);

void cmd_simulate(const fs::path& params_json, const fs::path& out_csv,
                  const RunConfig& cfg);

/// kind: bands | coverage | draws | richards. Returns the files written.
std::vector<fs::path> cmd_plot(const std::string& kind, const fs::path& input,
                               const fs::path& out, const fs::path& quantiles = {});

/// Single-phase Richards curves for several shape values from a common start.
struct RichardsFigure {
  std::vector<double> gammas;
  std::vector<double> times;
  std::vector<std::vector<double>> curves;
  std::string svg;
};
RichardsFigure richards_figure(const std::vector<double>& gammas = {1e-6, 1.0, 3.0},
                               double K = 90.0, double alpha = 0.5, double c0 = 5.0,
                               double horizon = 40.0, std::size_t points = 401);

/// Command-line entry point; returns the process exit status.
int run(int argc, char** argv);

}  // namespace coralfit::cli
