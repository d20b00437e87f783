#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "icfringe/config.hpp"
#include "icfringe/estimate.hpp"

namespace icfringe {

/// Command-line flags shared by every subcommand.
struct CommandOptions {
  std::optional<std::filesystem::path> config_path;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  /// Falls back to ICFRINGE_THREADS, then 1.
  std::optional<int> threads;
  std::optional<ModelKind> model;
};

/// Loads the config (defaults when no path is given) and applies the flag overrides.
RunConfig resolve_config(const CommandOptions& options);

/// Writes <out_dir>/stack.icfs and its sidecar; echoes the parameters to `log`.
std::filesystem::path cmd_simulate(const CommandOptions& options, std::ostream& log);

/// Writes visibility_map.csv, radial_profile.csv, estimate.csv and report.txt to out_dir.
/// The optical setup comes from the config when it sets any setup key, otherwise
/// from the stack sidecar, otherwise the defaults.
Analysis cmd_analyze(const std::filesystem::path& stack_path, const CommandOptions& options, std::ostream& log);

struct SweepRow {
  double w_p = 0.0;
  double d = 0.0;
  double photon_scale = 0.0;
  int n_seeds = 0;
  int n_ok = 0;
  double sigma_c_true = 0.0;
  /// NaN outside the regime or for d = 0.
  double fwhm_true = 0.0;
  double fwhm = 0.0;
  double fwhm_std = 0.0;
  double sigma_c = 0.0;
  double variance = 0.0;
  double variance_std = 0.0;
  double inverse_wp2 = 0.0;
  double regime_parameter = 0.0;
  bool regime_valid = false;
  /// "ok", or the error code of the first failed realization.
  std::string status;
};

/// Grid over sweep_w_p x sweep_d x sweep_photon_scale (empty axes take the
/// config value), simulated and analyzed in parallel; rows in grid order.
std::vector<SweepRow> run_sweep(const RunConfig& config);

std::string sweep_csv_header();
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Writes <out_dir>/sweep.csv.
std::filesystem::path cmd_sweep(const CommandOptions& options, std::ostream& log);

/// Line plot of radial-profile CSVs as SVG.
void write_profile_svg(const std::vector<std::filesystem::path>& profiles, const std::filesystem::path& out);

/// Full command line. Returns the process exit status: 0 success, 1 input
/// error, 2 numerical or regime failure, 3 I/O failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace icfringe
