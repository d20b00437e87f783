#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icfringe/estimate.hpp"
#include "icfringe/model.hpp"
#include "icfringe/synth.hpp"

namespace icfringe {

/// One `key = value` line. Blank lines and text after '#' are ignored.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Throws ConfigError (with the line number) for lines without '=' or with an empty key.
std::vector<KeyValue> parse_key_values(std::string_view text);

double parse_double(const KeyValue& kv);
std::int64_t parse_int(const KeyValue& kv);
std::uint64_t parse_uint64(const KeyValue& kv);
bool parse_bool(const KeyValue& kv);
/// Comma-separated list of doubles.
std::vector<double> parse_double_list(const KeyValue& kv);

enum class ModelKind { Gaussian, Spdc };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

struct SweepAxes {
  std::vector<double> w_p;
  std::vector<double> d;
  std::vector<double> photon_scale;
  /// Noise realizations per grid point; noiseless points always run once.
  int seeds = 1;
};

/// Everything a run needs. Every key is optional; absent keys keep the defaults.
///
/// Setup:     lambda_p lambda_s lambda_i d f_c w_p L energy_tolerance
/// Model:     model (gaussian|spdc) sigma_c (default 1/w_p) sigma_env
/// Geometry:  width height pixel_pitch center_x center_y
/// Noise:     photon_scale read_noise_sigma background_level seed shot_noise
/// Phases:    n_phases
/// Analysis:  background blur_sigma mask_threshold mask_disk_radius
///            search_window center_angles n_angles radial_step regime_bound
///            sigma_min sigma_max
/// Sweep:     sweep_w_p sweep_d sweep_photon_scale sweep_seeds
struct RunConfig {
  OpticalSetup setup;
  double energy_tolerance = 1e-3;
  ModelKind model = ModelKind::Gaussian;
  std::optional<double> sigma_c;
  SignalEnvelope envelope;
  CameraGeometry geometry;
  bool center_given = false;
  NoiseModel noise;
  int n_phases = 25;
  AnalysisConfig analysis;
  SweepAxes sweep;

  /// Line of every key that appeared in the file.
  std::map<std::string, int, std::less<>> key_lines;

  bool has_key(std::string_view key) const;

  /// The correlation model this config describes.
  CorrelationModel correlation_model() const;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Throws ConfigError for unknown keys, unparsable values, or violated constraints.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// `key = value` echo of every parameter, in a fixed order.
std::string describe(const RunConfig& config);

}  // namespace icfringe
