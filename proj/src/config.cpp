#include "icfringe/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "icfringe/error.hpp"
#include "icfringe/stackio.hpp"

namespace icfringe {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void config_error(const KeyValue& kv, const std::string& what) {
  std::ostringstream os;
  os << "line " << kv.line << ": " << kv.key << ": " << what;
  throw Error(ErrorCode::ConfigError, os.str());
}

[[noreturn]] void config_error(const RunConfig& cfg, std::string_view key, const std::string& what) {
  std::ostringstream os;
  if (const auto it = cfg.key_lines.find(key); it != cfg.key_lines.end()) os << "line " << it->second << ": ";
  os << key << ": " << what;
  throw Error(ErrorCode::ConfigError, os.str());
}

double positive(const KeyValue& kv) {
  const double v = parse_double(kv);
  if (!(v > 0.0)) config_error(kv, "must be > 0 (got " + kv.value + ")");
  return v;
}

double non_negative(const KeyValue& kv) {
  const double v = parse_double(kv);
  if (!(v >= 0.0)) config_error(kv, "must be >= 0 (got " + kv.value + ")");
  return v;
}

int int_at_least(const KeyValue& kv, std::int64_t lo) {
  const std::int64_t v = parse_int(kv);
  if (v < lo || v > 1'000'000'000) config_error(kv, "must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

using Setter = std::function<void(RunConfig&, const KeyValue&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"lambda_p", [](RunConfig& c, const KeyValue& kv) { c.setup.lambda_p = positive(kv); }},
      {"lambda_s", [](RunConfig& c, const KeyValue& kv) { c.setup.lambda_s = positive(kv); }},
      {"lambda_i", [](RunConfig& c, const KeyValue& kv) { c.setup.lambda_i = positive(kv); }},
      {"d", [](RunConfig& c, const KeyValue& kv) { c.setup.d = non_negative(kv); }},
      {"f_c", [](RunConfig& c, const KeyValue& kv) { c.setup.f_c = positive(kv); }},
      {"w_p", [](RunConfig& c, const KeyValue& kv) { c.setup.w_p = positive(kv); }},
      {"L", [](RunConfig& c, const KeyValue& kv) { c.setup.L = positive(kv); }},
      {"energy_tolerance", [](RunConfig& c, const KeyValue& kv) { c.energy_tolerance = positive(kv); }},
      {"model",
       [](RunConfig& c, const KeyValue& kv) {
         try {
           c.model = parse_model_kind(kv.value);
         } catch (const Error& e) {
           config_error(kv, e.detail());
         }
       }},
      {"sigma_c", [](RunConfig& c, const KeyValue& kv) { c.sigma_c = positive(kv); }},
      {"sigma_env", [](RunConfig& c, const KeyValue& kv) { c.envelope.sigma_env = positive(kv); }},
      {"width", [](RunConfig& c, const KeyValue& kv) { c.geometry.width = int_at_least(kv, 16); }},
      {"height", [](RunConfig& c, const KeyValue& kv) { c.geometry.height = int_at_least(kv, 16); }},
      {"pixel_pitch", [](RunConfig& c, const KeyValue& kv) { c.geometry.pixel_pitch = positive(kv); }},
      {"center_x", [](RunConfig& c, const KeyValue& kv) { c.geometry.center.x = parse_double(kv); }},
      {"center_y", [](RunConfig& c, const KeyValue& kv) { c.geometry.center.y = parse_double(kv); }},
      {"photon_scale", [](RunConfig& c, const KeyValue& kv) { c.noise.photon_scale = non_negative(kv); }},
      {"read_noise_sigma", [](RunConfig& c, const KeyValue& kv) { c.noise.read_noise_sigma = non_negative(kv); }},
      {"background_level", [](RunConfig& c, const KeyValue& kv) { c.noise.background_level = parse_double(kv); }},
      {"seed", [](RunConfig& c, const KeyValue& kv) { c.noise.rng_seed = parse_uint64(kv); }},
      {"shot_noise", [](RunConfig& c, const KeyValue& kv) { c.noise.shot_noise = parse_bool(kv); }},
      {"n_phases", [](RunConfig& c, const KeyValue& kv) { c.n_phases = int_at_least(kv, 3); }},
      {"background", [](RunConfig& c, const KeyValue& kv) { c.analysis.background = parse_double(kv); }},
      {"blur_sigma", [](RunConfig& c, const KeyValue& kv) { c.analysis.blur_sigma = non_negative(kv); }},
      {"mask_threshold",
       [](RunConfig& c, const KeyValue& kv) {
         const double v = non_negative(kv);
         if (v >= 1.0) config_error(kv, "must lie in [0, 1)");
         c.analysis.mask.threshold_fraction = v;
       }},
      {"mask_disk_radius", [](RunConfig& c, const KeyValue& kv) { c.analysis.mask.disk_radius = positive(kv); }},
      {"search_window", [](RunConfig& c, const KeyValue& kv) { c.analysis.center.search_window = int_at_least(kv, 1); }},
      {"center_angles", [](RunConfig& c, const KeyValue& kv) { c.analysis.center.n_angles = int_at_least(kv, 1); }},
      {"n_angles", [](RunConfig& c, const KeyValue& kv) { c.analysis.n_angles = int_at_least(kv, 1); }},
      {"radial_step", [](RunConfig& c, const KeyValue& kv) { c.analysis.radial_step = positive(kv); }},
      {"regime_bound", [](RunConfig& c, const KeyValue& kv) { c.analysis.inversion.regime_bound = positive(kv); }},
      {"sigma_min", [](RunConfig& c, const KeyValue& kv) { c.analysis.inversion.sigma_min = positive(kv); }},
      {"sigma_max", [](RunConfig& c, const KeyValue& kv) { c.analysis.inversion.sigma_max = positive(kv); }},
      {"sweep_w_p",
       [](RunConfig& c, const KeyValue& kv) {
         c.sweep.w_p = parse_double_list(kv);
         for (double v : c.sweep.w_p) {
           if (!(v > 0.0)) config_error(kv, "every entry must be > 0");
         }
       }},
      {"sweep_d",
       [](RunConfig& c, const KeyValue& kv) {
         c.sweep.d = parse_double_list(kv);
         for (double v : c.sweep.d) {
           if (!(v >= 0.0)) config_error(kv, "every entry must be >= 0");
         }
       }},
      {"sweep_photon_scale",
       [](RunConfig& c, const KeyValue& kv) {
         c.sweep.photon_scale = parse_double_list(kv);
         for (double v : c.sweep.photon_scale) {
           if (!(v >= 0.0)) config_error(kv, "every entry must be >= 0");
         }
       }},
      {"sweep_seeds", [](RunConfig& c, const KeyValue& kv) { c.sweep.seeds = int_at_least(kv, 1); }},
  };
  return table;
}

}  // namespace

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    KeyValue kv{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
    if (kv.key.empty()) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": empty key");
    }
    out.push_back(std::move(kv));
  }
  return out;
}

double parse_double(const KeyValue& kv) {
  double v = 0.0;
  const char* first = kv.value.data();
  const char* last = first + kv.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) config_error(kv, "cannot parse '" + kv.value + "' as a number");
  return v;
}

std::int64_t parse_int(const KeyValue& kv) {
  std::int64_t v = 0;
  const char* first = kv.value.data();
  const char* last = first + kv.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) config_error(kv, "cannot parse '" + kv.value + "' as an integer");
  return v;
}

std::uint64_t parse_uint64(const KeyValue& kv) {
  std::uint64_t v = 0;
  const char* first = kv.value.data();
  const char* last = first + kv.value.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) config_error(kv, "cannot parse '" + kv.value + "' as an unsigned integer");
  return v;
}

bool parse_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  config_error(kv, "expected true or false, got '" + kv.value + "'");
}

std::vector<double> parse_double_list(const KeyValue& kv) {
  std::vector<double> out;
  std::string_view rest = kv.value;
  while (true) {
    const auto comma = rest.find(',');
    KeyValue item{kv.key, std::string(trim(rest.substr(0, comma))), kv.line};
    out.push_back(parse_double(item));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

std::string_view to_string(ModelKind kind) noexcept { return kind == ModelKind::Gaussian ? "gaussian" : "spdc"; }

ModelKind parse_model_kind(std::string_view text) {
  if (text == "gaussian") return ModelKind::Gaussian;
  if (text == "spdc") return ModelKind::Spdc;
  throw Error(ErrorCode::ConfigError, "model must be 'gaussian' or 'spdc', got '" + std::string(text) + "'");
}

bool RunConfig::has_key(std::string_view key) const {
  return key_lines.find(key) != key_lines.end();
}

CorrelationModel RunConfig::correlation_model() const {
  if (model == ModelKind::Spdc) return SpdcCorrelationModel{setup};
  return GaussianCorrelationModel{sigma_c.value_or(1.0 / setup.w_p)};
}

void RunConfig::validate() const {
  try {
    setup.validate(energy_tolerance);
  } catch (const Error& e) {
    // Setup messages start with the field name.
    const std::string& msg = e.detail();
    const std::string field = msg.substr(0, msg.find(' '));
    config_error(*this, field, msg.substr(msg.find(' ') + 1));
  }
  const auto inside = [](double v, int size) { return v >= 0.0 && v <= size - 1.0; };
  if (!inside(geometry.center.x, geometry.width)) config_error(*this, "center_x", "must lie inside the sensor");
  if (!inside(geometry.center.y, geometry.height)) config_error(*this, "center_y", "must lie inside the sensor");
  if (analysis.inversion.sigma_max && !(*analysis.inversion.sigma_max > analysis.inversion.sigma_min)) {
    config_error(*this, "sigma_max", "must exceed sigma_min");
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  const auto entries = parse_key_values(text);
  for (const KeyValue& kv : entries) {
    const auto it = setters().find(kv.key);
    if (it == setters().end()) config_error(kv, "unknown key");
    if (cfg.has_key(kv.key)) config_error(kv, "duplicate key");
    it->second(cfg, kv);
    cfg.key_lines.emplace(kv.key, kv.line);
  }
  // Re-center a resized sensor unless the center was given explicitly.
  cfg.center_given = cfg.has_key("center_x") || cfg.has_key("center_y");
  if (!cfg.center_given) {
    cfg.geometry.center = {(cfg.geometry.width - 1) / 2.0, (cfg.geometry.height - 1) / 2.0};
  } else {
    if (!cfg.has_key("center_x")) cfg.geometry.center.x = (cfg.geometry.width - 1) / 2.0;
    if (!cfg.has_key("center_y")) cfg.geometry.center.y = (cfg.geometry.height - 1) / 2.0;
  }
  cfg.analysis.setup = cfg.setup;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string describe(const RunConfig& c) {
  std::ostringstream os;
  const auto line = [&](std::string_view key, const std::string& value) { os << key << " = " << value << '\n'; };
  const auto num = [](double v) { return format_double(v); };
  line("lambda_p", num(c.setup.lambda_p));
  line("lambda_s", num(c.setup.lambda_s));
  line("lambda_i", num(c.setup.lambda_i));
  line("d", num(c.setup.d));
  line("f_c", num(c.setup.f_c));
  line("w_p", num(c.setup.w_p));
  line("L", num(c.setup.L));
  line("model", std::string(to_string(c.model)));
  line("sigma_c", num(c.sigma_c.value_or(1.0 / c.setup.w_p)));
  line("sigma_env", num(c.envelope.sigma_env));
  line("width", std::to_string(c.geometry.width));
  line("height", std::to_string(c.geometry.height));
  line("pixel_pitch", num(c.geometry.pixel_pitch));
  line("center_x", num(c.geometry.center.x));
  line("center_y", num(c.geometry.center.y));
  line("photon_scale", num(c.noise.photon_scale));
  line("read_noise_sigma", num(c.noise.read_noise_sigma));
  line("background_level", num(c.noise.background_level));
  line("seed", std::to_string(c.noise.rng_seed));
  line("shot_noise", c.noise.shot_noise ? "true" : "false");
  line("n_phases", std::to_string(c.n_phases));
  line("regime_parameter", num(2.0 * c.setup.phase_coefficient() * std::pow(c.sigma_c.value_or(1.0 / c.setup.w_p), 2)));
  return os.str();
}

}  // namespace icfringe
