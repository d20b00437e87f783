#include "icfringe/stackio.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "icfringe/config.hpp"
#include "icfringe/error.hpp"

namespace icfringe {

namespace {

template <typename U>
void put_le(std::string& buf, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((value >> (8 * i)) & 0xffu));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

bool read_exact(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedHeader, what); }

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

std::string optional_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

}  // namespace

std::uint64_t stack_file_size(std::uint32_t width, std::uint32_t height, std::uint32_t n_frames) {
  return kStackHeaderSize + 8ULL * n_frames + 4ULL * width * height * n_frames;
}

std::uint64_t write_stack_binary(const FrameStack& stack, std::ostream& out) {
  const auto w = static_cast<std::uint32_t>(stack.geometry.width);
  const auto h = static_cast<std::uint32_t>(stack.geometry.height);
  const auto n = static_cast<std::uint32_t>(stack.frames.size());
  if (stack.phases.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "frame stack has different numbers of phases and frames");
  }
  std::string buf;
  buf.reserve(static_cast<std::size_t>(stack_file_size(w, h, n)));
  buf.append(kStackMagic.data(), kStackMagic.size());
  put_le(buf, w);
  put_le(buf, h);
  put_le(buf, n);
  buf.append(16, '\0');
  for (double phase : stack.phases) put_le(buf, std::bit_cast<std::uint64_t>(phase));
  for (const Image<float>& frame : stack.frames) {
    if (frame.width != stack.geometry.width || frame.height != stack.geometry.height) {
      throw Error(ErrorCode::InvalidArgument, "frame dimensions disagree with the camera geometry");
    }
    for (float v : frame.data) put_le(buf, std::bit_cast<std::uint32_t>(v));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing frame stack");
  return buf.size();
}

FrameStack read_stack_binary(std::istream& in) {
  unsigned char header[kStackHeaderSize];
  if (!read_exact(in, header, kStackHeaderSize)) {
    throw Error(ErrorCode::TruncatedFile, "file ends inside the 33-byte header");
  }
  for (std::size_t i = 0; i < kStackMagic.size(); ++i) {
    if (static_cast<char>(header[i]) != kStackMagic[i]) malformed("bad magic; expected ICFS1");
  }
  const auto w = get_le<std::uint32_t>(header + 5);
  const auto h = get_le<std::uint32_t>(header + 9);
  const auto n = get_le<std::uint32_t>(header + 13);
  for (std::size_t i = 17; i < kStackHeaderSize; ++i) {
    if (header[i] != 0) malformed("reserved header bytes must be zero");
  }
  if (w == 0 || h == 0 || n == 0) malformed("width, height and n_frames must be >= 1");
  if (w > (1u << 16) || h > (1u << 16)) malformed("sensor dimensions are implausibly large");

  FrameStack stack;
  stack.geometry = CameraGeometry::centered(static_cast<int>(w), static_cast<int>(h), CameraGeometry{}.pixel_pitch);

  std::vector<unsigned char> buf(8ULL * n);
  if (!read_exact(in, buf.data(), buf.size())) throw Error(ErrorCode::TruncatedFile, "file ends inside the phase table");
  stack.phases.resize(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    stack.phases[k] = std::bit_cast<double>(get_le<std::uint64_t>(buf.data() + 8ULL * k));
  }
  const std::size_t pixels = static_cast<std::size_t>(w) * h;
  buf.resize(4 * pixels);
  stack.frames.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    if (!read_exact(in, buf.data(), buf.size())) {
      throw Error(ErrorCode::TruncatedFile, "file ends inside frame " + std::to_string(k));
    }
    Image<float> frame(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < pixels; ++i) frame.data[i] = std::bit_cast<float>(get_le<std::uint32_t>(buf.data() + 4 * i));
    stack.frames.push_back(std::move(frame));
  }
  if (in.peek() != std::char_traits<char>::eof()) malformed("trailing bytes after the last frame");
  return stack;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_metadata(const FrameStack& stack) {
  std::ostringstream os;
  const auto kv = [&](std::string_view key, const std::string& value) { os << key << " = " << value << '\n'; };
  os << "# icfringe frame-stack metadata\n";
  kv("width", std::to_string(stack.geometry.width));
  kv("height", std::to_string(stack.geometry.height));
  kv("n_frames", std::to_string(stack.frames.size()));
  kv("pixel_pitch", format_double(stack.geometry.pixel_pitch));
  kv("center_x", format_double(stack.geometry.center.x));
  kv("center_y", format_double(stack.geometry.center.y));
  const StackMetadata& m = stack.metadata;
  kv("source", m.source);
  if (m.setup) {
    kv("setup.lambda_p", format_double(m.setup->lambda_p));
    kv("setup.lambda_s", format_double(m.setup->lambda_s));
    kv("setup.lambda_i", format_double(m.setup->lambda_i));
    kv("setup.d", format_double(m.setup->d));
    kv("setup.f_c", format_double(m.setup->f_c));
    kv("setup.w_p", format_double(m.setup->w_p));
    kv("setup.L", format_double(m.setup->L));
  }
  if (m.model) kv("model", *m.model);
  if (m.sigma_c) kv("sigma_c", format_double(*m.sigma_c));
  if (m.sigma_env) kv("sigma_env", format_double(*m.sigma_env));
  if (m.noise) {
    kv("noise.photon_scale", format_double(m.noise->photon_scale));
    kv("noise.read_noise_sigma", format_double(m.noise->read_noise_sigma));
    kv("noise.background_level", format_double(m.noise->background_level));
    kv("noise.rng_seed", std::to_string(m.noise->rng_seed));
    kv("noise.shot_noise", m.noise->shot_noise ? "true" : "false");
  }
  return os.str();
}

void apply_metadata(FrameStack& stack, std::string_view text) {
  std::vector<KeyValue> entries;
  try {
    entries = parse_key_values(text);
  } catch (const Error& e) {
    malformed("metadata: " + e.detail());
  }
  StackMetadata meta;
  CameraGeometry geometry = stack.geometry;
  OpticalSetup setup;
  NoiseModel noise;
  bool have_setup = false;
  bool have_noise = false;

  const auto number = [](const KeyValue& kv) {
    try {
      return parse_double(kv);
    } catch (const Error& e) {
      malformed("metadata " + e.detail());
    }
  };
  const auto dimension = [&](const KeyValue& kv, std::size_t actual) {
    std::uint64_t v = 0;
    try {
      v = parse_uint64(kv);
    } catch (const Error& e) {
      malformed("metadata " + e.detail());
    }
    if (v != actual) {
      throw Error(ErrorCode::MetadataMismatch, "sidecar " + kv.key + " = " + kv.value + " but the stack has " +
                                                   std::to_string(actual));
    }
  };

  for (const KeyValue& kv : entries) {
    const std::string& k = kv.key;
    if (k == "width") {
      dimension(kv, static_cast<std::size_t>(stack.geometry.width));
    } else if (k == "height") {
      dimension(kv, static_cast<std::size_t>(stack.geometry.height));
    } else if (k == "n_frames") {
      dimension(kv, stack.frames.size());
    } else if (k == "pixel_pitch") {
      geometry.pixel_pitch = number(kv);
    } else if (k == "center_x") {
      geometry.center.x = number(kv);
    } else if (k == "center_y") {
      geometry.center.y = number(kv);
    } else if (k == "source") {
      meta.source = kv.value;
    } else if (k.starts_with("setup.")) {
      have_setup = true;
      const std::string field = k.substr(6);
      const double v = number(kv);
      if (field == "lambda_p") setup.lambda_p = v;
      else if (field == "lambda_s") setup.lambda_s = v;
      else if (field == "lambda_i") setup.lambda_i = v;
      else if (field == "d") setup.d = v;
      else if (field == "f_c") setup.f_c = v;
      else if (field == "w_p") setup.w_p = v;
      else if (field == "L") setup.L = v;
      else malformed("unknown metadata key " + k);
    } else if (k == "model") {
      meta.model = kv.value;
    } else if (k == "sigma_c") {
      meta.sigma_c = number(kv);
    } else if (k == "sigma_env") {
      meta.sigma_env = number(kv);
    } else if (k.starts_with("noise.")) {
      have_noise = true;
      const std::string field = k.substr(6);
      if (field == "photon_scale") noise.photon_scale = number(kv);
      else if (field == "read_noise_sigma") noise.read_noise_sigma = number(kv);
      else if (field == "background_level") noise.background_level = number(kv);
      else if (field == "rng_seed") {
        try {
          noise.rng_seed = parse_uint64(kv);
        } catch (const Error& e) {
          malformed("metadata " + e.detail());
        }
      } else if (field == "shot_noise") {
        try {
          noise.shot_noise = parse_bool(kv);
        } catch (const Error& e) {
          malformed("metadata " + e.detail());
        }
      } else {
        malformed("unknown metadata key " + k);
      }
    } else {
      malformed("unknown metadata key " + k);
    }
  }
  if (have_setup) meta.setup = setup;
  if (have_noise) meta.noise = noise;
  stack.geometry = geometry;
  stack.metadata = std::move(meta);
}

std::filesystem::path sidecar_path(const std::filesystem::path& stack_path) {
  std::filesystem::path p = stack_path;
  p += ".meta";
  return p;
}

std::uint64_t write_stack(const FrameStack& stack, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  const std::uint64_t bytes = write_stack_binary(stack, out);
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());

  std::ofstream meta(sidecar_path(path), std::ios::binary | std::ios::trunc);
  if (!meta) throw Error(ErrorCode::IoError, "cannot open " + sidecar_path(path).string() + " for writing");
  meta << format_metadata(stack);
  meta.close();
  if (!meta) throw Error(ErrorCode::IoError, "failed writing " + sidecar_path(path).string());
  return bytes;
}

FrameStack read_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  FrameStack stack = read_stack_binary(in);
  const auto meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    std::ifstream meta(meta_path, std::ios::binary);
    if (!meta) throw Error(ErrorCode::IoError, "cannot open " + meta_path.string());
    std::ostringstream ss;
    ss << meta.rdbuf();
    apply_metadata(stack, ss.str());
  }
  return stack;
}

void write_visibility_map_csv(const VisibilityMap& vmap, std::ostream& out) {
  out << "x,y,visibility,mean_intensity,mask,fit_residual\n";
  for (int y = 0; y < vmap.geometry.height; ++y) {
    for (int x = 0; x < vmap.geometry.width; ++x) {
      out << x << ',' << y << ',' << csv_number(vmap.visibility(x, y)) << ',' << csv_number(vmap.mean_intensity(x, y))
          << ',' << static_cast<int>(vmap.mask(x, y)) << ',' << csv_number(vmap.fit_residual(x, y)) << '\n';
    }
  }
}

void write_profile_csv(const RadialProfile& profile, std::ostream& out) {
  out << "radius_m,visibility,samples\n";
  for (std::size_t k = 0; k < profile.radii.size(); ++k) {
    out << csv_number(profile.radii[k]) << ',' << csv_number(profile.visibility[k]) << ',' << profile.sample_counts[k]
        << '\n';
  }
}

RadialProfile read_profile_csv(std::istream& in) {
  RadialProfile profile;
  std::string line;
  if (!std::getline(in, line) || line != "radius_m,visibility,samples") {
    malformed("radial profile CSV must start with 'radius_m,visibility,samples'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string r;
    std::string v;
    std::string n;
    if (!std::getline(row, r, ',') || !std::getline(row, v, ',') || !std::getline(row, n)) {
      malformed("radial profile CSV line " + std::to_string(line_no) + " needs 3 columns");
    }
    try {
      profile.radii.push_back(std::stod(r));
      profile.visibility.push_back(v == "nan" ? std::nan("") : std::stod(v));
      profile.sample_counts.push_back(std::stoi(n));
    } catch (const std::exception&) {
      malformed("radial profile CSV line " + std::to_string(line_no) + " is not numeric");
    }
  }
  return profile;
}

std::string estimate_csv_header() {
  return "sigma_c,variance,fwhm_camera_m,fwhm_q,regime_parameter,valid,theoretical_variance,peak_visibility,"
         "center_x,center_y,center_degenerate,profile_fit_sigma_c,bracket_lo,bracket_hi,iterations,roundtrip_error";
}

std::string estimate_csv_row(const CorrelationEstimate& e) {
  const auto& d = e.diagnostics;
  std::ostringstream os;
  os << csv_number(e.sigma_c) << ',' << csv_number(e.variance) << ',' << csv_number(e.fwhm_camera) << ','
     << csv_number(e.fwhm_q) << ',' << csv_number(e.regime_parameter) << ',' << (e.valid ? 1 : 0) << ','
     << optional_number(e.theoretical_variance) << ',' << optional_number(d.peak_visibility) << ','
     << (d.center ? csv_number(d.center->x) : "") << ',' << (d.center ? csv_number(d.center->y) : "") << ','
     << (d.center_degenerate ? 1 : 0) << ',' << optional_number(d.profile_fit_sigma_c) << ','
     << csv_number(d.bracket_lo) << ',' << csv_number(d.bracket_hi) << ',' << d.iterations << ','
     << csv_number(d.roundtrip_error);
  return os.str();
}

void write_estimate_csv(const CorrelationEstimate& estimate, std::ostream& out) {
  out << estimate_csv_header() << '\n' << estimate_csv_row(estimate) << '\n';
}

std::string estimate_report(const CorrelationEstimate& e) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "correlation width sigma_c    " << e.sigma_c << " m^-1\n";
  os << "variance sigma_c^2           " << e.variance << " m^-2\n";
  if (e.theoretical_variance) {
    os << "pump prediction 1/w_p^2      " << *e.theoretical_variance << " m^-2 (ratio "
       << e.variance / *e.theoretical_variance << ")\n";
  }
  os << "visibility FWHM (camera)     " << e.fwhm_camera * 1e3 << " mm\n";
  os << "visibility FWHM (q)          " << e.fwhm_q << " m^-1\n";
  os << "regime parameter 2 a s^2     " << e.regime_parameter << (e.valid ? " (valid)" : " (OUTSIDE REGIME)") << '\n';
  const auto& d = e.diagnostics;
  if (d.peak_visibility) os << "peak visibility              " << *d.peak_visibility << '\n';
  if (d.center) {
    os << "pattern center (px)          " << d.center->x << ", " << d.center->y
       << (d.center_degenerate ? " (degenerate score, centroid used)" : "") << '\n';
  }
  if (d.profile_fit_sigma_c) os << "profile-fit sigma_c          " << *d.profile_fit_sigma_c << " m^-1\n";
  os << "bisection                    [" << d.bracket_lo << ", " << d.bracket_hi << "] m^-1, " << d.iterations
     << " iterations, round-trip error " << d.roundtrip_error << '\n';
  return os.str();
}

}  // namespace icfringe
