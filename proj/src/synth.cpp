#include "icfringe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "icfringe/error.hpp"
#include "icfringe/parallel.hpp"

namespace icfringe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// SplitMix64 as a standard UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel) noexcept {
  return mix64(mix64(mix64(seed) ^ (frame + 0x632be59bd9b4e019ULL)) ^ (pixel + 0x8cb92ba72f3d8dd7ULL));
}

// Complex coherence of an SPDC model tabulated on a uniform |q_S| grid. The
// quadratic fringe chirp of the equivalent Gaussian model is divided out before
// cubic Lagrange interpolation and restored afterwards.
class RadialCoherenceTable {
 public:
  RadialCoherenceTable(const CorrelationModel& model, const OpticalSetup& setup, double q_max,
                       const QuadratureOptions& options, int threads) {
    const double alpha = setup.phase_coefficient();
    const double width = correlation_width(model);
    chirp_ = alpha / (1.0 + 4.0 * alpha * alpha * std::pow(width, 4));
    step_ = width / 10.0;
    const std::size_t n = static_cast<std::size_t>(std::ceil(q_max / step_)) + 4;
    values_.resize(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        const double q = static_cast<double>(k) * step_;
        const FringeTerms t = fringe_terms(model, setup, {q, 0.0}, options);
        values_[k] = t.coherence / t.mass * std::polar(1.0, -chirp_ * q * q);
      }
    });
  }

  std::complex<double> operator()(double q) const {
    const double pos = q / step_;
    const auto base = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(pos)) - 1, 0,
                                                 static_cast<std::ptrdiff_t>(values_.size()) - 4);
    const double t = pos - static_cast<double>(base);
    std::complex<double> sum{0.0, 0.0};
    for (int i = 0; i < 4; ++i) {
      double w = 1.0;
      for (int j = 0; j < 4; ++j) {
        if (j != i) w *= (t - j) / static_cast<double>(i - j);
      }
      sum += w * values_[static_cast<std::size_t>(base + i)];
    }
    return sum * std::polar(1.0, chirp_ * q * q);
  }

 private:
  double chirp_ = 0.0;
  double step_ = 1.0;
  std::vector<std::complex<double>> values_;
};

std::string model_name(const CorrelationModel& model) {
  return std::holds_alternative<GaussianCorrelationModel>(model) ? "gaussian" : "spdc";
}

}  // namespace

void CameraGeometry::validate() const {
  if (width < 16 || height < 16) {
    throw Error(ErrorCode::InvalidArgument, "camera width and height must be >= 16 pixels");
  }
  if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) {
    throw Error(ErrorCode::InvalidArgument, "pixel_pitch must be finite and > 0");
  }
  if (!(center.x >= 0.0 && center.x <= width - 1.0 && center.y >= 0.0 && center.y <= height - 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "pattern center must lie inside the sensor");
  }
}

CameraGeometry CameraGeometry::centered(int width, int height, double pixel_pitch) {
  return {width, height, pixel_pitch, {(width - 1) / 2.0, (height - 1) / 2.0}};
}

void NoiseModel::validate() const {
  if (!(photon_scale >= 0.0) || !std::isfinite(photon_scale)) {
    throw Error(ErrorCode::InvalidArgument, "photon_scale must be finite and >= 0");
  }
  if (!(read_noise_sigma >= 0.0) || !std::isfinite(read_noise_sigma)) {
    throw Error(ErrorCode::InvalidArgument, "read_noise_sigma must be finite and >= 0");
  }
  if (!std::isfinite(background_level)) {
    throw Error(ErrorCode::InvalidArgument, "background_level must be finite");
  }
}

NoiseModel NoiseModel::noiseless(double photon_scale, double background_level) {
  NoiseModel n;
  n.photon_scale = photon_scale;
  n.background_level = background_level;
  n.shot_noise = false;
  return n;
}

void FrameStack::validate() const {
  geometry.validate();
  if (phases.empty()) throw Error(ErrorCode::InvalidArgument, "frame stack has no phases");
  if (phases.size() != frames.size()) {
    throw Error(ErrorCode::InvalidArgument, "frame stack has different numbers of phases and frames");
  }
  for (std::size_t k = 0; k < phases.size(); ++k) {
    if (!(phases[k] >= 0.0 && phases[k] < kTwoPi)) {
      throw Error(ErrorCode::InvalidArgument, "phases must lie in [0, 2 pi)");
    }
    if (k > 0 && !(phases[k] > phases[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "phases must be strictly increasing");
    }
    if (frames[k].width != geometry.width || frames[k].height != geometry.height ||
        frames[k].size() != static_cast<std::size_t>(geometry.width) * geometry.height) {
      throw Error(ErrorCode::InvalidArgument, "frame dimensions disagree with the camera geometry");
    }
  }
}

std::vector<double> uniform_phases(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "number of phases must be >= 1");
  std::vector<double> phases(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) phases[static_cast<std::size_t>(k)] = kTwoPi * k / n;
  return phases;
}

TransverseWaveVector pixel_to_q(const PixelCoord& pixel, const CameraGeometry& geometry, const OpticalSetup& setup) {
  const double per_pixel = geometry.pixel_pitch / setup.camera_scale();
  return {(pixel.x - geometry.center.x) * per_pixel, (pixel.y - geometry.center.y) * per_pixel};
}

PixelCoord q_to_pixel(const TransverseWaveVector& q, const CameraGeometry& geometry, const OpticalSetup& setup) {
  const double per_q = setup.camera_scale() / geometry.pixel_pitch;
  return {geometry.center.x + q.qx * per_q, geometry.center.y + q.qy * per_q};
}

ExpectedStack render_expected(const CorrelationModel& model, const SignalEnvelope& envelope,
                              const OpticalSetup& setup, const CameraGeometry& geometry,
                              const std::vector<double>& phases, int threads, const QuadratureOptions& options) {
  geometry.validate();
  envelope.validate();
  setup.validate();
  if (phases.empty()) throw Error(ErrorCode::InvalidArgument, "at least one phase is required");

  const int w = geometry.width;
  const int h = geometry.height;

  ExpectedStack out;
  out.geometry = geometry;
  out.phases = phases;
  out.frames.assign(phases.size(), Image<double>(w, h));
  out.metadata.source = "synthetic";
  out.metadata.setup = setup;
  out.metadata.model = model_name(model);
  out.metadata.sigma_c = correlation_width(model);
  out.metadata.sigma_env = envelope.sigma_env;

  std::vector<double> cos_phi(phases.size());
  std::vector<double> sin_phi(phases.size());
  for (std::size_t k = 0; k < phases.size(); ++k) {
    cos_phi[k] = std::cos(phases[k]);
    sin_phi[k] = std::sin(phases[k]);
  }

  const auto store = [&](int x, int y, const TransverseWaveVector& q_s, double mass, std::complex<double> coherence) {
    const double env = envelope(q_s);
    for (std::size_t k = 0; k < phases.size(); ++k) {
      const double modulated = coherence.real() * cos_phi[k] - coherence.imag() * sin_phi[k];
      out.frames[k](x, y) = 0.5 * env * (mass + modulated);
    }
  };

  if (const auto* gaussian = std::get_if<GaussianCorrelationModel>(&model)) {
    gaussian->validate();
    // The Gaussian tensor sum factors per axis; q_Sx is shared by a column and q_Sy by a row.
    const double alpha = setup.phase_coefficient();
    std::vector<AxisTerms> columns(static_cast<std::size_t>(w));
    std::vector<AxisTerms> rows(static_cast<std::size_t>(h));
    parallel_for(columns.size() + rows.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        if (k < columns.size()) {
          const double qx = pixel_to_q({static_cast<double>(k), 0.0}, geometry, setup).qx;
          columns[k] = gaussian_axis_terms(gaussian->sigma_c, alpha, qx, options);
        } else {
          const double qy = pixel_to_q({0.0, static_cast<double>(k - columns.size())}, geometry, setup).qy;
          rows[k - columns.size()] = gaussian_axis_terms(gaussian->sigma_c, alpha, qy, options);
        }
      }
    });
    parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t y = begin; y < end; ++y) {
        for (int x = 0; x < w; ++x) {
          const FringeTerms t = combine_axes(columns[static_cast<std::size_t>(x)], rows[y], options);
          const auto q_s = pixel_to_q({static_cast<double>(x), static_cast<double>(y)}, geometry, setup);
          store(x, static_cast<int>(y), q_s, t.mass, t.coherence);
        }
      }
    });
    return out;
  }

  std::get<SpdcCorrelationModel>(model).validate();
  double q_max = 0.0;
  for (const PixelCoord corner : {PixelCoord{0, 0}, PixelCoord{w - 1.0, 0}, PixelCoord{0, h - 1.0},
                                  PixelCoord{w - 1.0, h - 1.0}}) {
    q_max = std::max(q_max, pixel_to_q(corner, geometry, setup).norm());
  }
  const RadialCoherenceTable table(model, setup, q_max, options, threads);
  parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto q_s = pixel_to_q({static_cast<double>(x), static_cast<double>(y)}, geometry, setup);
        const double q = q_s.norm();
        // Joint rotation leaves the integral unchanged, so the coherence depends on |q_S| only.
        store(x, static_cast<int>(y), q_s, 1.0, table(q));
      }
    }
  });
  return out;
}

FrameStack realize(const ExpectedStack& expected, const NoiseModel& noise, int threads) {
  noise.validate();
  FrameStack stack;
  stack.geometry = expected.geometry;
  stack.phases = expected.phases;
  stack.metadata = expected.metadata;
  stack.metadata.noise = noise;
  stack.frames.reserve(expected.frames.size());

  const bool sample = noise.shot_noise;
  const bool read = noise.read_noise_sigma > 0.0;
  for (std::size_t k = 0; k < expected.frames.size(); ++k) {
    const Image<double>& src = expected.frames[k];
    Image<float> frame(src.width, src.height);
    parallel_for(src.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        double photons = noise.photon_scale * src.data[i];
        if (sample || read) {
          SplitMix64 rng(stream_key(noise.rng_seed, k, i));
          if (sample) {
            if (photons > 0.0) {
              std::poisson_distribution<long long> poisson(photons);
              photons = static_cast<double>(poisson(rng));
            } else {
              photons = 0.0;
            }
          }
          if (read) {
            std::normal_distribution<double> gauss(0.0, noise.read_noise_sigma);
            photons += gauss(rng);
          }
        }
        frame.data[i] = static_cast<float>(photons + noise.background_level);
      }
    });
    stack.frames.push_back(std::move(frame));
  }
  return stack;
}

FrameStack synthesize_stack(const CorrelationModel& model, const SignalEnvelope& envelope,
                            const OpticalSetup& setup, const CameraGeometry& geometry, const NoiseModel& noise,
                            const std::vector<double>& phases, int threads, const QuadratureOptions& options) {
  noise.validate();
  return realize(render_expected(model, envelope, setup, geometry, phases, threads, options), noise, threads);
}

}  // namespace icfringe
