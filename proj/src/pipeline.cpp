#include "icfringe/pipeline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "icfringe/error.hpp"
#include "icfringe/parallel.hpp"

namespace icfringe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> blur_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  }
  return k;
}

// One separable pass. Weights are renormalized over the taps that land inside the image.
void convolve_axis(const Image<double>& src, Image<double>& dst, const std::vector<double>& kernel, bool horizontal) {
  const int radius = static_cast<int>(kernel.size() / 2);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      double acc = 0.0;
      double norm = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int sx = horizontal ? x + t : x;
        const int sy = horizontal ? y : y + t;
        if (!src.contains(sx, sy)) continue;
        const double w = kernel[static_cast<std::size_t>(t + radius)];
        acc += w * src(sx, sy);
        norm += w;
      }
      dst(x, y) = acc / norm;
    }
  }
}

double disk_mean(const Image<double>& intensity, const PixelCoord& center, double radius) {
  double sum = 0.0;
  int count = 0;
  const int x0 = std::max(0, static_cast<int>(std::floor(center.x - radius)));
  const int x1 = std::min(intensity.width - 1, static_cast<int>(std::ceil(center.x + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(center.y - radius)));
  const int y1 = std::min(intensity.height - 1, static_cast<int>(std::ceil(center.y + radius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - center.x;
      const double dy = y - center.y;
      if (dx * dx + dy * dy <= radius * radius && std::isfinite(intensity(x, y))) {
        sum += intensity(x, y);
        ++count;
      }
    }
  }
  return count > 0 ? sum / count : kNaN;
}

PixelCoord weighted_centroid(const Image<double>& intensity, const Image<std::uint8_t>* mask) {
  double sw = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (int y = 0; y < intensity.height; ++y) {
    for (int x = 0; x < intensity.width; ++x) {
      if (mask && !(*mask)(x, y)) continue;
      const double w = intensity(x, y);
      if (!(w > 0.0) || !std::isfinite(w)) continue;
      sw += w;
      sx += w * x;
      sy += w * y;
    }
  }
  if (!(sw > 0.0)) {
    return {(intensity.width - 1) / 2.0, (intensity.height - 1) / 2.0};
  }
  return {sx / sw, sy / sw};
}

struct RayStats {
  double correlation = 0.0;
  bool valid = false;
  bool flat = false;
};

// Pearson correlation of paired samples along +theta and -theta.
RayStats correlate_ray(const std::vector<double>& a, const std::vector<double>& b) {
  RayStats st;
  const auto n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  // Rays whose relative spread is below 1e-6 carry no symmetry information.
  const double floor_a = 1e-12 * ma * ma * n;
  const double floor_b = 1e-12 * mb * mb * n;
  if (saa <= floor_a || sbb <= floor_b) {
    st.flat = true;
    return st;
  }
  st.correlation = sab / std::sqrt(saa * sbb);
  st.valid = std::isfinite(st.correlation);
  return st;
}

struct CandidateScore {
  double score = kNaN;
  bool degenerate = false;
};

CandidateScore score_candidate(const VisibilityMap& vmap, double cx, double cy, const CenterSearchOptions& options) {
  const double max_r = std::hypot(vmap.geometry.width, vmap.geometry.height);
  std::vector<double> a;
  std::vector<double> b;
  double total = 0.0;
  int valid = 0;
  int flat = 0;
  for (int j = 0; j < options.n_angles; ++j) {
    const double theta = std::numbers::pi * j / options.n_angles;
    const double ux = std::cos(theta);
    const double uy = std::sin(theta);
    a.clear();
    b.clear();
    for (int r = 1; r < max_r; ++r) {
      const auto pa = sample_visibility(vmap, cx + r * ux, cy + r * uy);
      const auto pb = sample_visibility(vmap, cx - r * ux, cy - r * uy);
      if (!pa || !pb) break;
      a.push_back(*pa);
      b.push_back(*pb);
    }
    if (static_cast<int>(a.size()) < options.min_ray_samples) continue;
    const RayStats st = correlate_ray(a, b);
    if (st.valid) {
      total += st.correlation;
      ++valid;
    } else if (st.flat) {
      ++flat;
    }
  }
  CandidateScore out;
  if (valid > 0) {
    out.score = total / valid;
  } else {
    out.degenerate = flat > 0;
  }
  return out;
}

double parabolic_offset(double minus, double center, double plus) {
  if (!std::isfinite(minus) || !std::isfinite(plus)) return 0.0;
  const double denom = minus - 2.0 * center + plus;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (minus - plus) / denom, -0.5, 0.5);
}

}  // namespace

std::size_t VisibilityMap::unmasked_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(mask.data.begin(), mask.data.end(), [](std::uint8_t m) { return m != 0; }));
}

Image<double> gaussian_blur(const Image<double>& image, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidArgument, "blur_sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return image;
  const std::vector<double> kernel = blur_kernel(sigma);
  Image<double> tmp(image.width, image.height);
  Image<double> out(image.width, image.height);
  convolve_axis(image, tmp, kernel, true);
  convolve_axis(tmp, out, kernel, false);
  return out;
}

FrameStack preprocess(const FrameStack& stack, double background, double blur_sigma, int threads) {
  if (!(blur_sigma >= 0.0) || !std::isfinite(blur_sigma)) {
    throw Error(ErrorCode::InvalidArgument, "blur_sigma must be finite and >= 0");
  }
  if (background == 0.0 && blur_sigma == 0.0) return stack;
  FrameStack out = stack;
  parallel_for(stack.frames.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Image<float>& src = stack.frames[k];
      Image<double> work(src.width, src.height);
      for (std::size_t i = 0; i < src.size(); ++i) work.data[i] = static_cast<double>(src.data[i]) - background;
      const Image<double> blurred = gaussian_blur(work, blur_sigma);
      Image<float>& dst = out.frames[k];
      for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] = static_cast<float>(blurred.data[i]);
    }
  });
  return out;
}

double SinusoidFitter::Result::amplitude() const noexcept { return std::hypot(c1, c2); }

double SinusoidFitter::Result::visibility() const noexcept { return amplitude() / c0; }

SinusoidFitter::SinusoidFitter(std::vector<double> phases) : phases_(std::move(phases)) {
  const auto n = static_cast<Eigen::Index>(phases_.size());
  if (n < 3) {
    throw Error(ErrorCode::DegeneratePhases, "at least 3 phases are required for a sinusoid fit");
  }
  Eigen::MatrixXd design(n, 3);
  cos_.resize(phases_.size());
  sin_.resize(phases_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    cos_[k] = std::cos(phases_[k]);
    sin_[k] = std::sin(phases_[k]);
    design(i, 0) = 1.0;
    design(i, 1) = cos_[k];
    design(i, 2) = sin_[k];
  }
  const Eigen::Matrix3d normal = design.transpose() * design;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
  lu.setThreshold(1e-10);
  if (lu.rank() < 3) {
    throw Error(ErrorCode::DegeneratePhases, "normal matrix of the sinusoid fit is singular");
  }
  const Eigen::MatrixXd solve = lu.inverse() * design.transpose();
  solve_.resize(static_cast<std::size_t>(3 * n));
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) solve_[static_cast<std::size_t>(r * n + c)] = solve(r, c);
  }
}

SinusoidFitter::Result SinusoidFitter::fit(std::span<const double> samples) const noexcept {
  const std::size_t n = phases_.size();
  Result r;
  for (std::size_t i = 0; i < n; ++i) {
    r.c0 += solve_[i] * samples[i];
    r.c1 += solve_[n + i] * samples[i];
    r.c2 += solve_[2 * n + i] * samples[i];
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = samples[i] - (r.c0 + r.c1 * cos_[i] + r.c2 * sin_[i]);
    ss += e * e;
  }
  r.residual = std::sqrt(ss / static_cast<double>(n));
  return r;
}

VisibilityMap fit_visibility(const FrameStack& stack, const MaskOptions& options, int threads) {
  stack.validate();
  const SinusoidFitter fitter(stack.phases);
  const int w = stack.geometry.width;
  const int h = stack.geometry.height;

  VisibilityMap vmap;
  vmap.geometry = stack.geometry;
  vmap.visibility = Image<double>(w, h, kNaN);
  vmap.mean_intensity = Image<double>(w, h);
  vmap.mask = Image<std::uint8_t>(w, h, 1);
  vmap.fit_residual = Image<double>(w, h);
  vmap.fitted_visibility = Image<double>(w, h);

  parallel_for(static_cast<std::size_t>(h), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> samples(stack.frames.size());
    for (std::size_t y = begin; y < end; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t idx = vmap.mean_intensity.index(x, static_cast<int>(y));
        for (std::size_t k = 0; k < stack.frames.size(); ++k) samples[k] = stack.frames[k].data[idx];
        const auto r = fitter.fit(samples);
        vmap.mean_intensity.data[idx] = r.c0;
        vmap.fit_residual.data[idx] = r.residual;
        vmap.fitted_visibility.data[idx] = r.visibility();
      }
    }
  });

  PixelCoord center;
  if (options.center) {
    center = *options.center;
  } else {
    // Coarse centroid over all positive intensity, then over the provisional mask.
    center = weighted_centroid(vmap.mean_intensity, nullptr);
    apply_mask(vmap, center, options.threshold_fraction, options.disk_radius);
    center = weighted_centroid(vmap.mean_intensity, &vmap.mask);
  }
  apply_mask(vmap, center, options.threshold_fraction, options.disk_radius);
  return vmap;
}

void apply_mask(VisibilityMap& vmap, const PixelCoord& center, double threshold_fraction, double disk_radius) {
  const double reference = disk_mean(vmap.mean_intensity, center, disk_radius);
  vmap.mask_center = center;
  vmap.reference_intensity = reference;
  const double threshold = threshold_fraction * reference;
  vmap.over_unity = 0;
  for (std::size_t i = 0; i < vmap.mask.size(); ++i) {
    const double c0 = vmap.mean_intensity.data[i];
    const double fitted = vmap.fitted_visibility.data[i];
    const bool keep =
        std::isfinite(reference) && reference > 0.0 && c0 > 0.0 && c0 >= threshold && std::isfinite(fitted);
    vmap.mask.data[i] = keep ? 1 : 0;
    vmap.visibility.data[i] = keep ? fitted : kNaN;
    if (!keep) continue;
    if (vmap.visibility.data[i] > 1.0) ++vmap.over_unity;
  }
}

PixelCoord intensity_centroid(const VisibilityMap& vmap) { return weighted_centroid(vmap.mean_intensity, &vmap.mask); }

std::optional<double> sample_visibility(const VisibilityMap& vmap, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  if (!(fx >= 0.0 && fy >= 0.0)) return std::nullopt;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double tx = x - fx;
  const double ty = y - fy;
  // Exact grid hits only need their own pixel (and neighbours along a fractional axis).
  const int x1 = tx > 0.0 ? x0 + 1 : x0;
  const int y1 = ty > 0.0 ? y0 + 1 : y0;
  if (!vmap.mask.contains(x1, y1)) return std::nullopt;
  if (!vmap.mask(x0, y0) || !vmap.mask(x1, y0) || !vmap.mask(x0, y1) || !vmap.mask(x1, y1)) return std::nullopt;
  const auto& v = vmap.visibility;
  const double top = (1.0 - tx) * v(x0, y0) + tx * v(x1, y0);
  const double bottom = (1.0 - tx) * v(x0, y1) + tx * v(x1, y1);
  return (1.0 - ty) * top + ty * bottom;
}

CenterResult find_center(const VisibilityMap& vmap, const CenterSearchOptions& options) {
  if (vmap.unmasked_count() < 100) {
    throw Error(ErrorCode::InsufficientData, "center search needs at least 100 unmasked pixels");
  }
  if (options.search_window < 1 || options.n_angles < 1) {
    throw Error(ErrorCode::InvalidArgument, "center search window and angle count must be >= 1");
  }
  const PixelCoord start = intensity_centroid(vmap);
  const int sx = static_cast<int>(std::lround(start.x));
  const int sy = static_cast<int>(std::lround(start.y));
  const int win = options.search_window;
  const int side = 2 * win + 1;

  std::vector<CandidateScore> grid(static_cast<std::size_t>(side * side));
  const auto at = [&](int dx, int dy) -> CandidateScore& {
    return grid[static_cast<std::size_t>((dy + win) * side + (dx + win))];
  };

  bool any_degenerate = false;
  double best = -std::numeric_limits<double>::infinity();
  int best_dx = 0;
  int best_dy = 0;
  bool found = false;
  for (int dy = -win; dy <= win; ++dy) {
    for (int dx = -win; dx <= win; ++dx) {
      const int cx = sx + dx;
      const int cy = sy + dy;
      if (!vmap.mask.contains(cx, cy)) continue;
      CandidateScore& c = at(dx, dy);
      c = score_candidate(vmap, cx, cy, options);
      any_degenerate = any_degenerate || c.degenerate;
      // Row-major scan with strict comparison keeps the smallest (y, x) on ties.
      if (std::isfinite(c.score) && c.score > best) {
        best = c.score;
        best_dx = dx;
        best_dy = dy;
        found = true;
      }
    }
  }
  if (!found) {
    if (any_degenerate) {
      throw Error(ErrorCode::DegenerateScore, "visibility is flat along every ray; no symmetry information");
    }
    throw Error(ErrorCode::CenterNotFound, "no candidate center yields a finite correlation score");
  }

  const auto score_or_nan = [&](int dx, int dy) {
    if (dx < -win || dx > win || dy < -win || dy > win) return kNaN;
    return at(dx, dy).score;
  };
  const double ox = parabolic_offset(score_or_nan(best_dx - 1, best_dy), best, score_or_nan(best_dx + 1, best_dy));
  const double oy = parabolic_offset(score_or_nan(best_dx, best_dy - 1), best, score_or_nan(best_dx, best_dy + 1));
  return {{sx + best_dx + ox, sy + best_dy + oy}, best};
}

RadialProfile radial_profile(const VisibilityMap& vmap, const PixelCoord& center, int n_angles, double radial_step) {
  if (!vmap.mask.contains(static_cast<int>(std::floor(center.x)), static_cast<int>(std::floor(center.y)))) {
    throw Error(ErrorCode::InvalidArgument, "profile center must lie inside the sensor");
  }
  if (n_angles < 1 || !(radial_step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "n_angles must be >= 1 and radial_step > 0");
  }
  const double w = vmap.geometry.width - 1.0;
  const double h = vmap.geometry.height - 1.0;
  const double reach = std::max({std::hypot(center.x, center.y), std::hypot(w - center.x, center.y),
                                 std::hypot(center.x, h - center.y), std::hypot(w - center.x, h - center.y)});
  const auto bins = static_cast<std::size_t>(std::floor(reach / radial_step)) + 1;

  std::vector<double> sums(bins, 0.0);
  RadialProfile profile;
  profile.center = center;
  profile.sample_counts.assign(bins, 0);
  for (int j = 0; j < n_angles; ++j) {
    const double theta = std::numbers::pi * j / n_angles;
    const double ux = std::cos(theta);
    const double uy = std::sin(theta);
    for (std::size_t k = 0; k < bins; ++k) {
      const double r = static_cast<double>(k) * radial_step;
      for (const double sign : {1.0, -1.0}) {
        if (const auto v = sample_visibility(vmap, center.x + sign * r * ux, center.y + sign * r * uy)) {
          sums[k] += *v;
          ++profile.sample_counts[k];
        }
      }
    }
  }
  profile.radii.resize(bins);
  profile.visibility.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    profile.radii[k] = static_cast<double>(k) * radial_step * vmap.geometry.pixel_pitch;
    profile.visibility[k] = profile.sample_counts[k] > 0 ? sums[k] / profile.sample_counts[k] : kNaN;
  }
  return profile;
}

double profile_fwhm(const RadialProfile& profile) {
  std::vector<std::size_t> populated;
  for (std::size_t k = 0; k < profile.radii.size(); ++k) {
    if (profile.sample_counts[k] > 0 && std::isfinite(profile.visibility[k])) populated.push_back(k);
  }
  if (populated.size() < 4) {
    throw Error(ErrorCode::NoHalfCrossing, "profile has fewer than 4 populated radii");
  }
  const auto& v = profile.visibility;
  const auto& r = profile.radii;
  const double peak = (v[populated[0]] + v[populated[1]] + v[populated[2]]) / 3.0;
  const double half = 0.5 * peak;
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::NoHalfCrossing, "peak visibility is not positive");
  }

  std::optional<double> crossing;
  for (std::size_t i = 1; i < populated.size(); ++i) {
    const std::size_t cur = populated[i];
    const std::size_t prev = populated[i - 1];
    if (v[cur] < half) {
      const double t = (v[prev] - half) / (v[prev] - v[cur]);
      crossing = r[prev] + t * (r[cur] - r[prev]);
      break;
    }
  }
  if (!crossing) {
    std::ostringstream os;
    os << "visibility never falls below half of the peak " << peak << " within " << r[populated.back()] << " m";
    throw Error(ErrorCode::NoHalfCrossing, os.str());
  }

  const std::size_t inner = std::max<std::size_t>(3, (populated.size() + 9) / 10);
  const auto max_it = std::max_element(populated.begin(), populated.end(),
                                       [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  if (static_cast<std::size_t>(max_it - populated.begin()) >= inner) {
    std::ostringstream os;
    os << "visibility maximum at " << r[*max_it] << " m lies outside the innermost 10% of radii";
    throw Error(ErrorCode::ProfilePeakNotCentral, os.str());
  }
  return 2.0 * *crossing;
}

}  // namespace icfringe
