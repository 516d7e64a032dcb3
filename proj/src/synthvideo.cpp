#include "framebits/synthvideo.hpp"

#include <cmath>
#include <vector>

#include "framebits/errors.hpp"
#include "framebits/rng.hpp"

namespace framebits {

void SynthParams::validate() const {
  validate_geometry(width, height, 8);
  if (frame_count < 1) raise(ErrorKind::InvalidConfig, "frame_count must be positive");
  if (!(frame_rate > 0.0)) raise(ErrorKind::InvalidConfig, "frame_rate must be positive");
  if (!(amplitude >= 0.0) || !(static_noise >= 0.0) || !(chroma_scale >= 0.0))
    raise(ErrorKind::InvalidConfig, "texture amplitudes must be non-negative");
}

SynthParams draw_synth_params(uint64_t seed, uint64_t index, int width, int height,
                              int frame_count) {
  auto rng = make_rng(seed, index);
  SynthParams p;
  p.width = width;
  p.height = height;
  p.frame_count = frame_count;
  p.amplitude = draw_range(rng, 12.0, 60.0);
  p.freq_x = draw_range(rng, 1.0, 5.0);
  p.freq_y = draw_range(rng, 1.0, 5.0);
  p.freq_x2 = draw_range(rng, 3.0, 9.0);
  p.freq_y2 = draw_range(rng, 3.0, 9.0);
  p.vel_x = draw_range(rng, -4.0, 4.0);
  p.vel_y = draw_range(rng, -3.0, 3.0);
  p.vel_x2 = draw_range(rng, -3.0, 3.0);
  p.vel_y2 = draw_range(rng, -4.0, 4.0);
  p.phase_y = draw_range(rng, 0.0, 6.283185307179586);
  p.phase_u = draw_range(rng, 0.0, 6.283185307179586);
  p.phase_v = draw_range(rng, 0.0, 6.283185307179586);
  p.static_noise = draw_range(rng, 0.0, 6.0);
  p.chroma_scale = draw_range(rng, 0.4, 0.9);
  p.texture_seed = rng();
  return p;
}

namespace {

// Static texture sample in [-1, 1], keyed by pixel position and plane.
inline double hash_noise(uint64_t seed, int plane, int x, int y) {
  uint64_t v = mix64(seed ^ (static_cast<uint64_t>(plane) << 62) ^
                     (static_cast<uint64_t>(static_cast<uint32_t>(x)) << 20) ^
                     static_cast<uint64_t>(static_cast<uint32_t>(y)));
  return static_cast<double>(v >> 11) * 0x1.0p-52 - 1.0;
}

inline uint8_t quantize(double v) {
  long r = std::lround(v);
  if (r < 0) r = 0;
  if (r > 255) r = 255;
  return static_cast<uint8_t>(r);
}

// One plane of the moving field. The field lives in full-resolution luma
// coordinates; chroma planes sample it at stride 2 with their own phase and
// amplitude, which keeps chroma texture moving in lockstep with luma.
Plane render_plane(const SynthParams& p, int64_t t, int plane_tag, int w, int h, int stride,
                   double amp, double phase) {
  Plane out;
  out.width = w;
  out.height = h;
  out.samples.resize(static_cast<size_t>(w) * h);

  const double two_pi = 6.283185307179586;
  const double fw = static_cast<double>(p.width);
  const double fh = static_cast<double>(p.height);
  std::vector<double> sx1(w), sx2(w), cy1(h), cy2(h);
  for (int x = 0; x < w; ++x) {
    double fx = static_cast<double>(x * stride);
    sx1[x] = std::sin(two_pi * p.freq_x * (fx + p.vel_x * static_cast<double>(t)) / fw + phase);
    sx2[x] = std::sin(two_pi * p.freq_x2 * (fx - p.vel_x2 * static_cast<double>(t)) / fw + 1.7 * phase);
  }
  for (int y = 0; y < h; ++y) {
    double fy = static_cast<double>(y * stride);
    cy1[y] = std::cos(two_pi * p.freq_y * (fy + p.vel_y * static_cast<double>(t)) / fh);
    cy2[y] = std::cos(two_pi * p.freq_y2 * (fy + p.vel_y2 * static_cast<double>(t)) / fh);
  }

  const double noise_amp = p.static_noise * (plane_tag == 0 ? 1.0 : 0.5);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 128.0 + amp * (0.65 * sx1[x] * cy1[y] + 0.35 * sx2[x] * cy2[y]) +
                 noise_amp * hash_noise(p.texture_seed, plane_tag, x * stride, y * stride);
      out.samples[static_cast<size_t>(y) * w + x] = quantize(v);
    }
  }
  return out;
}

}  // namespace

FramePlanes render_synth_frame(const SynthParams& p, int64_t t) {
  p.validate();
  FramePlanes f;
  f.index = t;
  f.y = render_plane(p, t, 0, p.width, p.height, 1, p.amplitude, p.phase_y);
  f.u = render_plane(p, t, 1, p.width / 2, p.height / 2, 2, p.amplitude * p.chroma_scale, p.phase_u);
  f.v = render_plane(p, t, 2, p.width / 2, p.height / 2, 2, p.amplitude * p.chroma_scale, p.phase_v);
  return f;
}

MemorySequence generate_synth_sequence(const SynthParams& p) {
  p.validate();
  VideoGeometry geo;
  geo.width = p.width;
  geo.height = p.height;
  geo.bit_depth = 8;
  geo.frame_rate = p.frame_rate;
  geo.frame_count = p.frame_count;
  std::vector<FramePlanes> frames;
  frames.reserve(static_cast<size_t>(p.frame_count));
  for (int64_t t = 0; t < p.frame_count; ++t) frames.push_back(render_synth_frame(p, t));
  return MemorySequence(geo, std::move(frames));
}

}  // namespace framebits
