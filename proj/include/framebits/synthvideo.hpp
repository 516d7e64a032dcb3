#pragma once

#include <cstdint>

#include "framebits/media_io.hpp"

namespace framebits {

// Moving-texture test pattern: two drifting separable sinusoid fields over a
// static per-pixel hash texture. Chroma tracks the luma field at reduced
// swing, so chroma texture energy correlates with luma texture energy across
// sequences. Every pixel is a pure function of (params, x, y, t).
struct SynthParams {
  int width = 96;
  int height = 64;
  int frame_count = 97;
  double frame_rate = 30.0;

  double amplitude = 30.0;    // peak luma swing around mid-gray
  double freq_x = 3.0;        // cycles across the frame, first component
  double freq_y = 2.0;
  double freq_x2 = 5.0;       // second component
  double freq_y2 = 4.0;
  double vel_x = 1.0;         // pixels per frame, first component
  double vel_y = 0.5;
  double vel_x2 = -0.7;       // second component
  double vel_y2 = 1.3;
  double phase_y = 0.0;
  double phase_u = 1.0;
  double phase_v = 2.0;
  double static_noise = 3.0;  // amplitude of the non-moving hash texture
  double chroma_scale = 0.6;  // chroma swing relative to luma
  uint64_t texture_seed = 0;  // keys the hash texture

  void validate() const;
};

// Per-sequence parameter draw for corpus generation; sequence `index` under a
// corpus `seed` always yields the same parameters.
SynthParams draw_synth_params(uint64_t seed, uint64_t index, int width, int height,
                              int frame_count);

FramePlanes render_synth_frame(const SynthParams& p, int64_t t);

MemorySequence generate_synth_sequence(const SynthParams& p);

}  // namespace framebits
