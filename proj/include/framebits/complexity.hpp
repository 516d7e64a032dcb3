#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "framebits/media_io.hpp"

namespace framebits {

// Frequency weighting applied to AC coefficient magnitudes when aggregating
// block energy. HighFrequencyExponential is 2^((i+j)/w), emphasizing detail
// that costs the encoder the most bits; Uniform weights every AC bin equally.
enum class AcWeighting { HighFrequencyExponential, Uniform };

struct AnalyzerConfig {
  int block_size = 32;
  std::set<int> gaps = {1, 2, 4, 8, 16, 32};
  AcWeighting weighting = AcWeighting::HighFrequencyExponential;
  int threads = 1;
};

// Orthonormal type-II DCT over square blocks, separable row/column passes.
class Dct {
public:
  explicit Dct(int size);

  int size() const { return m_size; }

  // x, tmp, out are size*size row-major scratch owned by the caller.
  void forward(const double* x, double* tmp, double* out) const;

private:
  int m_size;
  std::vector<double> m_basis;  // basis[u*size + x] = s_u * cos(pi*(2x+1)u / (2*size))
};

// Convenience wrapper used by tests and small callers.
std::vector<double> block_dct(const std::vector<double>& block, int block_size);

struct BlockTexture {
  int row = 0;  // block origin in samples
  int col = 0;
  double energy = 0.0;  // weighted sum of |AC| over block area
  double dc = 0.0;      // |DC| over block area
};

struct FrameTexture {
  double energy = 0.0;      // E: mean block energy
  double brightness = 0.0;  // L: mean |DC| / block_size
  std::vector<double> block_energies;
};

FrameTexture frame_texture(const Plane& plane, int block_size,
                           AcWeighting weighting = AcWeighting::HighFrequencyExponential);

// Per-block detail of one plane; frame_texture is the aggregation of this.
std::vector<BlockTexture> block_textures(const Plane& plane, int block_size, AcWeighting weighting);

// h between two frames: mean |energy_cur - energy_ref| over the block grid.
double temporal_gradient(const std::vector<double>& current_block_energies,
                         const std::vector<double>& reference_block_energies);

struct ComplexityRecord {
  int64_t frame_index = 0;
  double e_y = 0.0, l_y = 0.0;
  double e_u = 0.0, l_u = 0.0;
  double e_v = 0.0, l_v = 0.0;
  std::map<int, double> h_by_gap;  // defined for gap g iff frame_index >= g

  bool has_gap(int gap) const { return h_by_gap.count(gap) != 0; }
};

std::vector<ComplexityRecord> analyze_sequence(const FrameSource& source, const AnalyzerConfig& cfg);

// Canonical temporal gaps; the feature CSV always carries a column per entry.
const std::vector<int>& canonical_gaps();

void write_features_csv(const std::string& path, const std::vector<ComplexityRecord>& records);
std::vector<ComplexityRecord> read_features_csv(const std::string& path);

}  // namespace framebits
