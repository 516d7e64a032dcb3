#include "framebits/complexity.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "framebits/csv.hpp"
#include "framebits/errors.hpp"
#include "framebits/parallel.hpp"

namespace framebits {

Dct::Dct(int size) : m_size(size), m_basis(static_cast<size_t>(size) * size) {
  if (size < 1) raise(ErrorKind::InvalidConfig, "block size must be >= 1");
  const double pi = std::acos(-1.0);
  for (int u = 0; u < size; ++u) {
    const double scale = (u == 0) ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
    for (int x = 0; x < size; ++x)
      m_basis[static_cast<size_t>(u) * size + x] = scale * std::cos(pi * (2 * x + 1) * u / (2.0 * size));
  }
}

void Dct::forward(const double* x, double* tmp, double* out) const {
  const int w = m_size;
  const size_t area = static_cast<size_t>(w) * w;
  const double* basis = m_basis.data();

  // Transform around the block mean: only the DC basis vector sees a constant
  // shift, so a constant block keeps every AC coefficient at exactly 0 (the
  // mean of integer samples is exact for power-of-two block areas). The mean
  // re-enters through the DC term below.
  double mean = 0.0;
  for (size_t i = 0; i < area; ++i) mean += x[i];
  mean /= static_cast<double>(area);
  for (size_t i = 0; i < area; ++i) out[i] = x[i] - mean;

  // row pass: tmp = C * (X - mean)
  for (int u = 0; u < w; ++u) {
    double* trow = tmp + static_cast<size_t>(u) * w;
    for (int j = 0; j < w; ++j) trow[j] = 0.0;
    for (int k = 0; k < w; ++k) {
      const double c = basis[static_cast<size_t>(u) * w + k];
      const double* xrow = out + static_cast<size_t>(k) * w;
      for (int j = 0; j < w; ++j) trow[j] += c * xrow[j];
    }
  }
  // column pass: out = tmp * C^T
  for (int u = 0; u < w; ++u) {
    const double* trow = tmp + static_cast<size_t>(u) * w;
    for (int v = 0; v < w; ++v) {
      const double* crow = basis + static_cast<size_t>(v) * w;
      double acc = 0.0;
      for (int j = 0; j < w; ++j) acc += trow[j] * crow[j];
      out[static_cast<size_t>(u) * w + v] = acc;
    }
  }
  out[0] += mean * w;
}

std::vector<double> block_dct(const std::vector<double>& block, int block_size) {
  if (static_cast<int>(block.size()) != block_size * block_size)
    raise(ErrorKind::InvalidConfig, "block buffer does not match block size");
  Dct dct(block_size);
  std::vector<double> tmp(block.size()), out(block.size());
  dct.forward(block.data(), tmp.data(), out.data());
  return out;
}

namespace {

std::vector<double> make_weights(int w, AcWeighting weighting) {
  std::vector<double> weights(static_cast<size_t>(w) * w, 1.0);
  if (weighting == AcWeighting::HighFrequencyExponential) {
    for (int i = 0; i < w; ++i)
      for (int j = 0; j < w; ++j)
        weights[static_cast<size_t>(i) * w + j] = std::exp2(static_cast<double>(i + j) / w);
  }
  weights[0] = 0.0;  // DC excluded from energy
  return weights;
}

// Copies the block at (r0, c0) into buf, replicating edge samples so border
// blocks keep the same w*w normalization as interior ones.
void gather_block(const Plane& plane, int r0, int c0, int w, double* buf) {
  for (int y = 0; y < w; ++y) {
    const int sy = std::min(r0 + y, plane.height - 1);
    const uint8_t* row = plane.samples.data() + static_cast<size_t>(sy) * plane.width;
    double* dst = buf + static_cast<size_t>(y) * w;
    const int avail = std::max(0, std::min(w, plane.width - c0));
    for (int x = 0; x < avail; ++x) dst[x] = static_cast<double>(row[c0 + x]);
    const double edge = static_cast<double>(row[plane.width - 1]);
    for (int x = avail; x < w; ++x) dst[x] = edge;
  }
}

struct PlaneScratch {
  std::vector<double> block, tmp, coeffs;
  explicit PlaneScratch(int w)
      : block(static_cast<size_t>(w) * w), tmp(block.size()), coeffs(block.size()) {}
};

}  // namespace

std::vector<BlockTexture> block_textures(const Plane& plane, int block_size, AcWeighting weighting) {
  if (plane.width < 1 || plane.height < 1)
    raise(ErrorKind::InvalidGeometry, "empty plane");
  const int w = block_size;
  const Dct dct(w);
  const auto weights = make_weights(w, weighting);
  const double area = static_cast<double>(w) * w;
  const int blocks_x = (plane.width + w - 1) / w;
  const int blocks_y = (plane.height + w - 1) / w;

  PlaneScratch scratch(w);
  std::vector<BlockTexture> out;
  out.reserve(static_cast<size_t>(blocks_x) * blocks_y);
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      gather_block(plane, by * w, bx * w, w, scratch.block.data());
      dct.forward(scratch.block.data(), scratch.tmp.data(), scratch.coeffs.data());
      double weighted = 0.0;
      for (size_t i = 0; i < scratch.coeffs.size(); ++i)
        weighted += weights[i] * std::abs(scratch.coeffs[i]);
      BlockTexture bt;
      bt.row = by * w;
      bt.col = bx * w;
      bt.energy = weighted / area;
      bt.dc = std::abs(scratch.coeffs[0]) / area;
      out.push_back(bt);
    }
  }
  return out;
}

FrameTexture frame_texture(const Plane& plane, int block_size, AcWeighting weighting) {
  const auto blocks = block_textures(plane, block_size, weighting);
  FrameTexture ft;
  ft.block_energies.reserve(blocks.size());
  double energy_sum = 0.0, dc_sum = 0.0;
  for (const auto& b : blocks) {
    energy_sum += b.energy;
    dc_sum += b.dc;
    ft.block_energies.push_back(b.energy);
  }
  const double n = static_cast<double>(blocks.size());
  ft.energy = energy_sum / n;
  ft.brightness = dc_sum * block_size / n;  // mean |DC| / w
  return ft;
}

double temporal_gradient(const std::vector<double>& current_block_energies,
                         const std::vector<double>& reference_block_energies) {
  if (current_block_energies.size() != reference_block_energies.size())
    raise(ErrorKind::GridMismatch, "block grids differ: " + std::to_string(current_block_energies.size()) +
                                       " vs " + std::to_string(reference_block_energies.size()));
  if (current_block_energies.empty())
    raise(ErrorKind::GridMismatch, "empty block grid");
  double acc = 0.0;
  for (size_t i = 0; i < current_block_energies.size(); ++i)
    acc += std::abs(current_block_energies[i] - reference_block_energies[i]);
  return acc / static_cast<double>(current_block_energies.size());
}

std::vector<ComplexityRecord> analyze_sequence(const FrameSource& source, const AnalyzerConfig& cfg) {
  for (int g : cfg.gaps) {
    const auto& canonical = canonical_gaps();
    bool known = false;
    for (int c : canonical) known = known || (c == g);
    if (!known)
      raise(ErrorKind::InvalidConfig, "unsupported gap " + std::to_string(g));
  }

  const int64_t n = source.geometry().frame_count;
  std::vector<ComplexityRecord> records(static_cast<size_t>(n));
  std::vector<std::vector<double>> luma_energies(static_cast<size_t>(n));

  // pass 1: per-frame spatial features, luma block energies cached for pass 2
  parallel_for(static_cast<size_t>(n), cfg.threads, [&](size_t i) {
    const FramePlanes f = source.read_frame(static_cast<int64_t>(i));
    ComplexityRecord rec;
    rec.frame_index = static_cast<int64_t>(i);
    FrameTexture ty = frame_texture(f.y, cfg.block_size, cfg.weighting);
    FrameTexture tu = frame_texture(f.u, cfg.block_size, cfg.weighting);
    FrameTexture tv = frame_texture(f.v, cfg.block_size, cfg.weighting);
    rec.e_y = ty.energy;
    rec.l_y = ty.brightness;
    rec.e_u = tu.energy;
    rec.l_u = tu.brightness;
    rec.e_v = tv.energy;
    rec.l_v = tv.brightness;
    luma_energies[i] = std::move(ty.block_energies);
    records[i] = std::move(rec);
  });

  // pass 2: temporal gradients against cached energies (read-only)
  parallel_for(static_cast<size_t>(n), cfg.threads, [&](size_t i) {
    for (int g : cfg.gaps) {
      if (static_cast<int64_t>(i) >= g)
        records[i].h_by_gap[g] = temporal_gradient(luma_energies[i], luma_energies[i - g]);
    }
  });

  return records;
}

const std::vector<int>& canonical_gaps() {
  static const std::vector<int> gaps = {1, 2, 4, 8, 16, 32};
  return gaps;
}

void write_features_csv(const std::string& path, const std::vector<ComplexityRecord>& records) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, path + ": cannot open for writing");
  out << "frame_index,E_Y,L_Y,E_U,L_U,E_V,L_V";
  for (int g : canonical_gaps()) out << ",h_gap" << g;
  out << "\n";
  for (const auto& r : records) {
    out << r.frame_index << ',' << format_double(r.e_y) << ',' << format_double(r.l_y) << ','
        << format_double(r.e_u) << ',' << format_double(r.l_u) << ',' << format_double(r.e_v) << ','
        << format_double(r.l_v);
    for (int g : canonical_gaps()) {
      out << ',';
      auto it = r.h_by_gap.find(g);
      if (it != r.h_by_gap.end()) out << format_double(it->second);
    }
    out << "\n";
  }
  if (!out) raise(ErrorKind::IoError, path + ": write failed");
}

std::vector<ComplexityRecord> read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::FileNotFound, path);
  std::string line;
  if (!std::getline(in, line)) raise(ErrorKind::ParseError, path + ": empty file");

  std::ostringstream expected;
  expected << "frame_index,E_Y,L_Y,E_U,L_U,E_V,L_V";
  for (int g : canonical_gaps()) expected << ",h_gap" << g;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected.str())
    raise(ErrorKind::SchemaError, path + ": unexpected header '" + line + "'");

  std::vector<ComplexityRecord> records;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (cells.size() != 7 + canonical_gaps().size())
      raise(ErrorKind::SchemaError, ctx + ": expected " + std::to_string(7 + canonical_gaps().size()) +
                                        " cells, got " + std::to_string(cells.size()));
    ComplexityRecord r;
    r.frame_index = parse_int(cells[0], ctx);
    r.e_y = parse_double(cells[1], ctx);
    r.l_y = parse_double(cells[2], ctx);
    r.e_u = parse_double(cells[3], ctx);
    r.l_u = parse_double(cells[4], ctx);
    r.e_v = parse_double(cells[5], ctx);
    r.l_v = parse_double(cells[6], ctx);
    for (size_t gi = 0; gi < canonical_gaps().size(); ++gi) {
      const auto& cell = cells[7 + gi];
      if (!cell.empty()) r.h_by_gap[canonical_gaps()[gi]] = parse_double(cell, ctx);
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace framebits
