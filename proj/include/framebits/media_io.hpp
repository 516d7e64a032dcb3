#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace framebits {

struct VideoGeometry {
  int width = 0;    // luma samples
  int height = 0;   // luma samples
  int bit_depth = 8;
  double frame_rate = 30.0;
  int64_t frame_count = 0;

  int64_t frame_size_bytes() const {
    return static_cast<int64_t>(width) * height * 3 / 2;
  }
};

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> samples;  // row-major, no padding

  uint8_t at(int row, int col) const {
    return samples[static_cast<size_t>(row) * width + col];
  }
};

struct FramePlanes {
  Plane y, u, v;
  int64_t index = 0;
};

// Anything that can hand out decoded frames: a raw file on disk or an
// in-memory synthetic sequence. Reads are pure; implementations must allow
// concurrent read_frame calls from multiple workers.
class FrameSource {
public:
  virtual ~FrameSource() = default;
  virtual const VideoGeometry& geometry() const = 0;
  virtual FramePlanes read_frame(int64_t index) const = 0;
};

// Raw planar YUV420p reader (8-bit, frame-sequential, Y then U then V).
class SequenceReader : public FrameSource {
public:
  SequenceReader(const std::string& path, int width, int height, double frame_rate = 30.0);
  ~SequenceReader() override;

  SequenceReader(const SequenceReader&) = delete;
  SequenceReader& operator=(const SequenceReader&) = delete;

  const VideoGeometry& geometry() const override { return m_geometry; }
  FramePlanes read_frame(int64_t index) const override;

private:
  VideoGeometry m_geometry;
  std::string m_path;
  int m_fd = -1;
};

class MemorySequence : public FrameSource {
public:
  MemorySequence(VideoGeometry geometry, std::vector<FramePlanes> frames);
  const VideoGeometry& geometry() const override { return m_geometry; }
  FramePlanes read_frame(int64_t index) const override;

private:
  VideoGeometry m_geometry;
  std::vector<FramePlanes> m_frames;
};

std::unique_ptr<SequenceReader> open_sequence(const std::string& path, int width, int height,
                                              double frame_rate = 30.0);

// Appends frames to a raw YUV420p file. Used by the synthetic generator and tests.
void write_sequence(const std::string& path, const std::vector<FramePlanes>& frames);

void validate_geometry(int width, int height, int bit_depth);

}  // namespace framebits
