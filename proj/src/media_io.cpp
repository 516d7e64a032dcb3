#include "framebits/media_io.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>

#include "framebits/errors.hpp"

namespace framebits {

void validate_geometry(int width, int height, int bit_depth) {
  if (bit_depth != 8)
    raise(ErrorKind::InvalidGeometry, "only 8-bit input is supported, got " + std::to_string(bit_depth) + "-bit");
  if (width <= 0 || height <= 0)
    raise(ErrorKind::InvalidGeometry,
          "dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
  if (width % 2 != 0 || height % 2 != 0)
    raise(ErrorKind::InvalidGeometry, "4:2:0 requires even dimensions, got " + std::to_string(width) + "x" +
                                          std::to_string(height));
}

SequenceReader::SequenceReader(const std::string& path, int width, int height, double frame_rate)
    : m_path(path) {
  validate_geometry(width, height, 8);

  m_fd = ::open(path.c_str(), O_RDONLY);
  if (m_fd < 0) {
    if (errno == ENOENT)
      raise(ErrorKind::FileNotFound, path);
    raise(ErrorKind::IoError, path + ": " + std::strerror(errno));
  }

  struct stat st{};
  if (::fstat(m_fd, &st) != 0) {
    int err = errno;
    ::close(m_fd);
    raise(ErrorKind::IoError, path + ": " + std::strerror(err));
  }

  m_geometry.width = width;
  m_geometry.height = height;
  m_geometry.bit_depth = 8;
  m_geometry.frame_rate = frame_rate;

  const int64_t frame_size = m_geometry.frame_size_bytes();
  if (st.st_size % frame_size != 0) {
    ::close(m_fd);
    raise(ErrorKind::TruncatedFile, path + ": size " + std::to_string(st.st_size) +
                                        " is not a multiple of the " + std::to_string(frame_size) +
                                        "-byte frame size");
  }
  m_geometry.frame_count = st.st_size / frame_size;
}

SequenceReader::~SequenceReader() {
  if (m_fd >= 0) ::close(m_fd);
}

FramePlanes SequenceReader::read_frame(int64_t index) const {
  if (index < 0 || index >= m_geometry.frame_count)
    raise(ErrorKind::IndexOutOfRange, "frame " + std::to_string(index) + " of " +
                                          std::to_string(m_geometry.frame_count));

  const int w = m_geometry.width;
  const int h = m_geometry.height;
  const int64_t frame_size = m_geometry.frame_size_bytes();

  std::vector<uint8_t> buf(static_cast<size_t>(frame_size));
  int64_t off = index * frame_size;
  size_t done = 0;
  while (done < buf.size()) {
    // pread keeps reads position-independent, so concurrent workers can share the fd
    ssize_t n = ::pread(m_fd, buf.data() + done, buf.size() - done, off + static_cast<int64_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      raise(ErrorKind::IoError, m_path + ": " + std::strerror(errno));
    }
    if (n == 0)
      raise(ErrorKind::IoError, m_path + ": unexpected end of file");
    done += static_cast<size_t>(n);
  }

  FramePlanes f;
  f.index = index;
  f.y = Plane{w, h, {buf.begin(), buf.begin() + static_cast<size_t>(w) * h}};
  const size_t cs = static_cast<size_t>(w / 2) * (h / 2);
  const auto u_begin = buf.begin() + static_cast<size_t>(w) * h;
  f.u = Plane{w / 2, h / 2, {u_begin, u_begin + cs}};
  f.v = Plane{w / 2, h / 2, {u_begin + cs, u_begin + 2 * cs}};
  return f;
}

std::unique_ptr<SequenceReader> open_sequence(const std::string& path, int width, int height,
                                              double frame_rate) {
  return std::make_unique<SequenceReader>(path, width, height, frame_rate);
}

MemorySequence::MemorySequence(VideoGeometry geometry, std::vector<FramePlanes> frames)
    : m_geometry(geometry), m_frames(std::move(frames)) {
  m_geometry.frame_count = static_cast<int64_t>(m_frames.size());
}

FramePlanes MemorySequence::read_frame(int64_t index) const {
  if (index < 0 || index >= static_cast<int64_t>(m_frames.size()))
    raise(ErrorKind::IndexOutOfRange,
          "frame " + std::to_string(index) + " of " + std::to_string(m_frames.size()));
  return m_frames[static_cast<size_t>(index)];
}

void write_sequence(const std::string& path, const std::vector<FramePlanes>& frames) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) raise(ErrorKind::IoError, path + ": " + std::strerror(errno));
  for (const auto& f : frames) {
    if (std::fwrite(f.y.samples.data(), 1, f.y.samples.size(), fp) != f.y.samples.size() ||
        std::fwrite(f.u.samples.data(), 1, f.u.samples.size(), fp) != f.u.samples.size() ||
        std::fwrite(f.v.samples.data(), 1, f.v.samples.size(), fp) != f.v.samples.size()) {
      std::fclose(fp);
      raise(ErrorKind::IoError, path + ": short write");
    }
  }
  if (std::fclose(fp) != 0) raise(ErrorKind::IoError, path + ": close failed");
}

}  // namespace framebits
