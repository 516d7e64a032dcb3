#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "framebits/errors.hpp"
#include "framebits/media_io.hpp"
#include "framebits/rng.hpp"

namespace framebits::test {

// Scratch directory per test binary run; removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    m_path = fs::temp_directory_path() / ("framebits-" + tag + "-" + std::to_string(::getpid()));
    fs::create_directories(m_path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(m_path, ec);
  }
  std::string file(const std::string& name) const { return (m_path / name).string(); }

private:
  std::filesystem::path m_path;
};

// Reference DCT: direct O(w^4) evaluation of the orthonormal type-II
// transform, no separability tricks. The production path must match this.
inline std::vector<double> naive_dct(const std::vector<double>& block, int w) {
  const double pi = 3.14159265358979323846;
  std::vector<double> out(static_cast<size_t>(w) * w, 0.0);
  for (int u = 0; u < w; ++u) {
    for (int v = 0; v < w; ++v) {
      double su = u == 0 ? std::sqrt(1.0 / w) : std::sqrt(2.0 / w);
      double sv = v == 0 ? std::sqrt(1.0 / w) : std::sqrt(2.0 / w);
      double acc = 0.0;
      for (int x = 0; x < w; ++x)
        for (int y = 0; y < w; ++y)
          acc += block[static_cast<size_t>(x) * w + y] * std::cos(pi * (2 * x + 1) * u / (2.0 * w)) *
                 std::cos(pi * (2 * y + 1) * v / (2.0 * w));
      out[static_cast<size_t>(u) * w + v] = su * sv * acc;
    }
  }
  return out;
}

inline Plane random_plane(std::mt19937_64& rng, int width, int height) {
  Plane p;
  p.width = width;
  p.height = height;
  p.samples.resize(static_cast<size_t>(width) * height);
  for (auto& s : p.samples) s = static_cast<uint8_t>(draw_below(rng, 256));
  return p;
}

inline ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected a framebits error, none was thrown");
}

}  // namespace framebits::test

// Checks that `expr` raises a framebits error of exactly `expected_kind`.
#define CHECK_RAISES(expected_kind, expr)                                     \
  CHECK(framebits::test::kind_of([&]() { (void)(expr); }) == (expected_kind))
