#include <doctest.h>

#include <fstream>

#include "framebits/media_io.hpp"
#include "support.hpp"

using namespace framebits;
using framebits::test::TempDir;

namespace {

FramePlanes make_frame(int width, int height, int64_t index, uint8_t base) {
  FramePlanes f;
  f.index = index;
  f.y.width = width;
  f.y.height = height;
  f.y.samples.assign(static_cast<size_t>(width) * height, base);
  for (Plane* c : {&f.u, &f.v}) {
    c->width = width / 2;
    c->height = height / 2;
    c->samples.assign(static_cast<size_t>(c->width) * c->height,
                      static_cast<uint8_t>(base + (c == &f.u ? 1 : 2)));
  }
  // A marker pixel to catch plane-order or stride mistakes.
  f.y.samples[static_cast<size_t>(index) % f.y.samples.size()] = 250;
  return f;
}

}  // namespace

TEST_CASE("yuv write/read round-trips every plane") {
  TempDir tmp("mediaio");
  std::vector<FramePlanes> frames;
  for (int64_t i = 0; i < 5; ++i) frames.push_back(make_frame(16, 8, i, static_cast<uint8_t>(10 * i)));
  std::string path = tmp.file("clip.yuv");
  write_sequence(path, frames);

  auto reader = open_sequence(path, 16, 8, 25.0);
  const VideoGeometry& g = reader->geometry();
  CHECK(g.width == 16);
  CHECK(g.height == 8);
  CHECK(g.frame_count == 5);
  CHECK(g.frame_rate == doctest::Approx(25.0));
  CHECK(g.frame_size_bytes() == 16 * 8 * 3 / 2);

  for (int64_t i = 0; i < 5; ++i) {
    FramePlanes f = reader->read_frame(i);
    CHECK(f.index == i);
    CHECK(f.y.samples == frames[i].y.samples);
    CHECK(f.u.samples == frames[i].u.samples);
    CHECK(f.v.samples == frames[i].v.samples);
  }
}

TEST_CASE("reader rejects missing, truncated, and out-of-range access") {
  TempDir tmp("mediaio2");
  CHECK_RAISES(ErrorKind::FileNotFound, open_sequence(tmp.file("absent.yuv"), 16, 8));

  std::string path = tmp.file("short.yuv");
  {
    std::ofstream out(path, std::ios::binary);
    std::vector<char> bytes(16 * 8 * 3 / 2 + 7, 0);  // one frame plus a ragged tail
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_RAISES(ErrorKind::TruncatedFile, open_sequence(path, 16, 8));

  std::string good = tmp.file("good.yuv");
  write_sequence(good, {make_frame(16, 8, 0, 100)});
  auto reader = open_sequence(good, 16, 8);
  CHECK_RAISES(ErrorKind::IndexOutOfRange, reader->read_frame(1));
  CHECK_RAISES(ErrorKind::IndexOutOfRange, reader->read_frame(-1));
}

TEST_CASE("geometry validation rejects odd and non-positive dimensions") {
  CHECK_RAISES(ErrorKind::InvalidGeometry, validate_geometry(0, 8, 8));
  CHECK_RAISES(ErrorKind::InvalidGeometry, validate_geometry(16, -2, 8));
  CHECK_RAISES(ErrorKind::InvalidGeometry, validate_geometry(15, 8, 8));
  CHECK_RAISES(ErrorKind::InvalidGeometry, validate_geometry(16, 9, 8));
  validate_geometry(16, 8, 8);  // must not throw
}

TEST_CASE("memory sequence serves frames by index") {
  std::vector<FramePlanes> frames;
  for (int64_t i = 0; i < 3; ++i) frames.push_back(make_frame(8, 4, i, 50));
  VideoGeometry g;
  g.width = 8;
  g.height = 4;
  g.frame_count = 3;
  MemorySequence seq(g, frames);
  CHECK(seq.read_frame(2).y.samples == frames[2].y.samples);
  CHECK_RAISES(ErrorKind::IndexOutOfRange, seq.read_frame(3));
}
