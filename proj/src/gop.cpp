#include "framebits/gop.hpp"

#include <algorithm>
#include <fstream>

#include "framebits/errors.hpp"

namespace framebits {

const char* frame_type_name(FrameType t) {
  switch (t) {
    case FrameType::I: return "I";
    case FrameType::P: return "P";
    case FrameType::B: return "B";
  }
  return "?";
}

FrameType frame_type_from_name(const std::string& s) {
  if (s == "I") return FrameType::I;
  if (s == "P") return FrameType::P;
  if (s == "B") return FrameType::B;
  raise(ErrorKind::ParseError, "unknown frame type '" + s + "'");
}

void GopConfig::validate() const {
  bool pow2 = gop_size >= 2 && gop_size <= 32 && (gop_size & (gop_size - 1)) == 0;
  if (!pow2)
    raise(ErrorKind::InvalidConfig, "gop size must be one of 2,4,8,16,32, got " + std::to_string(gop_size));
  if (intra_period < gop_size || intra_period % gop_size != 0)
    raise(ErrorKind::InvalidConfig, "intra period must be a positive multiple of the gop size, got " +
                                        std::to_string(intra_period));
}

namespace {

void fill_pyramid(std::vector<FrameRole>& roles, int64_t lo, int64_t hi, int level) {
  if (hi - lo < 2) return;
  const int64_t mid = lo + (hi - lo) / 2;  // rounds down on odd tail spans
  FrameRole& r = roles[static_cast<size_t>(mid)];
  r.frame_type = FrameType::B;
  r.level = level;
  r.refs = {lo, hi};
  fill_pyramid(roles, lo, mid, level + 1);
  fill_pyramid(roles, mid, hi, level + 1);
}

}  // namespace

std::vector<FrameRole> classify_frames(int64_t frame_count, const GopConfig& cfg) {
  cfg.validate();
  if (frame_count < 1)
    raise(ErrorKind::InvalidConfig, "frame count must be >= 1");

  std::vector<FrameRole> roles(static_cast<size_t>(frame_count));
  for (int64_t k = 0; k < frame_count; ++k) {
    roles[static_cast<size_t>(k)].frame_index = k;
    if (k % cfg.intra_period == 0) {
      roles[static_cast<size_t>(k)].frame_type = FrameType::I;
    } else if (k % cfg.gop_size == 0) {
      auto& r = roles[static_cast<size_t>(k)];
      r.frame_type = FrameType::P;
      r.refs = {k - cfg.gop_size};
    }
  }

  const int64_t last = frame_count - 1;
  for (int64_t a = 0; a < last; a += cfg.gop_size) {
    const int64_t b = std::min<int64_t>(a + cfg.gop_size, last);
    if (b < a + cfg.gop_size) {
      // truncated tail: the final frame anchors the remaining span
      auto& r = roles[static_cast<size_t>(b)];
      r.frame_type = FrameType::P;
      r.level = 0;
      r.refs = {a};
    }
    fill_pyramid(roles, a, b, 1);
  }
  return roles;
}

std::vector<int64_t> decode_order(const std::vector<FrameRole>& roles) {
  if (roles.empty()) return {};
  const int64_t last = static_cast<int64_t>(roles.size()) - 1;

  std::vector<int64_t> order;
  order.reserve(roles.size());
  order.push_back(0);
  int64_t a = 0;
  while (a < last) {
    // span end = next anchor at or before a full GOP ahead
    int64_t b = a + 1;
    while (b < last && roles[static_cast<size_t>(b)].frame_type == FrameType::B) ++b;
    order.push_back(b);
    std::vector<int64_t> interior;
    for (int64_t k = a + 1; k < b; ++k) interior.push_back(k);
    std::sort(interior.begin(), interior.end(), [&](int64_t x, int64_t y) {
      const auto& rx = roles[static_cast<size_t>(x)];
      const auto& ry = roles[static_cast<size_t>(y)];
      if (rx.level != ry.level) return rx.level < ry.level;
      return x < y;
    });
    order.insert(order.end(), interior.begin(), interior.end());
    a = b;
  }
  return order;
}

int qp_offset_for_level(const GopConfig& cfg, int level) {
  if (cfg.level_qp_offsets.empty()) return 0;
  const size_t idx = std::min<size_t>(static_cast<size_t>(std::max(level, 0)),
                                      cfg.level_qp_offsets.size() - 1);
  return cfg.level_qp_offsets[idx];
}

int first_pass_qp(const GopConfig& cfg, int base_qp, const FrameRole& role) {
  return std::clamp(base_qp + qp_offset_for_level(cfg, role.level), 0, 63);
}

int64_t gop_unit_of_frame(int64_t frame_index, int gop_size) {
  return frame_index == 0 ? 0 : (frame_index - 1) / gop_size;
}

void write_roles_csv(const std::string& path, const std::vector<FrameRole>& roles) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, path + ": cannot open for writing");
  out << "frame_index,type,level,ref0,ref1\n";
  for (const auto& r : roles) {
    out << r.frame_index << ',' << frame_type_name(r.frame_type) << ',' << r.level << ',';
    if (!r.refs.empty()) out << r.refs[0];
    out << ',';
    if (r.refs.size() > 1) out << r.refs[1];
    out << "\n";
  }
  if (!out) raise(ErrorKind::IoError, path + ": write failed");
}

}  // namespace framebits
