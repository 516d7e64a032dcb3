#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace framebits {

enum class FrameType { I, P, B };

const char* frame_type_name(FrameType t);
FrameType frame_type_from_name(const std::string& s);

struct GopConfig {
  int gop_size = 32;
  int intra_period = 64;
  // First-pass QP cascade: per-frame QP = base + offset[level].
  std::vector<int> level_qp_offsets = {0, 1, 2, 3, 4, 5};

  void validate() const;
};

struct FrameRole {
  int64_t frame_index = 0;
  FrameType frame_type = FrameType::I;
  int level = 0;  // 0 for I/P, 1..log2(gop_size) for B
  std::vector<int64_t> refs;  // empty for I, {past} for P, {past, future} for B

  bool has_refs() const { return !refs.empty(); }
};

// Hierarchical random-access structure: I at intra-period boundaries, P at the
// remaining GOP boundaries, binary mid-point B pyramid in between. Sequence
// tails shorter than one GOP become a truncated pyramid over the remaining span.
std::vector<FrameRole> classify_frames(int64_t frame_count, const GopConfig& cfg);

// Topological permutation: anchors first, then B levels top-down; every
// frame appears after both of its references.
std::vector<int64_t> decode_order(const std::vector<FrameRole>& roles);

int qp_offset_for_level(const GopConfig& cfg, int level);
int first_pass_qp(const GopConfig& cfg, int base_qp, const FrameRole& role);

// Display-order GOP units: frame 0 alone with unit 0, then (g*gop, (g+1)*gop]
// per unit; the terminal anchor of each span belongs to the unit it closes.
int64_t gop_unit_of_frame(int64_t frame_index, int gop_size);

void write_roles_csv(const std::string& path, const std::vector<FrameRole>& roles);

}  // namespace framebits
