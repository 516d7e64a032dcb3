#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "framebits/dataset.hpp"
#include "framebits/gop.hpp"
#include "framebits/models.hpp"

namespace framebits {

struct RcConstants {
  double c_low = 1.0;   // scaling of the sqrt(q) low-rate term
  double c_high = 0.5;  // pull toward q_start, resolution dependent
  int q_start = 24;

  void validate() const;
};

// 0.25 at heights <= 480, 0.5 at >= 2160, log2(height)-linear between.
double c_high_for_height(int height);

struct QpRefinement {
  double q_bar = 0.0;  // pre-rounding refined QP
  int q_prime = 0;     // final integer QP in [0, 63]
  bool clamped = false;
};

// Maps a first-pass (q, predicted bits) pair and a bit target to the refined
// QP: q_bar = q - c_low*sqrt(max(1,q))*log2(target/predicted), then a pull of
// c_high*(q_start - q_bar) when q_bar sits below q_start. Rounding is
// half-away-from-zero, then a clamp to [0, 63].
QpRefinement qp_refine(double q, double b_hat, double b_prime, const RcConstants& k);

// Splits a GOP bit budget across frames proportionally to predicted bits;
// the final frame absorbs the floating-point remainder so the sum is exact.
std::vector<double> allocate_gop(double target_gop_bits, const std::vector<double>& predictions);

struct CompensatedTarget {
  double adjusted = 0.0;   // bit budget to actually allocate
  double remaining = 0.0;  // deficit the floor prevented from being applied
};

// Shrinks (or grows, for negative deficit) the next budget by
// strength*deficit, floored at 10% of the nominal budget; whatever the floor
// blocked is reported back for the caller to carry.
CompensatedTarget compensate(double deficit, double next_gop_target, double strength);

// Least-squares fit of c_low from logged (q, bits) pairs: consecutive encodes
// of one frame at QPs q1 < q2 satisfy q2 - q1 = -c_low*sqrt(max(1,qm))*
// log2(b2/b1) under the refinement model, qm the pair midpoint.
double calibrate_c_low(const std::vector<FrameCodingRecord>& records);

// Bit source for the second pass: the synthetic oracle or a replayed log.
class EncodeBackend {
public:
  virtual ~EncodeBackend() = default;
  // Achieved bits for coding the frame at QP q. Sets interpolated when the
  // value was not measured directly (replay between logged QPs).
  virtual double bits_for(const FrameRole& role, int q, bool& interpolated) = 0;
};

class OracleBackend : public EncodeBackend {
public:
  OracleBackend(const SyntheticOracleParams& params, const std::vector<ComplexityRecord>& features)
    : m_params(params), m_features(features) {}

  double bits_for(const FrameRole& role, int q, bool& interpolated) override;

private:
  SyntheticOracleParams m_params;
  const std::vector<ComplexityRecord>& m_features;
};

// Replays a sweep log. Exact (frame, q) hits return the logged bits;
// otherwise bits are interpolated log-linearly between the two nearest
// logged QPs (the two extremes when q falls outside the logged range) and
// the result is flagged. Duplicate (frame, q) entries are averaged.
class ReplayBackend : public EncodeBackend {
public:
  explicit ReplayBackend(const std::vector<FrameCodingRecord>& records);

  double bits_for(const FrameRole& role, int q, bool& interpolated) override;

private:
  struct Curve {
    std::vector<int> qps;      // ascending, unique
    std::vector<double> bits;  // averaged per QP
  };
  std::vector<Curve> m_curves;  // indexed by frame
};

// Smallest base QP whose cascaded first-pass rate does not exceed the target;
// falls back to the closest undershoot (QP 63) when even that is too big.
int base_qp_for_target(EncodeBackend& backend, const std::vector<FrameRole>& roles,
                       const GopConfig& gop, double target_total_bits);

struct PredictorSet {
  AnyModel i_model;
  AnyModel p_model;
  AnyModel b_model;

  const AnyModel& for_type(FrameType t) const;
};

struct RcBehavior {
  double strength = 1.0;               // fraction of the deficit fed back
  bool per_frame_compensation = false; // apply the feedback inside GOPs too
  int base_qp = -1;                    // first-pass base QP; -1 inverts the backend
};

struct FrameRcDecision {
  int64_t frame_index = 0;
  FrameType frame_type = FrameType::I;
  int q = 0;                 // first-pass QP
  double b_hat = 0.0;        // predicted bits at q
  double b_prime = 0.0;      // per-frame bit target after compensation
  double q_bar = 0.0;
  int q_prime = 0;
  bool clamped = false;
  bool interpolated = false;
  double achieved_bits = 0.0;
  double deficit_after = 0.0;
};

struct RcSessionReport {
  int base_qp = 0;
  double frame_rate = 0.0;
  double target_bitrate = 0.0;      // bits per second
  double total_target_bits = 0.0;
  double total_achieved_bits = 0.0;
  double deviation_percent = 0.0;   // 100*(achieved - target)/target
  double final_deficit = 0.0;       // achieved minus target, tracked per GOP
  int64_t clamped_frames = 0;
  int64_t interpolated_frames = 0;
  std::vector<FrameRcDecision> decisions;  // display order
};

// Second-pass loop: per GOP, predict bits at first-pass QPs, allocate the
// (deficit-compensated) GOP budget proportionally, refine each frame's QP,
// and book achieved bits from the backend. Sequential across GOPs by design;
// the deficit is feedback state.
RcSessionReport simulate_session(const std::vector<ComplexityRecord>& features,
                                 const std::vector<FrameRole>& roles, const PredictorSet& models,
                                 double target_bitrate, double frame_rate,
                                 const RcConstants& constants, const GopConfig& gop,
                                 EncodeBackend& backend, const RcBehavior& behavior = {});

void write_report_json(const std::string& path, const RcSessionReport& report);

}  // namespace framebits
