#include "framebits/ratecontrol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "framebits/csv.hpp"
#include "framebits/errors.hpp"

namespace framebits {

void RcConstants::validate() const {
  if (!(c_low > 0.0)) raise(ErrorKind::InvalidConfig, "c_low must be positive");
  if (!(c_high > 0.0 && c_high < 1.0)) raise(ErrorKind::InvalidConfig, "c_high must be in (0, 1)");
  if (q_start < 0 || q_start > 63) raise(ErrorKind::InvalidConfig, "q_start must be in [0, 63]");
}

double c_high_for_height(int height) {
  if (height <= 0) raise(ErrorKind::InvalidConfig, "height must be positive");
  if (height <= 480) return 0.25;
  if (height >= 2160) return 0.5;
  double t = (std::log2(static_cast<double>(height)) - std::log2(480.0)) /
             (std::log2(2160.0) - std::log2(480.0));
  return 0.25 + t * 0.25;
}

QpRefinement qp_refine(double q, double b_hat, double b_prime, const RcConstants& k) {
  if (!(b_hat > 0.0)) raise(ErrorKind::NonPositiveBits, "predicted bits must be positive");
  if (!(b_prime > 0.0)) raise(ErrorKind::NonPositiveBits, "target bits must be positive");
  QpRefinement r;
  r.q_bar = q - k.c_low * std::sqrt(std::max(1.0, q)) * std::log2(b_prime / b_hat);
  double pulled = r.q_bar + k.c_high * std::max(0.0, static_cast<double>(k.q_start) - r.q_bar);
  long rounded = std::lround(pulled);  // halfway cases away from zero
  long clamped = std::clamp(rounded, 0L, 63L);
  r.q_prime = static_cast<int>(clamped);
  r.clamped = clamped != rounded;
  return r;
}

std::vector<double> allocate_gop(double target_gop_bits, const std::vector<double>& predictions) {
  if (predictions.empty()) raise(ErrorKind::EmptyGop, "no frames to allocate bits to");
  if (!(target_gop_bits > 0.0)) raise(ErrorKind::ZeroTarget, "GOP bit budget must be positive");
  double sum = 0.0;
  for (double p : predictions) {
    if (!(p > 0.0)) raise(ErrorKind::NonPositivePrediction, "predicted bits must be positive");
    sum += p;
  }
  std::vector<double> out(predictions.size());
  double acc = 0.0;
  for (size_t i = 0; i + 1 < predictions.size(); ++i) {
    out[i] = target_gop_bits * predictions[i] / sum;
    acc += out[i];
  }
  out.back() = target_gop_bits - acc;  // absorbs rounding, keeps the sum exact
  return out;
}

CompensatedTarget compensate(double deficit, double next_gop_target, double strength) {
  if (!(next_gop_target > 0.0)) raise(ErrorKind::ZeroTarget, "GOP bit budget must be positive");
  if (!(strength > 0.0 && strength <= 1.0))
    raise(ErrorKind::InvalidConfig, "compensation strength must be in (0, 1]");
  CompensatedTarget r;
  double desired = next_gop_target - strength * deficit;
  double floor = 0.1 * next_gop_target;
  if (desired < floor) {
    r.adjusted = floor;
    r.remaining = deficit - (next_gop_target - floor) / strength;
  } else {
    r.adjusted = desired;
    r.remaining = 0.0;
  }
  return r;
}

double calibrate_c_low(const std::vector<FrameCodingRecord>& records) {
  std::map<std::pair<std::string, int64_t>, std::map<int, std::pair<double, int>>> groups;
  for (const auto& rec : records) {
    auto& acc = groups[{rec.sequence_id, rec.frame_index}][rec.q];
    acc.first += rec.bits;
    ++acc.second;
  }
  double num = 0.0, den = 0.0;
  size_t pairs = 0;
  for (const auto& [key, curve] : groups) {
    (void)key;
    if (curve.size() < 2) continue;
    auto it = curve.begin();
    auto prev = it++;
    for (; it != curve.end(); prev = it++) {
      double q1 = prev->first, b1 = prev->second.first / prev->second.second;
      double q2 = it->first, b2 = it->second.first / it->second.second;
      double s = std::sqrt(std::max(1.0, 0.5 * (q1 + q2)));
      double sl = s * std::log2(b2 / b1);
      num += (q2 - q1) * sl;
      den += sl * sl;
      ++pairs;
    }
  }
  if (pairs == 0) raise(ErrorKind::DegenerateInput, "no frame encoded at two distinct QPs");
  if (den <= 1e-12) raise(ErrorKind::DegenerateInput, "rate is flat across QPs");
  double c = -num / den;
  if (!(c > 0.0)) raise(ErrorKind::DegenerateInput, "rate does not decrease with QP");
  return c;
}

// ---------------------------------------------------------------------------
// Backends

double OracleBackend::bits_for(const FrameRole& role, int q, bool& interpolated) {
  interpolated = false;
  return oracle_base_bits(m_params, m_features, role, q) *
         oracle_noise_factor(m_params, role.frame_index);
}

ReplayBackend::ReplayBackend(const std::vector<FrameCodingRecord>& records) {
  int64_t max_frame = -1;
  for (const auto& r : records) max_frame = std::max(max_frame, r.frame_index);
  m_curves.resize(static_cast<size_t>(max_frame + 1));
  std::vector<std::map<int, std::pair<double, int>>> acc(m_curves.size());
  for (const auto& r : records) {
    auto& cell = acc[static_cast<size_t>(r.frame_index)][r.q];
    cell.first += r.bits;
    ++cell.second;
  }
  for (size_t f = 0; f < acc.size(); ++f) {
    for (const auto& [q, cell] : acc[f]) {
      m_curves[f].qps.push_back(q);
      m_curves[f].bits.push_back(cell.first / cell.second);
    }
  }
}

double ReplayBackend::bits_for(const FrameRole& role, int q, bool& interpolated) {
  int64_t f = role.frame_index;
  if (f < 0 || f >= static_cast<int64_t>(m_curves.size()) || m_curves[static_cast<size_t>(f)].qps.empty())
    raise(ErrorKind::ReplayMiss, "log has no entries for frame " + std::to_string(f));
  const Curve& c = m_curves[static_cast<size_t>(f)];
  auto it = std::lower_bound(c.qps.begin(), c.qps.end(), q);
  if (it != c.qps.end() && *it == q) {
    interpolated = false;
    return c.bits[static_cast<size_t>(it - c.qps.begin())];
  }
  if (c.qps.size() < 2)
    raise(ErrorKind::ReplayMiss, "frame " + std::to_string(f) + " logged only at QP " +
                                     std::to_string(c.qps.front()) +
                                     ", cannot interpolate to QP " + std::to_string(q));
  size_t hi = static_cast<size_t>(it - c.qps.begin());
  if (hi == 0) hi = 1;
  if (hi == c.qps.size()) hi = c.qps.size() - 1;
  size_t lo = hi - 1;
  double t = static_cast<double>(q - c.qps[lo]) / static_cast<double>(c.qps[hi] - c.qps[lo]);
  double lb = std::log2(c.bits[lo]) + t * (std::log2(c.bits[hi]) - std::log2(c.bits[lo]));
  interpolated = true;
  return std::exp2(lb);
}

int base_qp_for_target(EncodeBackend& backend, const std::vector<FrameRole>& roles,
                       const GopConfig& gop, double target_total_bits) {
  if (roles.empty()) raise(ErrorKind::EmptyGop, "no frames");
  if (!(target_total_bits > 0.0)) raise(ErrorKind::ZeroTarget, "target bits must be positive");
  for (int base = 0; base <= 63; ++base) {
    double total = 0.0;
    bool interp = false;
    for (const auto& role : roles) total += backend.bits_for(role, first_pass_qp(gop, base, role), interp);
    if (total <= target_total_bits) return base;
  }
  return 63;
}

// ---------------------------------------------------------------------------
// Session loop

const AnyModel& PredictorSet::for_type(FrameType t) const {
  switch (t) {
    case FrameType::I: return i_model;
    case FrameType::P: return p_model;
    case FrameType::B: return b_model;
  }
  return i_model;
}

namespace {

bool model_uses_chroma(const AnyModel& m) {
  const auto& names = model_feature_names(m);
  return std::find(names.begin(), names.end(), "E_U") != names.end();
}

}  // namespace

RcSessionReport simulate_session(const std::vector<ComplexityRecord>& features,
                                 const std::vector<FrameRole>& roles, const PredictorSet& models,
                                 double target_bitrate, double frame_rate,
                                 const RcConstants& constants, const GopConfig& gop,
                                 EncodeBackend& backend, const RcBehavior& behavior) {
  constants.validate();
  gop.validate();
  if (roles.empty()) raise(ErrorKind::EmptyGop, "no frames to encode");
  if (features.size() != roles.size())
    raise(ErrorKind::Misalignment, "feature count " + std::to_string(features.size()) +
                                       " != role count " + std::to_string(roles.size()));
  if (!(frame_rate > 0.0)) raise(ErrorKind::InvalidConfig, "frame rate must be positive");
  if (!(target_bitrate > 0.0)) raise(ErrorKind::ZeroTarget, "target bitrate must be positive");
  if (!(behavior.strength > 0.0 && behavior.strength <= 1.0))
    raise(ErrorKind::InvalidConfig, "compensation strength must be in (0, 1]");

  const size_t n = roles.size();
  RcSessionReport rep;
  rep.frame_rate = frame_rate;
  rep.target_bitrate = target_bitrate;
  const double total_target = target_bitrate * static_cast<double>(n) / frame_rate;

  int base_qp = behavior.base_qp;
  if (base_qp < 0) base_qp = base_qp_for_target(backend, roles, gop, total_target);
  if (base_qp > 63) raise(ErrorKind::InvalidConfig, "base QP out of range");
  rep.base_qp = base_qp;

  std::vector<int> first_qp(n);
  for (size_t i = 0; i < n; ++i) first_qp[i] = first_pass_qp(gop, base_qp, roles[i]);

  // First pass: predicted bits per frame at the cascaded QPs. Linear models
  // can dip nonpositive; a 1-bit floor keeps the refinement log defined.
  std::vector<double> b_hat(n);
  for (size_t i = 0; i < n; ++i) {
    const AnyModel& m = models.for_type(roles[i].frame_type);
    std::vector<int> ref_qps;
    for (int64_t ref : roles[i].refs) ref_qps.push_back(first_qp[static_cast<size_t>(ref)]);
    auto row = prediction_row(features, roles[i], first_qp[i], ref_qps, model_uses_chroma(m));
    b_hat[i] = std::max(1.0, predict_one(m, row));
  }

  // Display-order GOP units and their share of the sequence budget.
  std::vector<std::vector<size_t>> units;
  for (size_t i = 0; i < n; ++i) {
    size_t u = static_cast<size_t>(gop_unit_of_frame(roles[i].frame_index, gop.gop_size));
    if (u >= units.size()) units.resize(u + 1);
    units[u].push_back(i);
  }
  std::vector<double> unit_pred;
  for (const auto& u : units) {
    double s = 0.0;
    for (size_t i : u) s += b_hat[i];
    unit_pred.push_back(s);
  }
  std::vector<double> unit_target = allocate_gop(total_target, unit_pred);

  rep.decisions.resize(n);
  double deficit = 0.0;
  double achieved_total = 0.0;
  double target_total_acc = 0.0;
  for (size_t u = 0; u < units.size(); ++u) {
    double gop_budget = unit_target[u];
    target_total_acc += gop_budget;
    if (!behavior.per_frame_compensation)
      gop_budget = compensate(deficit, gop_budget, behavior.strength).adjusted;

    std::vector<double> member_pred;
    for (size_t i : units[u]) member_pred.push_back(b_hat[i]);
    std::vector<double> member_target = allocate_gop(gop_budget, member_pred);

    double gop_achieved = 0.0;
    for (size_t m = 0; m < units[u].size(); ++m) {
      size_t i = units[u][m];
      double frame_target = member_target[m];
      if (behavior.per_frame_compensation) {
        frame_target = std::max(0.1 * member_target[m],
                                member_target[m] - behavior.strength * deficit);
      }
      QpRefinement qr = qp_refine(static_cast<double>(first_qp[i]), b_hat[i], frame_target, constants);
      bool interp = false;
      double achieved = backend.bits_for(roles[i], qr.q_prime, interp);

      FrameRcDecision& d = rep.decisions[i];
      d.frame_index = roles[i].frame_index;
      d.frame_type = roles[i].frame_type;
      d.q = first_qp[i];
      d.b_hat = b_hat[i];
      d.b_prime = frame_target;
      d.q_bar = qr.q_bar;
      d.q_prime = qr.q_prime;
      d.clamped = qr.clamped;
      d.interpolated = interp;
      d.achieved_bits = achieved;
      if (qr.clamped) ++rep.clamped_frames;
      if (interp) ++rep.interpolated_frames;

      gop_achieved += achieved;
      if (behavior.per_frame_compensation) {
        deficit += achieved - member_target[m];
        d.deficit_after = deficit;
      }
    }
    achieved_total += gop_achieved;
    if (!behavior.per_frame_compensation) {
      deficit += gop_achieved - unit_target[u];
      // The whole unit reports the deficit as of its close.
      for (size_t i : units[u]) rep.decisions[i].deficit_after = deficit;
    }
  }

  rep.total_target_bits = target_total_acc;
  rep.total_achieved_bits = achieved_total;
  rep.final_deficit = deficit;
  rep.deviation_percent = 100.0 * (achieved_total - target_total_acc) / target_total_acc;
  return rep;
}

void write_report_json(const std::string& path, const RcSessionReport& report) {
  nlohmann::json j;
  j["base_qp"] = report.base_qp;
  j["frame_rate"] = report.frame_rate;
  j["target_bitrate"] = report.target_bitrate;
  j["total_target_bits"] = report.total_target_bits;
  j["total_achieved_bits"] = report.total_achieved_bits;
  j["deviation_percent"] = report.deviation_percent;
  j["final_deficit"] = report.final_deficit;
  j["clamped_frames"] = report.clamped_frames;
  j["interpolated_frames"] = report.interpolated_frames;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& d : report.decisions) {
    frames.push_back({{"frame_index", d.frame_index},
                      {"frame_type", frame_type_name(d.frame_type)},
                      {"q", d.q},
                      {"b_hat", d.b_hat},
                      {"b_prime", d.b_prime},
                      {"q_bar", d.q_bar},
                      {"q_prime", d.q_prime},
                      {"clamped", d.clamped},
                      {"interpolated", d.interpolated},
                      {"achieved_bits", d.achieved_bits},
                      {"deficit_after", d.deficit_after}});
  }
  j["frames"] = std::move(frames);
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) raise(ErrorKind::IoError, "short write to '" + path + "'");
}

}  // namespace framebits
