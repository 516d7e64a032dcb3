#include "framebits/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "framebits/csv.hpp"
#include "framebits/errors.hpp"
#include "framebits/parallel.hpp"
#include "framebits/rng.hpp"

namespace framebits {

void FrameCodingRecord::validate(const std::string& context) const {
  if (q < 0 || q > 63)
    raise(ErrorKind::InvariantViolation, context + ": q " + std::to_string(q) + " outside [0, 63]");
  if (!(bits > 0.0))
    raise(ErrorKind::InvariantViolation, context + ": bits must be positive, got " + format_double(bits));
  const bool wants_ref1 = frame_type != FrameType::I;
  const bool wants_ref2 = frame_type == FrameType::B;
  if (wants_ref1 != q_ref1.has_value())
    raise(ErrorKind::SchemaError, context + ": q_ref1 " + (wants_ref1 ? "missing" : "not allowed") +
                                      " for " + frame_type_name(frame_type) + "-frame");
  if (wants_ref2 != q_ref2.has_value())
    raise(ErrorKind::SchemaError, context + ": q_ref2 " + (wants_ref2 ? "missing" : "not allowed") +
                                      " for " + frame_type_name(frame_type) + "-frame");
  for (const auto& ref : {q_ref1, q_ref2}) {
    if (ref && (*ref < 0 || *ref > 63))
      raise(ErrorKind::InvariantViolation, context + ": reference q outside [0, 63]");
  }
}

static const char* kLogHeader = "sequence_id,frame_index,frame_type,q,q_ref1,q_ref2,bits";

std::vector<FrameCodingRecord> ingest_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::FileNotFound, path);
  std::string line;
  if (!std::getline(in, line)) raise(ErrorKind::ParseError, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader)
    raise(ErrorKind::SchemaError, path + ": expected header '" + std::string(kLogHeader) + "'");

  std::vector<FrameCodingRecord> records;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const auto cells = split_csv_line(line);
    if (cells.size() != 7)
      raise(ErrorKind::SchemaError, ctx + ": expected 7 cells, got " + std::to_string(cells.size()));
    FrameCodingRecord r;
    r.sequence_id = cells[0];
    if (r.sequence_id.empty()) raise(ErrorKind::SchemaError, ctx + ": empty sequence_id");
    r.frame_index = parse_int(cells[1], ctx);
    r.frame_type = frame_type_from_name(cells[2]);
    r.q = static_cast<int>(parse_int(cells[3], ctx));
    if (auto v = parse_optional_int(cells[4], ctx)) r.q_ref1 = static_cast<int>(*v);
    if (auto v = parse_optional_int(cells[5], ctx)) r.q_ref2 = static_cast<int>(*v);
    r.bits = parse_double(cells[6], ctx);
    r.validate(ctx);
    records.push_back(std::move(r));
  }
  return records;
}

void write_log_csv(const std::string& path, const std::vector<FrameCodingRecord>& records) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, path + ": cannot open for writing");
  out << kLogHeader << "\n";
  for (const auto& r : records) {
    out << r.sequence_id << ',' << r.frame_index << ',' << frame_type_name(r.frame_type) << ',' << r.q
        << ',';
    if (r.q_ref1) out << *r.q_ref1;
    out << ',';
    if (r.q_ref2) out << *r.q_ref2;
    out << ',' << format_double(r.bits) << "\n";
  }
  if (!out) raise(ErrorKind::IoError, path + ": write failed");
}

int nearest_gap(int64_t distance) {
  int best = canonical_gaps().front();
  int64_t best_err = std::abs(distance - best);
  for (int g : canonical_gaps()) {
    const int64_t err = std::abs(distance - g);
    if (err < best_err) {  // ties keep the smaller gap
      best = g;
      best_err = err;
    }
  }
  return best;
}

std::optional<double> h_for_reference(const std::vector<ComplexityRecord>& features,
                                      int64_t frame_index, int64_t ref_index, bool strict) {
  const int64_t holder = std::max(frame_index, ref_index);
  const int64_t distance = std::abs(frame_index - ref_index);
  if (distance < 1)
    raise(ErrorKind::Misalignment, "frame " + std::to_string(frame_index) + " references itself");
  if (holder < 0 || holder >= static_cast<int64_t>(features.size()))
    raise(ErrorKind::Misalignment, "reference pair (" + std::to_string(frame_index) + ", " +
                                       std::to_string(ref_index) + ") outside the analyzed range");

  const ComplexityRecord& rec = features[static_cast<size_t>(holder)];
  const int gap = nearest_gap(distance);
  if (auto it = rec.h_by_gap.find(gap); it != rec.h_by_gap.end()) return it->second;

  if (strict) {
    if (holder < gap) return std::nullopt;  // before the sequence start; row gets excluded
    raise(ErrorKind::MissingFeature, "h at gap " + std::to_string(gap) + " missing for frame " +
                                         std::to_string(holder) +
                                         "; re-run the analyzer with that gap enabled");
  }

  // fallback: nearest gap the record actually carries
  int best = -1;
  int64_t best_err = 0;
  for (const auto& [g, h] : rec.h_by_gap) {
    (void)h;
    const int64_t err = std::abs(distance - g);
    if (best < 0 || err < best_err) {
      best = g;
      best_err = err;
    }
  }
  if (best < 0)
    raise(ErrorKind::MissingFeature,
          "no temporal gradient available for frame " + std::to_string(holder));
  return rec.h_by_gap.at(best);
}

std::vector<std::string> feature_names_for(FrameType type, bool use_chroma) {
  std::vector<std::string> names;
  names.emplace_back("E_Y");
  if (type == FrameType::P) names.emplace_back("h_ref");
  if (type == FrameType::B) {
    names.emplace_back("h_ref1");
    names.emplace_back("h_ref2");
  }
  names.emplace_back("L_Y");
  if (use_chroma) {
    names.emplace_back("E_U");
    names.emplace_back("L_U");
    names.emplace_back("E_V");
    names.emplace_back("L_V");
  }
  names.emplace_back("q");
  if (type == FrameType::P) names.emplace_back("q_ref");
  if (type == FrameType::B) {
    names.emplace_back("q_ref1");
    names.emplace_back("q_ref2");
  }
  return names;
}

TrainingMatrix build_matrix(const std::vector<ComplexityRecord>& features,
                            const std::vector<FrameRole>& roles,
                            const std::vector<FrameCodingRecord>& truth, FrameType frame_type,
                            bool use_chroma) {
  if (features.size() != roles.size())
    raise(ErrorKind::Misalignment, "feature count " + std::to_string(features.size()) +
                                       " != role count " + std::to_string(roles.size()));

  TrainingMatrix out;
  out.feature_names = feature_names_for(frame_type, use_chroma);
  const size_t cols = out.feature_names.size();

  std::vector<std::vector<double>> rows;
  for (size_t ti = 0; ti < truth.size(); ++ti) {
    const FrameCodingRecord& t = truth[ti];
    if (t.frame_index < 0 || t.frame_index >= static_cast<int64_t>(roles.size()))
      raise(ErrorKind::Misalignment,
            "log frame " + std::to_string(t.frame_index) + " outside the analyzed range");
    const FrameRole& role = roles[static_cast<size_t>(t.frame_index)];
    if (role.frame_type != t.frame_type)
      raise(ErrorKind::Misalignment, "log frame " + std::to_string(t.frame_index) + " typed " +
                                         frame_type_name(t.frame_type) + " but the GOP structure says " +
                                         frame_type_name(role.frame_type));
    if (t.frame_type != frame_type) continue;

    const ComplexityRecord& rec = features[static_cast<size_t>(t.frame_index)];

    bool excluded = false;
    std::vector<double> h_values;
    for (int64_t ref : role.refs) {
      auto h = h_for_reference(features, t.frame_index, ref, /*strict=*/true);
      if (!h) {
        excluded = true;
        break;
      }
      h_values.push_back(*h);
    }
    if (excluded) {
      ++out.excluded_rows;
      continue;
    }

    std::vector<double> row;
    row.reserve(cols);
    row.push_back(rec.e_y);
    for (double h : h_values) row.push_back(h);
    row.push_back(rec.l_y);
    if (use_chroma) {
      row.push_back(rec.e_u);
      row.push_back(rec.l_u);
      row.push_back(rec.e_v);
      row.push_back(rec.l_v);
    }
    row.push_back(static_cast<double>(t.q));
    if (t.q_ref1) row.push_back(static_cast<double>(*t.q_ref1));
    if (t.q_ref2) row.push_back(static_cast<double>(*t.q_ref2));
    if (row.size() != cols)
      raise(ErrorKind::Misalignment, "row arity " + std::to_string(row.size()) + " != " +
                                         std::to_string(cols) + " for frame " +
                                         std::to_string(t.frame_index));

    rows.push_back(std::move(row));
    out.y.push_back(t.bits);
    out.truth_rows.push_back(ti);
  }

  out.x = Matrix(rows.size(), cols);
  for (size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), out.x.row(r));
  return out;
}

void append_matrix(TrainingMatrix& a, const TrainingMatrix& b) {
  if (a.feature_names.empty()) {
    a = b;
    return;
  }
  if (a.feature_names != b.feature_names)
    raise(ErrorKind::Misalignment, "cannot merge matrices with different feature layouts");
  Matrix merged(a.x.rows + b.x.rows, a.x.cols);
  std::copy(a.x.data.begin(), a.x.data.end(), merged.data.begin());
  std::copy(b.x.data.begin(), b.x.data.end(), merged.data.begin() + static_cast<long>(a.x.data.size()));
  a.x = std::move(merged);
  a.y.insert(a.y.end(), b.y.begin(), b.y.end());
  a.truth_rows.insert(a.truth_rows.end(), b.truth_rows.begin(), b.truth_rows.end());
  a.excluded_rows += b.excluded_rows;
}

void write_matrix_csv(const std::string& path, const TrainingMatrix& m) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::IoError, path + ": cannot open for writing");
  for (size_t c = 0; c < m.feature_names.size(); ++c) out << m.feature_names[c] << ',';
  out << "bits\n";
  for (size_t r = 0; r < m.x.rows; ++r) {
    for (size_t c = 0; c < m.x.cols; ++c) out << format_double(m.x.at(r, c)) << ',';
    out << format_double(m.y[r]) << "\n";
  }
  if (!out) raise(ErrorKind::IoError, path + ": write failed");
}

void OracleCoeffs::validate() const {
  if (!(alpha > 0.0)) raise(ErrorKind::InvalidConfig, "oracle alpha must be positive");
  if (!(gamma > 0.0)) raise(ErrorKind::InvalidConfig, "oracle gamma must be positive");
}

const OracleCoeffs& SyntheticOracleParams::coeffs_for(FrameType t) const {
  switch (t) {
    case FrameType::I: return i_coeffs;
    case FrameType::P: return p_coeffs;
    default: return b_coeffs;
  }
}

void SyntheticOracleParams::validate() const {
  i_coeffs.validate();
  p_coeffs.validate();
  b_coeffs.validate();
  if (noise < 0.0 || noise >= 1.0)
    raise(ErrorKind::InvalidConfig, "oracle noise must lie in [0, 1)");
}

double oracle_base_bits(const SyntheticOracleParams& params,
                        const std::vector<ComplexityRecord>& features, const FrameRole& role, int q) {
  const OracleCoeffs& c = params.coeffs_for(role.frame_type);
  const ComplexityRecord& rec = features[static_cast<size_t>(role.frame_index)];
  double h_sum = 0.0;
  for (int64_t ref : role.refs) {
    auto h = h_for_reference(features, role.frame_index, ref, /*strict=*/false);
    h_sum += h.value_or(0.0);
  }
  const double content = 1.0 + c.beta_e * rec.e_y + c.beta_h * h_sum;
  return c.alpha * content * std::exp2(-(static_cast<double>(q) - 24.0) / c.gamma);
}

double oracle_noise_factor(const SyntheticOracleParams& params, int64_t frame_index) {
  if (params.noise == 0.0) return 1.0;
  auto rng = make_rng(params.seed, static_cast<uint64_t>(frame_index));
  return 1.0 + params.noise * (2.0 * draw_unit(rng) - 1.0);
}

std::vector<FrameCodingRecord> synth_encode(const std::vector<ComplexityRecord>& features,
                                            const std::vector<FrameRole>& roles,
                                            const SyntheticOracleParams& params,
                                            const std::vector<int>& frame_qps,
                                            const std::string& sequence_id, int threads) {
  params.validate();
  if (features.size() != roles.size() || frame_qps.size() != roles.size())
    raise(ErrorKind::Misalignment, "features, roles, and QP assignment must cover the same frames");

  std::vector<FrameCodingRecord> records(roles.size());
  parallel_for(roles.size(), threads, [&](size_t i) {
    const FrameRole& role = roles[i];
    FrameCodingRecord r;
    r.sequence_id = sequence_id;
    r.frame_index = role.frame_index;
    r.frame_type = role.frame_type;
    r.q = frame_qps[i];
    if (role.refs.size() >= 1) r.q_ref1 = frame_qps[static_cast<size_t>(role.refs[0])];
    if (role.refs.size() >= 2) r.q_ref2 = frame_qps[static_cast<size_t>(role.refs[1])];
    r.bits = oracle_base_bits(params, features, role, r.q) * oracle_noise_factor(params, role.frame_index);
    records[i] = std::move(r);
  });
  return records;
}

std::vector<FrameCodingRecord> synth_sweep(const std::vector<ComplexityRecord>& features,
                                           const std::vector<FrameRole>& roles, const GopConfig& gop,
                                           const SyntheticOracleParams& params,
                                           const std::vector<int>& base_qps,
                                           const std::string& sequence_id) {
  std::vector<FrameCodingRecord> all;
  for (int base : base_qps) {
    SyntheticOracleParams run = params;
    run.seed = mix_seed(params.seed, static_cast<uint64_t>(base));
    std::vector<int> qps(roles.size());
    for (size_t i = 0; i < roles.size(); ++i) qps[i] = first_pass_qp(gop, base, roles[i]);
    auto records = synth_encode(features, roles, run, qps, sequence_id);
    all.insert(all.end(), std::make_move_iterator(records.begin()),
               std::make_move_iterator(records.end()));
  }
  return all;
}

std::vector<double> prediction_row(const std::vector<ComplexityRecord>& features,
                                   const FrameRole& role, int q, const std::vector<int>& ref_qps,
                                   bool use_chroma) {
  if (ref_qps.size() != role.refs.size())
    raise(ErrorKind::Misalignment, "frame " + std::to_string(role.frame_index) + " has " +
                                       std::to_string(role.refs.size()) + " references but " +
                                       std::to_string(ref_qps.size()) + " reference QPs");
  if (role.frame_index < 0 || role.frame_index >= static_cast<int64_t>(features.size()))
    raise(ErrorKind::Misalignment,
          "frame " + std::to_string(role.frame_index) + " outside the analyzed range");
  const ComplexityRecord& rec = features[static_cast<size_t>(role.frame_index)];

  std::vector<double> row;
  row.push_back(rec.e_y);
  for (int64_t ref : role.refs) {
    auto h = h_for_reference(features, role.frame_index, ref, /*strict=*/false);
    if (!h)
      raise(ErrorKind::MissingFeature, "no temporal gradient available for frame " +
                                           std::to_string(role.frame_index) + " ref " +
                                           std::to_string(ref));
    row.push_back(*h);
  }
  row.push_back(rec.l_y);
  if (use_chroma) {
    row.push_back(rec.e_u);
    row.push_back(rec.l_u);
    row.push_back(rec.e_v);
    row.push_back(rec.l_v);
  }
  row.push_back(static_cast<double>(q));
  for (int rq : ref_qps) row.push_back(static_cast<double>(rq));
  return row;
}

std::vector<Fold> kfold_split(const std::vector<std::string>& sequence_ids, int k, uint64_t seed) {
  if (k < 2) raise(ErrorKind::InvalidConfig, "k must be >= 2");

  std::vector<std::string> unique = sequence_ids;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (static_cast<int>(unique.size()) < k)
    raise(ErrorKind::TooFewSequences, "need at least " + std::to_string(k) + " distinct sequences, have " +
                                          std::to_string(unique.size()));

  auto rng = make_rng(seed, 0x6b666f6c64ULL);  // fold shuffle stream
  shuffle_fisher_yates(unique, rng);

  std::vector<Fold> folds(static_cast<size_t>(k));
  for (size_t i = 0; i < unique.size(); ++i)
    folds[i % static_cast<size_t>(k)].test_ids.push_back(unique[i]);
  for (auto& fold : folds) {
    std::sort(fold.test_ids.begin(), fold.test_ids.end());
    for (const auto& id : unique)
      if (!std::binary_search(fold.test_ids.begin(), fold.test_ids.end(), id))
        fold.train_ids.push_back(id);
    std::sort(fold.train_ids.begin(), fold.train_ids.end());
  }
  return folds;
}

}  // namespace framebits
