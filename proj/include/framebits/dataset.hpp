#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "framebits/complexity.hpp"
#include "framebits/gop.hpp"
#include "framebits/matrix.hpp"

namespace framebits {

struct FrameCodingRecord {
  std::string sequence_id;
  int64_t frame_index = 0;
  FrameType frame_type = FrameType::I;
  int q = 0;
  std::optional<int> q_ref1;  // present iff P or B
  std::optional<int> q_ref2;  // present iff B
  double bits = 0.0;

  void validate(const std::string& context) const;
};

std::vector<FrameCodingRecord> ingest_log(const std::string& path);
void write_log_csv(const std::string& path, const std::vector<FrameCodingRecord>& records);

// Reference distance -> temporal gap used for the h feature. Exact for
// power-of-two distances; otherwise the nearest configured gap, ties toward
// the smaller one.
int nearest_gap(int64_t distance);

struct TrainingMatrix {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> feature_names;
  std::vector<size_t> truth_rows;  // row i of x came from truth[truth_rows[i]]
  size_t excluded_rows = 0;        // dropped because a needed h was not yet defined
};

std::vector<std::string> feature_names_for(FrameType type, bool use_chroma);

// Joins per-frame features, GOP roles, and ground truth into the frame-type
// design matrix. Rows whose h gap falls before the start of the sequence are
// excluded and counted; a gap the analyzer never produced is an error.
TrainingMatrix build_matrix(const std::vector<ComplexityRecord>& features,
                            const std::vector<FrameRole>& roles,
                            const std::vector<FrameCodingRecord>& truth, FrameType frame_type,
                            bool use_chroma);

// Concatenates rows of b onto a (same feature layout required); used to merge
// per-sequence matrices into one training set.
void append_matrix(TrainingMatrix& a, const TrainingMatrix& b);

void write_matrix_csv(const std::string& path, const TrainingMatrix& m);

// Per-frame-type coefficients of the synthetic encoder:
//   bits = alpha * (1 + beta_e * E_Y + beta_h * (h_ref1 + h_ref2))
//            * 2^(-(q - 24) / gamma) * (1 + noise),  noise ~ U(-eps, eps)
struct OracleCoeffs {
  double alpha = 1000.0;
  double beta_e = 0.05;
  double beta_h = 0.1;
  double gamma = 6.0;

  void validate() const;
};

struct SyntheticOracleParams {
  OracleCoeffs i_coeffs{8000.0, 0.05, 0.0, 6.0};
  OracleCoeffs p_coeffs{3000.0, 0.05, 0.12, 6.0};
  OracleCoeffs b_coeffs{1200.0, 0.05, 0.12, 6.0};
  double noise = 0.0;  // eps in [0, 1)
  uint64_t seed = 0;

  const OracleCoeffs& coeffs_for(FrameType t) const;
  void validate() const;
};

// Noise-free bits for one frame at QP q. The h terms follow the same
// reference-distance mapping the training matrices use.
double oracle_base_bits(const SyntheticOracleParams& params,
                        const std::vector<ComplexityRecord>& features, const FrameRole& role, int q);

// Multiplicative noise factor for a frame; a function of (seed, frame_index)
// only, so the rate curve of a frame is consistent across QPs.
double oracle_noise_factor(const SyntheticOracleParams& params, int64_t frame_index);

std::vector<FrameCodingRecord> synth_encode(const std::vector<ComplexityRecord>& features,
                                            const std::vector<FrameRole>& roles,
                                            const SyntheticOracleParams& params,
                                            const std::vector<int>& frame_qps,
                                            const std::string& sequence_id = "synthetic",
                                            int threads = 1);

// QP-sweep dataset: one synth_encode run per base QP, cascaded by GOP level,
// each run with a noise stream derived from (params.seed, base_qp).
std::vector<FrameCodingRecord> synth_sweep(const std::vector<ComplexityRecord>& features,
                                           const std::vector<FrameRole>& roles, const GopConfig& gop,
                                           const SyntheticOracleParams& params,
                                           const std::vector<int>& base_qps,
                                           const std::string& sequence_id);

// Single feature row for inference, laid out exactly like the training
// matrix. ref_qps pairs up with role.refs; h uses the nearest-gap fallback.
std::vector<double> prediction_row(const std::vector<ComplexityRecord>& features,
                                   const FrameRole& role, int q, const std::vector<int>& ref_qps,
                                   bool use_chroma);

struct Fold {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

std::vector<Fold> kfold_split(const std::vector<std::string>& sequence_ids, int k, uint64_t seed);

// H feature lookup used by both training and simulation. The holder record is
// the later of (frame, ref), so future references need no backward pass. In
// strict mode a gap that predates the sequence start yields nullopt (the row
// is excluded); otherwise the nearest gap the holder actually has is used.
std::optional<double> h_for_reference(const std::vector<ComplexityRecord>& features,
                                      int64_t frame_index, int64_t ref_index, bool strict);

}  // namespace framebits
