#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "framebits/complexity.hpp"
#include "framebits/dataset.hpp"
#include "framebits/gop.hpp"
#include "framebits/models.hpp"
#include "framebits/synthvideo.hpp"

namespace framebits {

// One analyzed sequence with its coding log; the unit of cross-validation
// (folds split whole sequences, never frames, so test content is unseen).
struct SequenceData {
  std::string id;
  std::vector<ComplexityRecord> features;
  std::vector<FrameRole> roles;
  std::vector<FrameCodingRecord> log;
};

enum class ModelKind { Linear, Forest };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);

struct FoldScore {
  double mape = 0.0;
  double r2 = 0.0;
  size_t train_rows = 0;
  size_t test_rows = 0;
};

struct CvResult {
  FrameType frame_type = FrameType::I;
  ModelKind kind = ModelKind::Forest;
  bool use_chroma = true;
  std::vector<FoldScore> folds;
  double mean_mape = 0.0;
  double mean_r2 = 0.0;
};

// Pools the per-sequence training matrices for one frame type.
TrainingMatrix pooled_matrix(const std::vector<SequenceData>& corpus, FrameType type,
                             bool use_chroma);

// Sequence-level k-fold cross-validation of one (frame type, model family)
// cell: per-fold MAPE and R2 on held-out sequences plus their means.
CvResult cross_validate(const std::vector<SequenceData>& corpus, FrameType type, ModelKind kind,
                        bool use_chroma, int folds, const ForestHyperparams& hp, uint64_t seed,
                        int threads);

// Final model over the whole corpus (the artifact shipped after CV).
AnyModel train_pooled(const std::vector<SequenceData>& corpus, FrameType type, ModelKind kind,
                      bool use_chroma, const ForestHyperparams& hp, uint64_t seed, int threads);

// Synthetic corpus: `sequences` generated clips, each analyzed and swept
// through the oracle at every base QP with the GOP-level QP cascade.
struct CorpusSpec {
  int sequences = 50;
  int frames = 97;
  int width = 96;
  int height = 64;
  std::vector<int> base_qps = {20, 25, 30, 35, 40, 45, 50};
  uint64_t seed = 0;
  GopConfig gop;
  SyntheticOracleParams oracle;
  AnalyzerConfig analyzer;
};

std::vector<SequenceData> build_synthetic_corpus(const CorpusSpec& spec);

// One generated, analyzed sequence without logs; the simulation entry point.
SequenceData build_synthetic_sequence(const CorpusSpec& spec, uint64_t index);

}  // namespace framebits
