#include "framebits/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "framebits/errors.hpp"
#include "framebits/metrics.hpp"
#include "framebits/rng.hpp"

namespace framebits {

const char* model_kind_name(ModelKind k) { return k == ModelKind::Linear ? "linear" : "forest"; }

ModelKind model_kind_from_name(const std::string& s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "forest") return ModelKind::Forest;
  raise(ErrorKind::InvalidConfig, "unknown model kind '" + s + "' (linear, forest)");
}

namespace {

TrainingMatrix pooled_subset(const std::vector<SequenceData>& corpus,
                             const std::vector<std::string>& ids, FrameType type, bool use_chroma) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  TrainingMatrix pooled;
  for (const auto& seq : corpus) {
    if (wanted.find(seq.id) == wanted.end()) continue;
    TrainingMatrix m = build_matrix(seq.features, seq.roles, seq.log, type, use_chroma);
    append_matrix(pooled, m);
  }
  return pooled;
}

// Bits are multiplicative in QP and content, so both families fit log2(bits)
// and predict() maps back through exp2 via the log_labels flag.
AnyModel fit_kind(const TrainingMatrix& m, FrameType type, ModelKind kind,
                  const ForestHyperparams& hp, uint64_t seed, int threads) {
  std::vector<double> logy(m.y.size());
  for (size_t i = 0; i < m.y.size(); ++i) {
    if (!(m.y[i] > 0.0))
      raise(ErrorKind::DegenerateInput, "bits label must be positive for log-domain training");
    logy[i] = std::log2(m.y[i]);
  }
  if (kind == ModelKind::Linear) {
    LinearModel lm = fit_linear(m.x, logy, m.feature_names, type);
    lm.log_labels = true;
    return lm;
  }
  ForestModel fm = fit_forest(m.x, logy, m.feature_names, type, hp, seed, threads);
  fm.log_labels = true;
  return fm;
}

}  // namespace

TrainingMatrix pooled_matrix(const std::vector<SequenceData>& corpus, FrameType type,
                             bool use_chroma) {
  std::vector<std::string> ids;
  for (const auto& seq : corpus) ids.push_back(seq.id);
  return pooled_subset(corpus, ids, type, use_chroma);
}

CvResult cross_validate(const std::vector<SequenceData>& corpus, FrameType type, ModelKind kind,
                        bool use_chroma, int folds, const ForestHyperparams& hp, uint64_t seed,
                        int threads) {
  CvResult out;
  out.frame_type = type;
  out.kind = kind;
  out.use_chroma = use_chroma;

  std::vector<std::string> ids;
  for (const auto& seq : corpus) ids.push_back(seq.id);
  auto split = kfold_split(ids, folds, seed);

  for (const auto& fold : split) {
    TrainingMatrix train = pooled_subset(corpus, fold.train_ids, type, use_chroma);
    TrainingMatrix test = pooled_subset(corpus, fold.test_ids, type, use_chroma);
    if (train.x.rows == 0 || test.x.rows == 0)
      raise(ErrorKind::DegenerateInput, "fold with no rows for frame type " +
                                            std::string(frame_type_name(type)));
    AnyModel model = fit_kind(train, type, kind, hp, seed, threads);
    std::vector<double> pred = predict(model, test.x);
    FoldScore score;
    score.mape = mape(test.y, pred);
    score.r2 = r2(test.y, pred);
    score.train_rows = train.x.rows;
    score.test_rows = test.x.rows;
    out.folds.push_back(score);
    out.mean_mape += score.mape;
    out.mean_r2 += score.r2;
  }
  out.mean_mape /= static_cast<double>(out.folds.size());
  out.mean_r2 /= static_cast<double>(out.folds.size());
  return out;
}

AnyModel train_pooled(const std::vector<SequenceData>& corpus, FrameType type, ModelKind kind,
                      bool use_chroma, const ForestHyperparams& hp, uint64_t seed, int threads) {
  TrainingMatrix m = pooled_matrix(corpus, type, use_chroma);
  if (m.x.rows == 0)
    raise(ErrorKind::DegenerateInput,
          "no rows for frame type " + std::string(frame_type_name(type)));
  return fit_kind(m, type, kind, hp, seed, threads);
}

SequenceData build_synthetic_sequence(const CorpusSpec& spec, uint64_t index) {
  SequenceData seq;
  char name[32];
  std::snprintf(name, sizeof(name), "seq%03llu", static_cast<unsigned long long>(index));
  seq.id = name;
  SynthParams params =
      draw_synth_params(spec.seed, index, spec.width, spec.height, spec.frames);
  MemorySequence video = generate_synth_sequence(params);
  seq.features = analyze_sequence(video, spec.analyzer);
  seq.roles = classify_frames(spec.frames, spec.gop);
  return seq;
}

std::vector<SequenceData> build_synthetic_corpus(const CorpusSpec& spec) {
  if (spec.sequences < 1) raise(ErrorKind::InvalidConfig, "need at least one sequence");
  spec.gop.validate();
  spec.oracle.validate();
  std::vector<SequenceData> corpus;
  corpus.reserve(static_cast<size_t>(spec.sequences));
  for (int i = 0; i < spec.sequences; ++i) {
    SequenceData seq = build_synthetic_sequence(spec, static_cast<uint64_t>(i));
    SyntheticOracleParams oracle = spec.oracle;
    oracle.seed = mix_seed(spec.oracle.seed, static_cast<uint64_t>(i));
    seq.log = synth_sweep(seq.features, seq.roles, spec.gop, oracle, spec.base_qps, seq.id);
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace framebits
