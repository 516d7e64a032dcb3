#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "framebits/gop.hpp"
#include "framebits/matrix.hpp"

namespace framebits {

// Z-score statistics from the training fold; serialized with the model so
// inference is self-contained. Constant columns keep stddev 1.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalization fit(const Matrix& x);
  void apply_row(double* row, size_t cols) const;
  Matrix apply(const Matrix& x) const;
};

struct LinearModel {
  std::vector<std::string> feature_names;
  FrameType frame_type = FrameType::I;
  Normalization norm;
  std::vector<double> weights;  // in original feature units
  double intercept = 0.0;
  bool log_labels = false;
};

struct ForestHyperparams {
  int n_estimators = 100;
  int max_depth = 16;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  // Features considered per split: 0 means all (the cited configuration);
  // ceil(p/3) is the usual variance-reducing alternative.
  int max_features = 0;
};

// Flattened binary tree; node 0 is the root, feature -1 marks leaves.
struct RegressionTree {
  std::vector<int32_t> feature;
  std::vector<double> threshold;
  std::vector<int32_t> left;
  std::vector<int32_t> right;
  std::vector<double> value;      // leaf mean (meaningless on internal nodes)
  std::vector<int32_t> n_samples;
  std::vector<double> gain;       // SSE reduction of the split, 0 at leaves

  size_t node_count() const { return feature.size(); }
  double predict_row(const double* row) const;
};

struct ForestModel {
  std::vector<std::string> feature_names;
  FrameType frame_type = FrameType::I;
  Normalization norm;
  ForestHyperparams hyperparams;
  uint64_t seed = 0;
  double label_min = 0.0;
  double label_max = 0.0;
  bool log_labels = false;
  std::vector<RegressionTree> trees;
};

using AnyModel = std::variant<LinearModel, ForestModel>;

// Ordinary least squares via normal equations (Cholesky), ridge fallback
// lambda = 1e-8 when the system is not positive definite.
LinearModel fit_linear(const Matrix& x, const std::vector<double>& y,
                       const std::vector<std::string>& feature_names,
                       FrameType frame_type = FrameType::I);

// Bootstrap-resampled CART regression trees, variance-reduction splits,
// midpoint thresholds, ties broken by lowest feature index then threshold.
// Tree t draws all its randomness from a stream keyed by (seed, t), so serial
// and parallel training build identical forests.
ForestModel fit_forest(const Matrix& x, const std::vector<double>& y,
                       const std::vector<std::string>& feature_names, FrameType frame_type,
                       const ForestHyperparams& hp = {}, uint64_t seed = 0, int threads = 1);

std::vector<double> predict(const LinearModel& m, const Matrix& x);
std::vector<double> predict(const ForestModel& m, const Matrix& x);
std::vector<double> predict(const AnyModel& m, const Matrix& x);
double predict_one(const AnyModel& m, const std::vector<double>& row);

const std::vector<std::string>& model_feature_names(const AnyModel& m);
FrameType model_frame_type(const AnyModel& m);

// Walks every tree and checks the structural contract: depth bound, leaf and
// split sample counts, child consistency, finite leaf values.
void validate_forest(const ForestModel& m);

enum class ImportanceMethod { Impurity, Permutation };

struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<double> scores;  // normalized to sum 1
  ImportanceMethod method = ImportanceMethod::Impurity;

  // Index of the highest-scoring feature (lowest index wins ties).
  size_t top_feature() const;
};

ImportanceReport importance(const ForestModel& m, const Matrix& x_val,
                            const std::vector<double>& y_val, ImportanceMethod method,
                            uint64_t seed = 0);

void save_model(const AnyModel& m, const std::string& path);
AnyModel load_model(const std::string& path);
std::string serialize_model(const AnyModel& m);

}  // namespace framebits
