#include "framebits/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "framebits/errors.hpp"
#include "framebits/parallel.hpp"
#include "framebits/rng.hpp"

namespace framebits {

namespace {

using json = nlohmann::json;

void check_xy(const Matrix& x, const std::vector<double>& y,
              const std::vector<std::string>& feature_names) {
  if (feature_names.size() != x.cols)
    raise(ErrorKind::FeatureMismatch, "matrix has " + std::to_string(x.cols) +
                                          " columns but " + std::to_string(feature_names.size()) +
                                          " feature names");
  if (y.size() != x.rows)
    raise(ErrorKind::LengthMismatch, "matrix has " + std::to_string(x.rows) + " rows but " +
                                         std::to_string(y.size()) + " labels");
  for (double v : x.data)
    if (!std::isfinite(v)) raise(ErrorKind::DegenerateInput, "non-finite feature value");
  for (double v : y)
    if (!std::isfinite(v)) raise(ErrorKind::DegenerateInput, "non-finite label");
}

}  // namespace

Normalization Normalization::fit(const Matrix& x) {
  Normalization n;
  n.mean.assign(x.cols, 0.0);
  n.stddev.assign(x.cols, 1.0);
  if (x.rows == 0) return n;
  for (size_t r = 0; r < x.rows; ++r)
    for (size_t c = 0; c < x.cols; ++c) n.mean[c] += x.at(r, c);
  for (size_t c = 0; c < x.cols; ++c) n.mean[c] /= static_cast<double>(x.rows);
  std::vector<double> ss(x.cols, 0.0);
  for (size_t r = 0; r < x.rows; ++r)
    for (size_t c = 0; c < x.cols; ++c) {
      double d = x.at(r, c) - n.mean[c];
      ss[c] += d * d;
    }
  for (size_t c = 0; c < x.cols; ++c) {
    double sd = std::sqrt(ss[c] / static_cast<double>(x.rows));
    n.stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
  return n;
}

void Normalization::apply_row(double* row, size_t cols) const {
  for (size_t c = 0; c < cols && c < mean.size(); ++c)
    row[c] = (row[c] - mean[c]) / stddev[c];
}

Matrix Normalization::apply(const Matrix& x) const {
  Matrix out = x;
  for (size_t r = 0; r < out.rows; ++r) apply_row(out.row(r), out.cols);
  return out;
}

// ---------------------------------------------------------------------------
// Linear model

namespace {

// In-place lower Cholesky of a dense symmetric n x n matrix. Returns false on
// a non-positive pivot (not positive definite).
bool cholesky(std::vector<double>& a, size_t n) {
  for (size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    double lj = std::sqrt(d);
    a[j * n + j] = lj;
    for (size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / lj;
    }
  }
  return true;
}

// Solves L L^T x = b given the Cholesky factor in the lower triangle.
void cholesky_solve(const std::vector<double>& l, size_t n, std::vector<double>& b) {
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
  for (size_t ii = n; ii > 0; --ii) {
    size_t i = ii - 1;
    double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
}

}  // namespace

LinearModel fit_linear(const Matrix& x, const std::vector<double>& y,
                       const std::vector<std::string>& feature_names, FrameType frame_type) {
  check_xy(x, y, feature_names);
  if (x.rows < x.cols + 1)
    raise(ErrorKind::DegenerateInput, "need at least " + std::to_string(x.cols + 1) +
                                          " rows to fit " + std::to_string(x.cols) +
                                          " features, got " + std::to_string(x.rows));
  bool all_same = true;
  for (size_t r = 1; r < x.rows && all_same; ++r)
    for (size_t c = 0; c < x.cols; ++c)
      if (x.at(r, c) != x.at(0, c)) {
        all_same = false;
        break;
      }
  if (all_same && x.cols > 0) raise(ErrorKind::DegenerateInput, "all feature rows are identical");

  LinearModel m;
  m.feature_names = feature_names;
  m.frame_type = frame_type;
  m.norm = Normalization::fit(x);
  Matrix z = m.norm.apply(x);

  // Augmented system [Z 1]; intercept occupies the last slot.
  const size_t p = x.cols;
  const size_t n = p + 1;
  std::vector<double> a(n * n, 0.0);
  std::vector<double> rhs(n, 0.0);
  for (size_t r = 0; r < z.rows; ++r) {
    const double* row = z.row(r);
    for (size_t i = 0; i < p; ++i) {
      for (size_t j = 0; j <= i; ++j) a[i * n + j] += row[i] * row[j];
      a[p * n + i] += row[i];
      rhs[i] += row[i] * y[r];
    }
    rhs[p] += y[r];
  }
  a[p * n + p] = static_cast<double>(z.rows);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) a[i * n + j] = a[j * n + i];

  std::vector<double> factor = a;
  if (!cholesky(factor, n)) {
    // Rank deficiency (duplicated or constant columns): tiny ridge on the
    // feature block restores definiteness, intercept stays unpenalized.
    factor = a;
    for (size_t i = 0; i < p; ++i) factor[i * n + i] += 1e-8;
    if (!cholesky(factor, n)) raise(ErrorKind::DegenerateInput, "normal equations not solvable");
  }
  cholesky_solve(factor, n, rhs);

  // Back out original-unit weights so prediction needs no normalization step:
  // z_j = (x_j - mu_j) / sd_j.
  m.weights.assign(p, 0.0);
  double intercept = rhs[p];
  for (size_t j = 0; j < p; ++j) {
    m.weights[j] = rhs[j] / m.norm.stddev[j];
    intercept -= rhs[j] * m.norm.mean[j] / m.norm.stddev[j];
  }
  m.intercept = intercept;
  for (double w : m.weights)
    if (!std::isfinite(w)) raise(ErrorKind::DegenerateInput, "non-finite fitted weight");
  if (!std::isfinite(m.intercept)) raise(ErrorKind::DegenerateInput, "non-finite intercept");
  return m;
}

// ---------------------------------------------------------------------------
// Random forest

double RegressionTree::predict_row(const double* row) const {
  int32_t i = 0;
  while (feature[i] >= 0) i = row[feature[i]] <= threshold[i] ? left[i] : right[i];
  return value[i];
}

namespace {

// Builds one CART tree over a bootstrap sample. Samples live in idx; a node
// owns idx[begin, end) and children repartition that range in place.
class TreeBuilder {
public:
  TreeBuilder(const Matrix& x, const std::vector<double>& y, const ForestHyperparams& hp,
              std::mt19937_64& rng)
    : m_x(x), m_y(y), m_hp(hp), m_rng(rng) {
    m_mtry = hp.max_features <= 0 || hp.max_features >= static_cast<int>(x.cols)
                 ? static_cast<int>(x.cols)
                 : hp.max_features;
    m_feat_pool.resize(x.cols);
    std::iota(m_feat_pool.begin(), m_feat_pool.end(), 0u);
  }

  RegressionTree build(std::vector<uint32_t>& idx) {
    m_tree = RegressionTree{};
    build_node(idx, 0, idx.size(), 0);
    return std::move(m_tree);
  }

private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  int32_t new_node() {
    int32_t id = static_cast<int32_t>(m_tree.feature.size());
    m_tree.feature.push_back(-1);
    m_tree.threshold.push_back(0.0);
    m_tree.left.push_back(-1);
    m_tree.right.push_back(-1);
    m_tree.value.push_back(0.0);
    m_tree.n_samples.push_back(0);
    m_tree.gain.push_back(0.0);
    return id;
  }

  double node_sse(const std::vector<uint32_t>& idx, size_t begin, size_t end, double& mean) const {
    double sum = 0.0, sum2 = 0.0;
    for (size_t i = begin; i < end; ++i) {
      double v = m_y[idx[i]];
      sum += v;
      sum2 += v * v;
    }
    double n = static_cast<double>(end - begin);
    mean = sum / n;
    return std::max(0.0, sum2 - sum * sum / n);
  }

  // Best split over the node's feature subset: exhaustive sweep over sorted
  // values with prefix sums; strict > keeps the lowest feature index and
  // lowest threshold on ties.
  Split find_split(const std::vector<uint32_t>& idx, size_t begin, size_t end, double parent_sse) {
    size_t n = end - begin;
    const int p = static_cast<int>(m_x.cols);
    const int* feats = nullptr;
    int nfeats = p;
    std::vector<int> subset;
    if (m_mtry < p) {
      subset.resize(m_mtry);
      for (int k = 0; k < m_mtry; ++k) {
        size_t j = static_cast<size_t>(k) + draw_below(m_rng, m_x.cols - k);
        std::swap(m_feat_pool[k], m_feat_pool[j]);
        subset[k] = static_cast<int>(m_feat_pool[k]);
      }
      std::sort(subset.begin(), subset.end());
      feats = subset.data();
      nfeats = m_mtry;
    }

    std::vector<std::pair<double, double>> vl(n);  // (feature value, label)
    Split best;
    const double min_gain = 1e-12 * std::max(1.0, parent_sse);
    const size_t min_leaf = static_cast<size_t>(m_hp.min_samples_leaf);
    for (int fi = 0; fi < nfeats; ++fi) {
      int f = feats ? feats[fi] : fi;
      for (size_t i = 0; i < n; ++i) {
        uint32_t r = idx[begin + i];
        vl[i] = {m_x.at(r, static_cast<size_t>(f)), m_y[r]};
      }
      std::sort(vl.begin(), vl.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (vl.front().first == vl.back().first) continue;

      double lsum = 0.0, lsum2 = 0.0;
      double tsum = 0.0, tsum2 = 0.0;
      for (size_t i = 0; i < n; ++i) {
        tsum += vl[i].second;
        tsum2 += vl[i].second * vl[i].second;
      }
      for (size_t i = 1; i < n; ++i) {
        lsum += vl[i - 1].second;
        lsum2 += vl[i - 1].second * vl[i - 1].second;
        if (vl[i - 1].first == vl[i].first) continue;
        if (i < min_leaf || n - i < min_leaf) continue;
        double ln = static_cast<double>(i), rn = static_cast<double>(n - i);
        double lsse = std::max(0.0, lsum2 - lsum * lsum / ln);
        double rsum = tsum - lsum, rsum2 = tsum2 - lsum2;
        double rsse = std::max(0.0, rsum2 - rsum * rsum / rn);
        double gain = parent_sse - lsse - rsse;
        if (gain > best.gain && gain > min_gain) {
          double a = vl[i - 1].first, b = vl[i].first;
          double thr = a + (b - a) * 0.5;
          if (thr >= b) thr = a;  // midpoint of adjacent doubles can round up
          best = {f, thr, gain};
        }
      }
    }
    return best;
  }

  int32_t build_node(std::vector<uint32_t>& idx, size_t begin, size_t end, int depth) {
    int32_t id = new_node();
    size_t n = end - begin;
    m_tree.n_samples[id] = static_cast<int32_t>(n);
    double mean = 0.0;
    double sse = node_sse(idx, begin, end, mean);
    m_tree.value[id] = mean;
    if (depth >= m_hp.max_depth || n < static_cast<size_t>(m_hp.min_samples_split) ||
        n < 2 * static_cast<size_t>(m_hp.min_samples_leaf) || sse <= 1e-12 * std::max(1.0, mean * mean))
      return id;

    Split s = find_split(idx, begin, end, sse);
    if (s.feature < 0) return id;

    auto mid_it = std::partition(idx.begin() + begin, idx.begin() + end, [&](uint32_t r) {
      return m_x.at(r, static_cast<size_t>(s.feature)) <= s.threshold;
    });
    size_t mid = static_cast<size_t>(mid_it - idx.begin());
    // The sweep guarantees both sides nonempty; repartition must agree.
    if (mid == begin || mid == end) return id;

    m_tree.feature[id] = s.feature;
    m_tree.threshold[id] = s.threshold;
    m_tree.gain[id] = s.gain;
    m_tree.left[id] = build_node(idx, begin, mid, depth + 1);
    m_tree.right[id] = build_node(idx, mid, end, depth + 1);
    return id;
  }

  const Matrix& m_x;
  const std::vector<double>& m_y;
  const ForestHyperparams& m_hp;
  std::mt19937_64& m_rng;
  int m_mtry = 0;
  std::vector<uint32_t> m_feat_pool;
  RegressionTree m_tree;
};

}  // namespace

ForestModel fit_forest(const Matrix& x, const std::vector<double>& y,
                       const std::vector<std::string>& feature_names, FrameType frame_type,
                       const ForestHyperparams& hp, uint64_t seed, int threads) {
  check_xy(x, y, feature_names);
  if (x.rows == 0) raise(ErrorKind::DegenerateInput, "empty training set");
  if (hp.n_estimators < 1 || hp.max_depth < 1 || hp.min_samples_split < 2 ||
      hp.min_samples_leaf < 1)
    raise(ErrorKind::InvalidConfig, "invalid forest hyperparameters");

  ForestModel m;
  m.feature_names = feature_names;
  m.frame_type = frame_type;
  m.norm = Normalization::fit(x);
  m.hyperparams = hp;
  m.seed = seed;
  m.label_min = *std::min_element(y.begin(), y.end());
  m.label_max = *std::max_element(y.begin(), y.end());
  Matrix z = m.norm.apply(x);

  m.trees.resize(static_cast<size_t>(hp.n_estimators));
  const size_t n = x.rows;
  parallel_for(m.trees.size(), threads, [&](size_t t) {
    auto rng = make_rng(seed, t);
    std::vector<uint32_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = static_cast<uint32_t>(draw_below(rng, n));
    std::sort(idx.begin(), idx.end());
    TreeBuilder builder(z, y, hp, rng);
    m.trees[t] = builder.build(idx);
  });
  return m;
}

// ---------------------------------------------------------------------------
// Prediction

std::vector<double> predict(const LinearModel& m, const Matrix& x) {
  if (x.cols != m.feature_names.size())
    raise(ErrorKind::FeatureMismatch, "expected " + std::to_string(m.feature_names.size()) +
                                          " features, got " + std::to_string(x.cols));
  std::vector<double> out(x.rows);
  for (size_t r = 0; r < x.rows; ++r) {
    const double* row = x.row(r);
    double v = m.intercept;
    for (size_t c = 0; c < x.cols; ++c) v += m.weights[c] * row[c];
    out[r] = m.log_labels ? std::exp2(v) : v;
  }
  return out;
}

std::vector<double> predict(const ForestModel& m, const Matrix& x) {
  if (x.cols != m.feature_names.size())
    raise(ErrorKind::FeatureMismatch, "expected " + std::to_string(m.feature_names.size()) +
                                          " features, got " + std::to_string(x.cols));
  if (m.trees.empty()) raise(ErrorKind::DegenerateInput, "forest has no trees");
  std::vector<double> out(x.rows);
  std::vector<double> row(x.cols);
  for (size_t r = 0; r < x.rows; ++r) {
    std::copy(x.row(r), x.row(r) + x.cols, row.begin());
    m.norm.apply_row(row.data(), row.size());
    double sum = 0.0;
    for (const auto& t : m.trees) sum += t.predict_row(row.data());
    double v = sum / static_cast<double>(m.trees.size());
    out[r] = m.log_labels ? std::exp2(v) : v;
  }
  return out;
}

std::vector<double> predict(const AnyModel& m, const Matrix& x) {
  return std::visit([&](const auto& mm) { return predict(mm, x); }, m);
}

double predict_one(const AnyModel& m, const std::vector<double>& row) {
  Matrix x(1, row.size());
  std::copy(row.begin(), row.end(), x.data.begin());
  return predict(m, x)[0];
}

const std::vector<std::string>& model_feature_names(const AnyModel& m) {
  return std::visit([](const auto& mm) -> const std::vector<std::string>& { return mm.feature_names; },
                    m);
}

FrameType model_frame_type(const AnyModel& m) {
  return std::visit([](const auto& mm) { return mm.frame_type; }, m);
}

// ---------------------------------------------------------------------------
// Validation

void validate_forest(const ForestModel& m) {
  auto fail = [](const std::string& msg) { raise(ErrorKind::InvariantViolation, msg); };
  if (m.trees.size() != static_cast<size_t>(m.hyperparams.n_estimators))
    fail("tree count " + std::to_string(m.trees.size()) + " != n_estimators " +
         std::to_string(m.hyperparams.n_estimators));
  const int32_t p = static_cast<int32_t>(m.feature_names.size());
  for (size_t ti = 0; ti < m.trees.size(); ++ti) {
    const RegressionTree& t = m.trees[ti];
    const size_t nc = t.node_count();
    auto ctx = [&](const std::string& msg) { return "tree " + std::to_string(ti) + ": " + msg; };
    if (nc == 0) fail(ctx("empty tree"));
    if (t.threshold.size() != nc || t.left.size() != nc || t.right.size() != nc ||
        t.value.size() != nc || t.n_samples.size() != nc || t.gain.size() != nc)
      fail(ctx("ragged node arrays"));

    std::vector<char> seen(nc, 0);
    std::vector<std::pair<int32_t, int>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, depth] = stack.back();
      stack.pop_back();
      if (i < 0 || static_cast<size_t>(i) >= nc) fail(ctx("child index out of range"));
      if (seen[i]) fail(ctx("node " + std::to_string(i) + " reachable twice"));
      seen[i] = 1;
      if (t.n_samples[i] < 1) fail(ctx("node with no samples"));
      if (t.feature[i] < 0) {
        if (depth > m.hyperparams.max_depth) fail(ctx("leaf beyond max_depth"));
        if (t.n_samples[i] < m.hyperparams.min_samples_leaf) fail(ctx("undersized leaf"));
        if (t.left[i] != -1 || t.right[i] != -1) fail(ctx("leaf with children"));
        if (!std::isfinite(t.value[i])) fail(ctx("non-finite leaf value"));
      } else {
        if (depth >= m.hyperparams.max_depth) fail(ctx("split beyond max_depth"));
        if (t.feature[i] >= p) fail(ctx("split on unknown feature"));
        if (!std::isfinite(t.threshold[i])) fail(ctx("non-finite threshold"));
        if (t.n_samples[i] < m.hyperparams.min_samples_split) fail(ctx("undersized split node"));
        if (t.gain[i] < 0.0) fail(ctx("negative split gain"));
        if (t.left[i] < 0 || t.right[i] < 0) fail(ctx("internal node missing a child"));
        if (t.left[i] < static_cast<int32_t>(nc) && t.right[i] < static_cast<int32_t>(nc) &&
            t.left[i] >= 0 && t.right[i] >= 0 &&
            t.n_samples[i] != t.n_samples[t.left[i]] + t.n_samples[t.right[i]])
          fail(ctx("child sample counts do not sum to parent"));
        stack.push_back({t.right[i], depth + 1});
        stack.push_back({t.left[i], depth + 1});
      }
    }
    for (size_t i = 0; i < nc; ++i)
      if (!seen[i]) fail(ctx("orphan node " + std::to_string(i)));
  }
}

// ---------------------------------------------------------------------------
// Feature importance

size_t ImportanceReport::top_feature() const {
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

namespace {

double mse_of(const std::vector<double>& pred, const std::vector<double>& truth) {
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

}  // namespace

ImportanceReport importance(const ForestModel& m, const Matrix& x_val,
                            const std::vector<double>& y_val, ImportanceMethod method,
                            uint64_t seed) {
  const size_t p = m.feature_names.size();
  ImportanceReport rep;
  rep.feature_names = m.feature_names;
  rep.method = method;
  rep.scores.assign(p, 0.0);

  if (method == ImportanceMethod::Impurity) {
    for (const auto& t : m.trees)
      for (size_t i = 0; i < t.node_count(); ++i)
        if (t.feature[i] >= 0) rep.scores[static_cast<size_t>(t.feature[i])] += t.gain[i];
  } else {
    if (x_val.rows == 0) raise(ErrorKind::EmptyValidation, "permutation importance needs validation rows");
    if (x_val.cols != p)
      raise(ErrorKind::FeatureMismatch, "validation matrix has " + std::to_string(x_val.cols) +
                                            " columns, model expects " + std::to_string(p));
    if (y_val.size() != x_val.rows)
      raise(ErrorKind::LengthMismatch, "validation labels do not match validation rows");
    double base = mse_of(predict(m, x_val), y_val);
    std::vector<double> col(x_val.rows);
    for (size_t j = 0; j < p; ++j) {
      Matrix shuffled = x_val;
      for (size_t r = 0; r < x_val.rows; ++r) col[r] = x_val.at(r, j);
      auto rng = make_rng(seed, j);
      shuffle_fisher_yates(col, rng);
      for (size_t r = 0; r < x_val.rows; ++r) shuffled.at(r, j) = col[r];
      rep.scores[j] = std::max(0.0, mse_of(predict(m, shuffled), y_val) - base);
    }
  }

  double total = std::accumulate(rep.scores.begin(), rep.scores.end(), 0.0);
  if (total <= 0.0) {
    // Nothing split / nothing mattered: uniform by convention.
    if (p > 0) rep.scores.assign(p, 1.0 / static_cast<double>(p));
  } else {
    for (double& s : rep.scores) s /= total;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr int kSchemaVersion = 1;

json norm_to_json(const Normalization& n) {
  return json{{"mean", n.mean}, {"stddev", n.stddev}};
}

Normalization norm_from_json(const json& j) {
  Normalization n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.stddev = j.at("stddev").get<std::vector<double>>();
  if (n.mean.size() != n.stddev.size())
    raise(ErrorKind::CorruptFile, "normalization arrays disagree in length");
  return n;
}

json tree_to_json(const RegressionTree& t) {
  return json{{"feature", t.feature},   {"threshold", t.threshold}, {"left", t.left},
              {"right", t.right},       {"value", t.value},         {"n_samples", t.n_samples},
              {"gain", t.gain}};
}

RegressionTree tree_from_json(const json& j) {
  RegressionTree t;
  t.feature = j.at("feature").get<std::vector<int32_t>>();
  t.threshold = j.at("threshold").get<std::vector<double>>();
  t.left = j.at("left").get<std::vector<int32_t>>();
  t.right = j.at("right").get<std::vector<int32_t>>();
  t.value = j.at("value").get<std::vector<double>>();
  t.n_samples = j.at("n_samples").get<std::vector<int32_t>>();
  t.gain = j.at("gain").get<std::vector<double>>();
  return t;
}

}  // namespace

std::string serialize_model(const AnyModel& m) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["frame_type"] = frame_type_name(model_frame_type(m));
  j["feature_names"] = model_feature_names(m);
  if (const auto* lin = std::get_if<LinearModel>(&m)) {
    j["model_type"] = "linear";
    j["normalization"] = norm_to_json(lin->norm);
    j["log_labels"] = lin->log_labels;
    j["weights"] = lin->weights;
    j["intercept"] = lin->intercept;
  } else {
    const auto& f = std::get<ForestModel>(m);
    j["model_type"] = "forest";
    j["normalization"] = norm_to_json(f.norm);
    j["log_labels"] = f.log_labels;
    j["hyperparams"] = json{{"n_estimators", f.hyperparams.n_estimators},
                            {"max_depth", f.hyperparams.max_depth},
                            {"min_samples_split", f.hyperparams.min_samples_split},
                            {"min_samples_leaf", f.hyperparams.min_samples_leaf},
                            {"max_features", f.hyperparams.max_features}};
    j["seed"] = f.seed;
    j["label_min"] = f.label_min;
    j["label_max"] = f.label_max;
    json trees = json::array();
    for (const auto& t : f.trees) trees.push_back(tree_to_json(t));
    j["trees"] = std::move(trees);
  }
  return j.dump();
}

void save_model(const AnyModel& m, const std::string& path) {
  std::string body = serialize_model(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.put('\n');
  if (!out) raise(ErrorKind::IoError, "short write to '" + path + "'");
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::FileNotFound, "cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) raise(ErrorKind::IoError, "read failure on '" + path + "'");

  json j;
  try {
    j = json::parse(buf.str());
  } catch (const std::exception& e) {
    raise(ErrorKind::CorruptFile, "model file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer())
    raise(ErrorKind::CorruptFile, "model file '" + path + "' lacks a schema version");
  int version = j["schema_version"].get<int>();
  if (version != kSchemaVersion)
    raise(ErrorKind::VersionMismatch, "model schema version " + std::to_string(version) +
                                          ", this build reads " + std::to_string(kSchemaVersion));

  try {
    std::string type = j.at("model_type").get<std::string>();
    FrameType ft = frame_type_from_name(j.at("frame_type").get<std::string>());
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (type == "linear") {
      LinearModel m;
      m.feature_names = std::move(names);
      m.frame_type = ft;
      m.norm = norm_from_json(j.at("normalization"));
      m.log_labels = j.at("log_labels").get<bool>();
      m.weights = j.at("weights").get<std::vector<double>>();
      m.intercept = j.at("intercept").get<double>();
      if (m.weights.size() != m.feature_names.size())
        raise(ErrorKind::CorruptFile, "weight count does not match feature names");
      return m;
    }
    if (type == "forest") {
      ForestModel m;
      m.feature_names = std::move(names);
      m.frame_type = ft;
      m.norm = norm_from_json(j.at("normalization"));
      m.log_labels = j.at("log_labels").get<bool>();
      const json& hp = j.at("hyperparams");
      m.hyperparams.n_estimators = hp.at("n_estimators").get<int>();
      m.hyperparams.max_depth = hp.at("max_depth").get<int>();
      m.hyperparams.min_samples_split = hp.at("min_samples_split").get<int>();
      m.hyperparams.min_samples_leaf = hp.at("min_samples_leaf").get<int>();
      m.hyperparams.max_features = hp.at("max_features").get<int>();
      m.seed = j.at("seed").get<uint64_t>();
      m.label_min = j.at("label_min").get<double>();
      m.label_max = j.at("label_max").get<double>();
      for (const json& tj : j.at("trees")) m.trees.push_back(tree_from_json(tj));
      try {
        validate_forest(m);
      } catch (const Error& e) {
        raise(ErrorKind::CorruptFile, std::string("model file fails validation: ") + e.what());
      }
      return m;
    }
    raise(ErrorKind::CorruptFile, "unknown model type '" + type + "'");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorKind::CorruptFile, std::string("malformed model file: ") + e.what());
  }
}

}  // namespace framebits
