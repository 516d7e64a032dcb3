#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "framebits/models.hpp"
#include "framebits/rng.hpp"
#include "support.hpp"

using namespace framebits;

namespace {

// y = 3*x0 - 2*x1 + 0.5*x2 + 7, noiseless.
Matrix linear_design(std::mt19937_64& rng, size_t rows, std::vector<double>& y) {
  Matrix x(rows, 3);
  y.resize(rows);
  for (size_t r = 0; r < rows; ++r) {
    double a = draw_range(rng, -5.0, 5.0);
    double b = draw_range(rng, 10.0, 30.0);
    double c = draw_range(rng, 0.0, 1.0);
    x.at(r, 0) = a;
    x.at(r, 1) = b;
    x.at(r, 2) = c;
    y[r] = 3.0 * a - 2.0 * b + 0.5 * c + 7.0;
  }
  return x;
}

const std::vector<std::string> kNames3 = {"f0", "f1", "f2"};

double mse_of(const LinearModel& m, const Matrix& x, const std::vector<double>& y) {
  auto pred = predict(m, x);
  double acc = 0.0;
  for (size_t r = 0; r < y.size(); ++r) acc += (pred[r] - y[r]) * (pred[r] - y[r]);
  return acc / static_cast<double>(y.size());
}

// Piecewise response with interactions; linear models cannot represent it.
Matrix stepped_design(std::mt19937_64& rng, size_t rows, std::vector<double>& y) {
  Matrix x(rows, 4);
  y.resize(rows);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < 4; ++c) x.at(r, c) = draw_range(rng, 0.0, 10.0);
    double v = x.at(r, 0) > 5.0 ? 40.0 : 10.0;
    if (x.at(r, 1) > 3.0 && x.at(r, 0) > 2.0) v += 25.0;
    v += 2.0 * x.at(r, 2);
    y[r] = v;
  }
  return x;
}

}  // namespace

TEST_CASE("normalization: z-scores per column, constant columns left at scale 1") {
  Matrix x(4, 2);
  double vals[] = {1.0, 3.0, 5.0, 7.0};
  for (size_t r = 0; r < 4; ++r) {
    x.at(r, 0) = vals[r];
    x.at(r, 1) = 9.0;  // constant
  }
  auto norm = Normalization::fit(x);
  CHECK(norm.mean[0] == doctest::Approx(4.0));
  CHECK(norm.stddev[0] == doctest::Approx(std::sqrt(5.0)));  // population stddev
  CHECK(norm.mean[1] == doctest::Approx(9.0));
  CHECK(norm.stddev[1] == 1.0);

  Matrix z = norm.apply(x);
  double mean0 = 0.0;
  for (size_t r = 0; r < 4; ++r) mean0 += z.at(r, 0);
  CHECK(mean0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("linear fit recovers an exact linear map in original units") {
  auto rng = make_rng(31);
  std::vector<double> y;
  Matrix x = linear_design(rng, 60, y);
  LinearModel m = fit_linear(x, y, kNames3);
  CHECK(m.weights[0] == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(m.weights[1] == doctest::Approx(-2.0).epsilon(1e-7));
  CHECK(m.weights[2] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(m.intercept == doctest::Approx(7.0).epsilon(1e-7));

  auto pred = predict(m, x);
  for (size_t r = 0; r < y.size(); ++r) CHECK(pred[r] == doctest::Approx(y[r]).epsilon(1e-9));
}

TEST_CASE("least squares: residuals orthogonal to every column and the intercept") {
  auto rng = make_rng(32);
  Matrix x(80, 3);
  std::vector<double> y(80);
  for (size_t r = 0; r < 80; ++r) {
    for (size_t c = 0; c < 3; ++c) x.at(r, c) = draw_range(rng, -4.0, 4.0);
    y[r] = 2.0 * x.at(r, 0) - x.at(r, 1) + draw_range(rng, -3.0, 3.0);  // noisy labels
  }
  LinearModel m = fit_linear(x, y, kNames3);
  auto pred = predict(m, x);
  std::vector<double> resid(80);
  for (size_t r = 0; r < 80; ++r) resid[r] = y[r] - pred[r];

  double sum = 0.0;
  for (double v : resid) sum += v;
  CHECK(std::abs(sum) / 80.0 < 1e-7);
  for (size_t c = 0; c < 3; ++c) {
    double dot = 0.0;
    for (size_t r = 0; r < 80; ++r) dot += resid[r] * x.at(r, c);
    CHECK(std::abs(dot) / 80.0 < 1e-7);
  }
}

TEST_CASE("least squares: no small perturbation of the fit lowers training MSE") {
  auto rng = make_rng(33);
  Matrix x(50, 3);
  std::vector<double> y(50);
  for (size_t r = 0; r < 50; ++r) {
    for (size_t c = 0; c < 3; ++c) x.at(r, c) = draw_range(rng, 0.0, 20.0);
    y[r] = x.at(r, 0) + 5.0 * std::sin(x.at(r, 1));  // not linear; fit is an approximation
  }
  LinearModel m = fit_linear(x, y, kNames3);
  const double base = mse_of(m, x, y);
  for (int trial = 0; trial < 200; ++trial) {
    LinearModel p = m;
    for (double& w : p.weights) w += draw_range(rng, -1e-3, 1e-3);
    p.intercept += draw_range(rng, -1e-3, 1e-3);
    CHECK(mse_of(p, x, y) >= base - 1e-12);
  }
}

TEST_CASE("linear fit rejects degenerate inputs") {
  Matrix x(2, 3);
  std::vector<double> y = {1.0, 2.0};
  CHECK_RAISES(ErrorKind::DegenerateInput, fit_linear(x, y, kNames3));  // rows < cols + 1

  Matrix same(10, 3);
  std::vector<double> ysame(10, 5.0);
  for (size_t r = 0; r < 10; ++r)
    for (size_t c = 0; c < 3; ++c) same.at(r, c) = 1.0;
  CHECK_RAISES(ErrorKind::DegenerateInput, fit_linear(same, ysame, kNames3));

  auto rng = make_rng(34);
  std::vector<double> ok;
  Matrix good = linear_design(rng, 20, ok);
  ok[3] = std::nan("");
  CHECK_RAISES(ErrorKind::DegenerateInput, fit_linear(good, ok, kNames3));
  CHECK_RAISES(ErrorKind::LengthMismatch, fit_linear(good, std::vector<double>(19), kNames3));
  CHECK_RAISES(ErrorKind::FeatureMismatch, fit_linear(good, std::vector<double>(20, 1.0), {"a"}));
}

TEST_CASE("log-label contract: fit on log2 bits, predict in bits") {
  auto rng = make_rng(35);
  Matrix x(40, 1);
  std::vector<double> logy(40);
  for (size_t r = 0; r < 40; ++r) {
    x.at(r, 0) = draw_range(rng, 20.0, 40.0);
    logy[r] = 12.0 - 0.2 * x.at(r, 0);  // log2 of bits, linear in q
  }
  LinearModel m = fit_linear(x, logy, {"q"});
  m.log_labels = true;
  auto pred = predict(m, x);
  for (size_t r = 0; r < 40; ++r)
    CHECK(pred[r] == doctest::Approx(std::exp2(logy[r])).epsilon(1e-9));
}

TEST_CASE("forest fixed-seed determinism: byte-identical across runs and thread counts") {
  auto rng = make_rng(36);
  std::vector<double> y;
  Matrix x = stepped_design(rng, 300, y);
  ForestHyperparams hp;
  hp.n_estimators = 20;
  const std::vector<std::string> names = {"a", "b", "c", "d"};

  ForestModel serial1 = fit_forest(x, y, names, FrameType::P, hp, 9, 1);
  ForestModel serial2 = fit_forest(x, y, names, FrameType::P, hp, 9, 1);
  ForestModel parallel = fit_forest(x, y, names, FrameType::P, hp, 9, 4);
  std::string s1 = serialize_model(AnyModel(serial1));
  CHECK(s1 == serialize_model(AnyModel(serial2)));
  CHECK(s1 == serialize_model(AnyModel(parallel)));

  ForestModel other_seed = fit_forest(x, y, names, FrameType::P, hp, 10, 1);
  CHECK(s1 != serialize_model(AnyModel(other_seed)));
}

TEST_CASE("forest respects its structural contract") {
  auto rng = make_rng(37);
  std::vector<double> y;
  Matrix x = stepped_design(rng, 400, y);
  ForestHyperparams hp;
  hp.n_estimators = 30;
  hp.max_depth = 5;
  hp.min_samples_leaf = 4;
  hp.min_samples_split = 8;
  ForestModel m = fit_forest(x, y, {"a", "b", "c", "d"}, FrameType::B, hp, 1, 1);
  validate_forest(m);  // must not throw
  CHECK(m.trees.size() == 30);

  // Depth bound checked independently of the validator.
  for (const auto& t : m.trees) {
    std::vector<std::pair<int32_t, int>> stack = {{0, 0}};
    while (!stack.empty()) {
      auto [node, depth] = stack.back();
      stack.pop_back();
      CHECK(depth <= 5);
      if (t.feature[static_cast<size_t>(node)] >= 0) {
        CHECK(t.n_samples[static_cast<size_t>(node)] >= 8);
        stack.push_back({t.left[static_cast<size_t>(node)], depth + 1});
        stack.push_back({t.right[static_cast<size_t>(node)], depth + 1});
      } else {
        CHECK(t.n_samples[static_cast<size_t>(node)] >= 4);
      }
    }
  }

  // The validator catches corruption.
  ForestModel broken = m;
  broken.trees[0].left[0] = 0;  // self-loop at the root
  CHECK_RAISES(ErrorKind::InvariantViolation, validate_forest(broken));
  broken = m;
  if (broken.trees[0].feature[0] >= 0) {
    broken.trees[0].feature[0] = 17;  // feature index out of range
    CHECK_RAISES(ErrorKind::InvariantViolation, validate_forest(broken));
  }
  broken = m;
  broken.trees.pop_back();
  CHECK_RAISES(ErrorKind::InvariantViolation, validate_forest(broken));
}

TEST_CASE("forest beats a line on stepped data and is stable across seeds") {
  auto rng = make_rng(38);
  std::vector<double> y_train, y_test;
  Matrix train = stepped_design(rng, 500, y_train);
  Matrix test = stepped_design(rng, 200, y_test);

  ForestHyperparams hp;
  hp.n_estimators = 40;

  auto r2_of = [&](const std::vector<double>& pred) {
    double mean = 0.0;
    for (double v : y_test) mean += v;
    mean /= static_cast<double>(y_test.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < y_test.size(); ++i) {
      ss_res += (y_test[i] - pred[i]) * (y_test[i] - pred[i]);
      ss_tot += (y_test[i] - mean) * (y_test[i] - mean);
    }
    return 1.0 - ss_res / ss_tot;
  };

  LinearModel lin = fit_linear(train, y_train, {"a", "b", "c", "d"});
  double lin_r2 = r2_of(predict(lin, test));

  std::vector<double> forest_r2s;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    ForestModel f = fit_forest(train, y_train, {"a", "b", "c", "d"}, FrameType::I, hp, seed, 2);
    forest_r2s.push_back(r2_of(predict(f, test)));
  }
  double lo = *std::min_element(forest_r2s.begin(), forest_r2s.end());
  double hi = *std::max_element(forest_r2s.begin(), forest_r2s.end());
  CHECK(lo > lin_r2);       // the step structure is invisible to the line
  CHECK(hi - lo < 0.02);    // seed choice must not swing the quality
  CHECK(lo > 0.9);
}

TEST_CASE("forest hyperparameter validation") {
  Matrix x(10, 2);
  std::vector<double> y(10);
  auto rng = make_rng(39);
  for (size_t r = 0; r < 10; ++r) {
    x.at(r, 0) = draw_range(rng, 0.0, 1.0);
    x.at(r, 1) = draw_range(rng, 0.0, 1.0);
    y[r] = x.at(r, 0);
  }
  ForestHyperparams hp;
  hp.n_estimators = 0;
  CHECK_RAISES(ErrorKind::InvalidConfig, fit_forest(x, y, {"a", "b"}, FrameType::I, hp, 0, 1));
  hp = ForestHyperparams{};
  hp.max_depth = -1;
  CHECK_RAISES(ErrorKind::InvalidConfig, fit_forest(x, y, {"a", "b"}, FrameType::I, hp, 0, 1));
  hp = ForestHyperparams{};
  hp.min_samples_split = 1;
  CHECK_RAISES(ErrorKind::InvalidConfig, fit_forest(x, y, {"a", "b"}, FrameType::I, hp, 0, 1));
}

TEST_CASE("model serialization round-trips byte-identically") {
  framebits::test::TempDir tmp("models");
  auto rng = make_rng(40);
  std::vector<double> y;
  Matrix x = stepped_design(rng, 200, y);
  ForestHyperparams hp;
  hp.n_estimators = 10;
  ForestModel f = fit_forest(x, y, {"a", "b", "c", "d"}, FrameType::B, hp, 4, 1);
  f.log_labels = false;

  std::string path = tmp.file("forest.json");
  save_model(AnyModel(f), path);
  AnyModel back = load_model(path);
  CHECK(serialize_model(back) == serialize_model(AnyModel(f)));
  const ForestModel& fb = std::get<ForestModel>(back);
  CHECK(fb.frame_type == FrameType::B);
  CHECK(fb.seed == 4);
  CHECK(fb.feature_names == f.feature_names);

  LinearModel lin = fit_linear(x, y, {"a", "b", "c", "d"});
  std::string lpath = tmp.file("linear.json");
  save_model(AnyModel(lin), lpath);
  AnyModel lback = load_model(lpath);
  CHECK(serialize_model(lback) == serialize_model(AnyModel(lin)));
}

TEST_CASE("model loading rejects missing, corrupt, and future files") {
  framebits::test::TempDir tmp("badmodels");
  CHECK_RAISES(ErrorKind::FileNotFound, load_model(tmp.file("absent.json")));

  {
    std::ofstream out(tmp.file("garbage.json"));
    out << "{not json";
  }
  CHECK_RAISES(ErrorKind::CorruptFile, load_model(tmp.file("garbage.json")));

  {
    std::ofstream out(tmp.file("future.json"));
    out << "{\"schema_version\": 99, \"kind\": \"linear\"}";
  }
  CHECK_RAISES(ErrorKind::VersionMismatch, load_model(tmp.file("future.json")));

  {
    std::ofstream out(tmp.file("noversion.json"));
    out << "{\"kind\": \"linear\"}";
  }
  CHECK_RAISES(ErrorKind::CorruptFile, load_model(tmp.file("noversion.json")));
}

TEST_CASE("importance ranks the only informative feature first") {
  auto rng = make_rng(41);
  Matrix x(400, 3);
  std::vector<double> y(400);
  for (size_t r = 0; r < 400; ++r) {
    for (size_t c = 0; c < 3; ++c) x.at(r, c) = draw_range(rng, 0.0, 10.0);
    y[r] = x.at(r, 1) > 5.0 ? 100.0 : 20.0;  // only feature 1 matters
  }
  ForestHyperparams hp;
  hp.n_estimators = 25;
  ForestModel f = fit_forest(x, y, {"noise0", "signal", "noise1"}, FrameType::I, hp, 2, 2);

  for (auto method : {ImportanceMethod::Impurity, ImportanceMethod::Permutation}) {
    ImportanceReport rep = importance(f, x, y, method, 0);
    REQUIRE(rep.scores.size() == 3);
    CHECK(rep.top_feature() == 1);
    CHECK(rep.feature_names[rep.top_feature()] == "signal");
  }

  Matrix empty(0, 3);
  CHECK_RAISES(ErrorKind::EmptyValidation,
               importance(f, empty, {}, ImportanceMethod::Permutation, 0));
}

TEST_CASE("predict_one agrees with batch predict") {
  auto rng = make_rng(42);
  std::vector<double> y;
  Matrix x = stepped_design(rng, 150, y);
  ForestHyperparams hp;
  hp.n_estimators = 10;
  AnyModel m = AnyModel(fit_forest(x, y, {"a", "b", "c", "d"}, FrameType::P, hp, 6, 1));
  auto batch = predict(m, x);
  for (size_t r = 0; r < 10; ++r) {
    std::vector<double> row(x.row(r), x.row(r) + x.cols);
    CHECK(predict_one(m, row) == batch[r]);
  }
  CHECK_RAISES(ErrorKind::FeatureMismatch, predict_one(m, {1.0, 2.0}));
}
