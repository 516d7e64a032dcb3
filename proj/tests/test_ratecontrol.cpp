#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "framebits/dataset.hpp"
#include "framebits/gop.hpp"
#include "framebits/ratecontrol.hpp"
#include "framebits/rng.hpp"
#include "support.hpp"

using namespace framebits;

namespace {

std::vector<ComplexityRecord> fake_features(int64_t n) {
  std::vector<ComplexityRecord> recs(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    auto& r = recs[static_cast<size_t>(i)];
    r.frame_index = i;
    r.e_y = 80.0 + 20.0 * std::sin(0.3 * static_cast<double>(i));
    r.l_y = 100.0;
    r.e_u = 8.0;
    r.l_u = 60.0;
    r.e_v = 9.0;
    r.l_v = 61.0;
    for (int g : canonical_gaps())
      if (i >= g) r.h_by_gap[g] = 2.0 + 0.5 * static_cast<double>(g % 5);
  }
  return recs;
}

FrameRole intra_role(int64_t index) {
  FrameRole r;
  r.frame_index = index;
  r.frame_type = FrameType::I;
  return r;
}

}  // namespace

TEST_CASE("rate-control constants validate their ranges") {
  RcConstants k;
  k.validate();
  k.c_low = 0.0;
  CHECK_RAISES(ErrorKind::InvalidConfig, k.validate());
  k = RcConstants{};
  k.c_high = 1.0;
  CHECK_RAISES(ErrorKind::InvalidConfig, k.validate());
  k = RcConstants{};
  k.q_start = 64;
  CHECK_RAISES(ErrorKind::InvalidConfig, k.validate());
}

TEST_CASE("c_high by display height: anchored ends, log-linear middle") {
  CHECK(c_high_for_height(480) == 0.25);
  CHECK(c_high_for_height(360) == 0.25);
  CHECK(c_high_for_height(2160) == 0.5);
  CHECK(c_high_for_height(4320) == 0.5);
  double expect_1080 =
      0.25 + 0.25 * (std::log2(1080.0 / 480.0) / std::log2(2160.0 / 480.0));
  CHECK(c_high_for_height(1080) == doctest::Approx(expect_1080).epsilon(1e-12));
  CHECK(c_high_for_height(1080) > c_high_for_height(720));
  CHECK_RAISES(ErrorKind::InvalidConfig, c_high_for_height(0));
}

TEST_CASE("qp refinement: worked substitutions") {
  RcConstants k;  // c_low 1, c_high 0.5, q_start 24

  // Equal prediction and budget: nothing moves, no pull above the pivot.
  auto r = qp_refine(30.0, 5000.0, 5000.0, k);
  CHECK(r.q_bar == 30.0);
  CHECK(r.q_prime == 30);
  CHECK_FALSE(r.clamped);

  // Budget at twice the prediction from q 25: sqrt(25)*log2(2) = 5 down,
  // then half the distance back up toward 24.
  r = qp_refine(25.0, 1000.0, 2000.0, k);
  CHECK(r.q_bar == doctest::Approx(20.0).epsilon(1e-13));
  CHECK(r.q_prime == 22);

  // Fractional q below 1 exercises the max(1, q) floor of the scale term.
  r = qp_refine(0.5, 1000.0, 4000.0, k);
  CHECK(r.q_bar == doctest::Approx(-1.5).epsilon(1e-13));
}

TEST_CASE("qp refinement: rounding is half-away-from-zero") {
  RcConstants k;
  k.c_low = 0.125;
  k.q_start = 10;
  // q 16, ratio 8: q_bar = 16 - 0.125*4*3 = 14.5, no pull (above the pivot).
  auto r = qp_refine(16.0, 1000.0, 8000.0, k);
  CHECK(r.q_bar == 14.5);
  CHECK(r.q_prime == 15);  // half rounds up, not to even
}

TEST_CASE("qp refinement: clamps flagged at both rails") {
  RcConstants k;
  auto r = qp_refine(60.0, 8000.0, 500.0, k);  // strong undershoot pushes far above 63
  CHECK(r.q_prime == 63);
  CHECK(r.clamped);

  RcConstants low;
  low.c_high = 0.01;
  low.q_start = 0;
  r = qp_refine(2.0, 1000.0, 1u << 30, low);  // huge budget drives q_bar far negative
  CHECK(r.q_prime == 0);
  CHECK(r.clamped);

  CHECK_RAISES(ErrorKind::NonPositiveBits, qp_refine(30.0, 0.0, 100.0, k));
  CHECK_RAISES(ErrorKind::NonPositiveBits, qp_refine(30.0, 100.0, -1.0, k));
}

TEST_CASE("qp refinement: monotone in the budget, fixed point above the pivot") {
  RcConstants k;
  auto rng = make_rng(50);
  for (int trial = 0; trial < 10000; ++trial) {
    double q = draw_range(rng, 0.0, 63.0);
    double b_hat = draw_range(rng, 10.0, 1e6);
    double b1 = draw_range(rng, 10.0, 1e6);
    double b2 = b1 * draw_range(rng, 1.01, 3.0);
    auto r1 = qp_refine(q, b_hat, b1, k);
    auto r2 = qp_refine(q, b_hat, b2, k);
    CHECK(r2.q_bar < r1.q_bar);     // more budget, lower QP
    CHECK(r2.q_prime <= r1.q_prime);

    if (r1.q_bar >= k.q_start) {
      // No corrective pull: the integer QP is just the rounded estimate.
      CHECK(r1.q_prime == std::clamp<long>(std::lround(r1.q_bar), 0, 63));
    }
  }
}

TEST_CASE("gop allocation: proportional split, exact conservation") {
  auto equal = allocate_gop(3200.0, {5.0, 5.0, 5.0, 5.0});
  for (double b : equal) CHECK(b == doctest::Approx(800.0).epsilon(1e-13));

  auto prop = allocate_gop(4000.0, {3.0, 1.0});
  CHECK(prop[0] == doctest::Approx(3000.0).epsilon(1e-13));
  CHECK(prop[1] == doctest::Approx(1000.0).epsilon(1e-13));

  auto rng = make_rng(51);
  for (int trial = 0; trial < 500; ++trial) {
    size_t n = 1 + draw_below(rng, 40);
    std::vector<double> pred(n);
    for (auto& p : pred) p = draw_range(rng, 1.0, 1e5);
    double target = draw_range(rng, 100.0, 1e7);
    auto out = allocate_gop(target, pred);
    double sum = 0.0;
    for (double b : out) sum += b;
    CHECK(std::abs(sum - target) < 1.0);
    for (size_t i = 0; i + 1 < n; ++i)
      CHECK(out[i] == doctest::Approx(target * pred[i] / std::accumulate(pred.begin(), pred.end(), 0.0))
                          .epsilon(1e-9));
  }

  CHECK_RAISES(ErrorKind::EmptyGop, allocate_gop(100.0, {}));
  CHECK_RAISES(ErrorKind::ZeroTarget, allocate_gop(0.0, {1.0}));
  CHECK_RAISES(ErrorKind::NonPositivePrediction, allocate_gop(100.0, {1.0, 0.0}));
}

TEST_CASE("deficit compensation: plain shift, floor with carry") {
  auto r = compensate(0.0, 1000.0, 1.0);
  CHECK(r.adjusted == 1000.0);
  CHECK(r.remaining == 0.0);

  r = compensate(300.0, 1000.0, 1.0);
  CHECK(r.adjusted == 700.0);
  CHECK(r.remaining == 0.0);

  r = compensate(-500.0, 1000.0, 1.0);  // surplus grows the next budget
  CHECK(r.adjusted == 1500.0);
  CHECK(r.remaining == 0.0);

  r = compensate(300.0, 1000.0, 0.5);
  CHECK(r.adjusted == 850.0);

  // Floor: only (target - floor)/strength of deficit can be absorbed now.
  r = compensate(5000.0, 1000.0, 0.5);
  CHECK(r.adjusted == doctest::Approx(100.0).epsilon(1e-13));
  CHECK(r.remaining == doctest::Approx(5000.0 - 900.0 / 0.5).epsilon(1e-12));

  CHECK_RAISES(ErrorKind::ZeroTarget, compensate(0.0, 0.0, 1.0));
  CHECK_RAISES(ErrorKind::InvalidConfig, compensate(0.0, 100.0, 0.0));
  CHECK_RAISES(ErrorKind::InvalidConfig, compensate(0.0, 100.0, 1.5));
}

TEST_CASE("c_low calibration recovers the slope of a two-point curve") {
  FrameCodingRecord a;
  a.sequence_id = "s";
  a.frame_index = 0;
  a.frame_type = FrameType::I;
  a.q = 24;
  a.bits = 1000.0;
  FrameCodingRecord b = a;
  b.q = 30;
  b.bits = 500.0;
  // One halving over 6 QPs around midpoint 27: c = 6 / sqrt(27).
  CHECK(calibrate_c_low({a, b}) == doctest::Approx(6.0 / std::sqrt(27.0)).epsilon(1e-12));

  // Duplicates at one QP are averaged first.
  FrameCodingRecord a2 = a;
  a.bits = 900.0;
  a2.bits = 1100.0;
  CHECK(calibrate_c_low({a, a2, b}) == doctest::Approx(6.0 / std::sqrt(27.0)).epsilon(1e-12));

  CHECK_RAISES(ErrorKind::DegenerateInput, calibrate_c_low({a}));
  FrameCodingRecord flat = b;
  flat.bits = a.bits;
  CHECK_RAISES(ErrorKind::DegenerateInput, calibrate_c_low({a, flat}));
  FrameCodingRecord rising = b;
  rising.bits = 2000.0;
  CHECK_RAISES(ErrorKind::DegenerateInput, calibrate_c_low({a, rising}));
}

TEST_CASE("replay backend: exact hits, log-linear gaps, flagged extrapolation") {
  std::vector<FrameCodingRecord> log;
  for (auto [q, bits] : {std::pair{20, 900.0}, {20, 1100.0}, {30, 500.0}}) {
    FrameCodingRecord r;
    r.sequence_id = "s";
    r.frame_index = 0;
    r.frame_type = FrameType::I;
    r.q = q;
    r.bits = bits;
    log.push_back(r);
  }
  ReplayBackend backend(log);
  bool interp = true;
  CHECK(backend.bits_for(intra_role(0), 20, interp) == 1000.0);  // duplicates averaged
  CHECK_FALSE(interp);
  CHECK(backend.bits_for(intra_role(0), 30, interp) == 500.0);

  // Between logged QPs the rate curve is geometric in q.
  CHECK(backend.bits_for(intra_role(0), 25, interp) ==
        doctest::Approx(std::sqrt(1000.0 * 500.0)).epsilon(1e-12));
  CHECK(interp);

  // Outside the logged range the end slope continues.
  CHECK(backend.bits_for(intra_role(0), 10, interp) == doctest::Approx(2000.0).epsilon(1e-12));
  CHECK(backend.bits_for(intra_role(0), 40, interp) == doctest::Approx(250.0).epsilon(1e-12));

  CHECK_RAISES(ErrorKind::ReplayMiss, backend.bits_for(intra_role(1), 20, interp));

  ReplayBackend single({log[0]});
  CHECK(single.bits_for(intra_role(0), 20, interp) == 900.0);
  CHECK_RAISES(ErrorKind::ReplayMiss, single.bits_for(intra_role(0), 21, interp));
}

TEST_CASE("base QP inversion finds the coarsest rate still within the target") {
  auto features = fake_features(65);
  auto roles = classify_frames(65, GopConfig{});
  SyntheticOracleParams params;
  OracleBackend backend(params, features);

  auto total_at = [&](int base) {
    double t = 0.0;
    bool interp = false;
    for (const auto& role : roles)
      t += backend.bits_for(role, first_pass_qp(GopConfig{}, base, role), interp);
    return t;
  };

  for (double target : {total_at(20) * 1.001, total_at(35) * 1.001, total_at(50) * 1.001}) {
    int base = base_qp_for_target(backend, roles, GopConfig{}, target);
    CHECK(total_at(base) <= target);
    if (base > 0) CHECK(total_at(base - 1) > target);
  }
  CHECK(base_qp_for_target(backend, roles, GopConfig{}, 1.0) == 63);
  CHECK(base_qp_for_target(backend, roles, GopConfig{}, 1e15) == 0);
  CHECK_RAISES(ErrorKind::ZeroTarget, base_qp_for_target(backend, roles, GopConfig{}, 0.0));
}

namespace {

PredictorSet quick_models(const std::vector<ComplexityRecord>& features,
                          const std::vector<FrameRole>& roles) {
  SyntheticOracleParams oracle;
  auto truth = synth_sweep(features, roles, GopConfig{}, oracle, {20, 28, 36, 44}, "train");
  ForestHyperparams hp;
  hp.n_estimators = 15;
  PredictorSet set;
  for (FrameType type : {FrameType::I, FrameType::P, FrameType::B}) {
    auto m = build_matrix(features, roles, truth, type, true);
    AnyModel model = AnyModel(fit_forest(m.x, m.y, m.feature_names, type, hp, 0, 2));
    if (type == FrameType::I) set.i_model = std::move(model);
    else if (type == FrameType::P) set.p_model = std::move(model);
    else set.b_model = std::move(model);
  }
  return set;
}

}  // namespace

TEST_CASE("session loop: the deficit ledger reconciles with the totals") {
  auto features = fake_features(97);
  auto roles = classify_frames(97, GopConfig{});
  PredictorSet models = quick_models(features, roles);
  SyntheticOracleParams params;
  OracleBackend backend(params, features);

  RcConstants k;
  RcSessionReport rep =
      simulate_session(features, roles, models, 90000.0, 30.0, k, GopConfig{}, backend);

  CHECK(rep.decisions.size() == 97);
  CHECK(rep.total_target_bits == doctest::Approx(90000.0 * 97.0 / 30.0).epsilon(1e-9));
  CHECK(rep.final_deficit ==
        doctest::Approx(rep.total_achieved_bits - rep.total_target_bits).epsilon(1e-6));
  CHECK(rep.deviation_percent ==
        doctest::Approx(100.0 * (rep.total_achieved_bits - rep.total_target_bits) /
                        rep.total_target_bits)
            .epsilon(1e-9));
  CHECK(rep.decisions.back().deficit_after == rep.final_deficit);
  for (const auto& d : rep.decisions) {
    CHECK(d.q_prime >= 0);
    CHECK(d.q_prime <= 63);
    CHECK(d.b_hat > 0.0);
    CHECK(d.b_prime > 0.0);
    CHECK(d.achieved_bits > 0.0);
    CHECK_FALSE(d.interpolated);  // the oracle never interpolates
  }

  // Per-frame compensation keeps the same ledger identity.
  RcBehavior per_frame;
  per_frame.per_frame_compensation = true;
  RcSessionReport rep2 =
      simulate_session(features, roles, models, 90000.0, 30.0, k, GopConfig{}, backend, per_frame);
  CHECK(rep2.final_deficit ==
        doctest::Approx(rep2.total_achieved_bits - rep2.total_target_bits).epsilon(1e-6));

  // A fixed base QP skips the inversion.
  RcBehavior pinned;
  pinned.base_qp = 30;
  RcSessionReport rep3 =
      simulate_session(features, roles, models, 90000.0, 30.0, k, GopConfig{}, backend, pinned);
  CHECK(rep3.base_qp == 30);
  for (const auto& d : rep3.decisions)
    if (d.frame_type == FrameType::I) CHECK(d.q == 30);
}

TEST_CASE("session loop input validation") {
  auto features = fake_features(10);
  auto roles = classify_frames(10, GopConfig{});
  PredictorSet models = quick_models(fake_features(97), classify_frames(97, GopConfig{}));
  SyntheticOracleParams params;
  OracleBackend backend(params, features);
  RcConstants k;

  CHECK_RAISES(ErrorKind::ZeroTarget,
               simulate_session(features, roles, models, 0.0, 30.0, k, GopConfig{}, backend));
  CHECK_RAISES(ErrorKind::InvalidConfig,
               simulate_session(features, roles, models, 1000.0, 0.0, k, GopConfig{}, backend));
  CHECK_RAISES(ErrorKind::Misalignment,
               simulate_session(fake_features(9), roles, models, 1000.0, 30.0, k, GopConfig{}, backend));
  RcBehavior bad;
  bad.strength = 2.0;
  CHECK_RAISES(ErrorKind::InvalidConfig,
               simulate_session(features, roles, models, 1000.0, 30.0, k, GopConfig{}, backend, bad));
}
