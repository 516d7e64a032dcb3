#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "framebits/metrics.hpp"
#include "framebits/rng.hpp"
#include "support.hpp"

using namespace framebits;
using framebits::test::TempDir;

TEST_CASE("error metrics on hand-checked vectors") {
  // |10-11|/10 = 10%, |20-18|/20 = 10%, |40-40|/40 = 0%.
  CHECK(mape({10, 20, 40}, {11, 18, 40}) == doctest::Approx(20.0 / 3.0).epsilon(1e-12));
  CHECK(mape({5, 5}, {5, 5}) == 0.0);

  // SS_res = 0.25+0.25, SS_tot = 2 about mean 2.
  CHECK(r2({1, 2, 3}, {1.5, 2, 2.5}) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r2({1, 2, 3}, {1, 2, 3}) == 1.0);
  // Predicting the mean everywhere scores zero; worse scores negative.
  CHECK(r2({1, 2, 3}, {2, 2, 2}) == doctest::Approx(0.0));
  CHECK(r2({1, 2, 3}, {3, 2, 1}) < 0.0);

  CHECK(rate_deviation(103.0, 100.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rate_deviation(97.0, 100.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(rate_deviation(100.0, 100.0) == 0.0);

  CHECK(combined_yuv(48.0, 40.0, 32.0) == doctest::Approx((6 * 48.0 + 40.0 + 32.0) / 8.0).epsilon(1e-12));

  CHECK_RAISES(ErrorKind::LengthMismatch, mape({1, 2}, {1}));
  CHECK_RAISES(ErrorKind::LengthMismatch, mape({}, {}));
  CHECK_RAISES(ErrorKind::ZeroTruth, mape({0, 1}, {1, 1}));
  CHECK_RAISES(ErrorKind::LengthMismatch, r2({1, 2}, {1, 2, 3}));
  CHECK_RAISES(ErrorKind::ZeroVariance, r2({2, 2, 2}, {1, 2, 3}));
  CHECK_RAISES(ErrorKind::ZeroTarget, rate_deviation(10.0, 0.0));
}

TEST_CASE("rd curve preconditions") {
  std::vector<RdPoint> good{{100, 30}, {200, 33}, {400, 36}, {800, 39}};
  validate_rd_curve(good);

  auto bad = good;
  bad.pop_back();
  CHECK_RAISES(ErrorKind::DegenerateCurve, validate_rd_curve(bad));

  bad = good;
  bad[2].rate = bad[1].rate;  // duplicate rate
  CHECK_RAISES(ErrorKind::DegenerateCurve, validate_rd_curve(bad));

  bad = good;
  bad[0].rate = 0.0;
  CHECK_RAISES(ErrorKind::DegenerateCurve, validate_rd_curve(bad));

  bad = good;
  bad[3].quality = bad[2].quality;  // flat quality breaks the inverted axis
  CHECK_RAISES(ErrorKind::DegenerateCurve, validate_rd_curve(bad));

  bad = good;
  std::swap(bad[1], bad[2]);
  CHECK_RAISES(ErrorKind::DegenerateCurve, validate_rd_curve(bad));
}

TEST_CASE("pchip: interpolates knots, preserves monotonicity, never overshoots") {
  std::vector<double> x{0, 1, 2, 4, 7};
  std::vector<double> y{0, 0.5, 3, 3.1, 10};
  auto f = PchipInterpolant::fit(x, y);

  for (size_t i = 0; i < x.size(); ++i) CHECK(f(x[i]) == doctest::Approx(y[i]).epsilon(1e-13));
  CHECK(f.x_min() == 0);
  CHECK(f.x_max() == 7);

  // Monotone data stays monotone between knots, within knot bounds.
  double prev = f(0.0);
  for (int i = 1; i <= 700; ++i) {
    double t = 7.0 * i / 700.0;
    double v = f(t);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK(f(3.0) >= 3.0 - 1e-12);
  CHECK(f(3.0) <= 3.1 + 1e-12);

  CHECK_RAISES(ErrorKind::DegenerateCurve, PchipInterpolant::fit({1}, {1}));
  CHECK_RAISES(ErrorKind::DegenerateCurve, PchipInterpolant::fit({1, 1}, {1, 2}));
  CHECK_RAISES(ErrorKind::LengthMismatch, PchipInterpolant::fit({1, 2}, {1}));
  CHECK_RAISES(ErrorKind::IndexOutOfRange, f(-0.5));
  CHECK_RAISES(ErrorKind::IndexOutOfRange, f(7.5));
}

TEST_CASE("pchip integral matches dense trapezoid quadrature") {
  auto rng = make_rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    size_t n = 4 + draw_below(rng, 6);
    std::vector<double> x(n), y(n);
    double xv = draw_range(rng, -5.0, 0.0);
    double yv = draw_range(rng, -2.0, 2.0);
    for (size_t i = 0; i < n; ++i) {
      xv += draw_range(rng, 0.2, 2.0);
      yv += draw_range(rng, -3.0, 3.0);
      x[i] = xv;
      y[i] = yv;
    }
    auto f = PchipInterpolant::fit(x, y);

    double a = x.front() + 0.1;
    double b = x.back() - 0.1;
    const int steps = 200000;
    double h = (b - a) / steps;
    double acc = 0.5 * (f(a) + f(b));
    for (int i = 1; i < steps; ++i) acc += f(a + h * i);
    double reference = acc * h;

    double exact = f.integral(a, b);
    CHECK(exact == doctest::Approx(reference).epsilon(1e-3));
    // Orientation and additivity.
    CHECK(f.integral(b, a) == doctest::Approx(-exact).epsilon(1e-12));
    double mid = 0.5 * (a + b);
    CHECK(f.integral(a, mid) + f.integral(mid, b) == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("pchip integral of straight-line data is exact") {
  auto f = PchipInterpolant::fit({0, 1, 2, 3}, {1, 3, 5, 7});  // y = 1 + 2x
  CHECK(f.integral(0.0, 3.0) == doctest::Approx(3.0 + 9.0).epsilon(1e-13));
  CHECK(f.integral(0.5, 2.5) == doctest::Approx(2.0 + 6.0).epsilon(1e-13));
}

namespace {

std::vector<RdPoint> scale_rate(const std::vector<RdPoint>& curve, double factor) {
  auto out = curve;
  for (auto& p : out) p.rate *= factor;
  return out;
}

std::vector<RdPoint> sample_curve(std::mt19937_64& rng) {
  // Concave-ish log-rate vs quality curve with jittered knots.
  std::vector<RdPoint> c;
  double rate = draw_range(rng, 50.0, 200.0);
  double quality = draw_range(rng, 28.0, 32.0);
  size_t n = 4 + draw_below(rng, 3);
  for (size_t i = 0; i < n; ++i) {
    c.push_back({rate, quality});
    rate *= draw_range(rng, 1.6, 2.6);
    quality += draw_range(rng, 1.5, 4.0);
  }
  return c;
}

}  // namespace

TEST_CASE("bd rate: identity, exact doubling, antisymmetry") {
  std::vector<RdPoint> anchor{{100, 30}, {210, 33}, {430, 36}, {900, 39}, {1900, 41.5}};

  CHECK(bd_rate(anchor, anchor) == 0.0);
  CHECK(bd_rate(anchor, anchor, BdMethod::ClassicCubic) == 0.0);

  // Same qualities at double the rate: +100% regardless of curve shape.
  auto doubled = scale_rate(anchor, 2.0);
  CHECK(bd_rate(anchor, doubled) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(bd_rate(doubled, anchor) == doctest::Approx(-50.0).epsilon(1e-6));
  CHECK(bd_rate(anchor, doubled, BdMethod::ClassicCubic) == doctest::Approx(100.0).epsilon(1e-6));

  // log-ratio antisymmetry: (1+f(a,b)/100)*(1+f(b,a)/100) = 1.
  auto rng = make_rng(62);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = sample_curve(rng);
    auto b = sample_curve(rng);
    double fwd = bd_rate(a, b);
    double rev = bd_rate(b, a);
    CHECK((1.0 + fwd / 100.0) * (1.0 + rev / 100.0) == doctest::Approx(1.0).epsilon(2e-3));
  }
}

TEST_CASE("bd rate requires overlapping quality ranges") {
  std::vector<RdPoint> lo{{100, 20}, {200, 22}, {400, 24}, {800, 26}};
  std::vector<RdPoint> hi{{100, 30}, {200, 32}, {400, 34}, {800, 36}};
  CHECK_RAISES(ErrorKind::NoOverlap, bd_rate(lo, hi));
  CHECK_RAISES(ErrorKind::DegenerateCurve, bd_rate(lo, {{1, 1}, {2, 2}}));
}

TEST_CASE("rd csv roundtrip") {
  TempDir dir("metrics");
  std::vector<RdPoint> curve{{123.25, 30.5}, {456.5, 33.25}, {789.75, 36.125}, {1600.0, 39.0}};
  auto path = dir.file("curve.csv");
  write_rd_csv(path, curve);
  auto back = read_rd_csv(path);
  REQUIRE(back.size() == curve.size());
  for (size_t i = 0; i < curve.size(); ++i) {
    CHECK(back[i].rate == curve[i].rate);
    CHECK(back[i].quality == curve[i].quality);
  }
  CHECK_RAISES(ErrorKind::FileNotFound, read_rd_csv(dir.file("absent.csv")));
}
