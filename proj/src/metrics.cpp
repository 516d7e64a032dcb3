#include "framebits/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "framebits/csv.hpp"
#include "framebits/errors.hpp"

namespace framebits {

double mape(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size())
    raise(ErrorKind::LengthMismatch, "truth has " + std::to_string(y_true.size()) +
                                         " entries, prediction " + std::to_string(y_pred.size()));
  if (y_true.empty()) raise(ErrorKind::LengthMismatch, "empty input");
  double s = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 0.0) raise(ErrorKind::ZeroTruth, "truth value 0 at index " + std::to_string(i));
    s += std::abs(y_true[i] - y_pred[i]) / std::abs(y_true[i]);
  }
  return 100.0 * s / static_cast<double>(y_true.size());
}

double r2(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size())
    raise(ErrorKind::LengthMismatch, "truth has " + std::to_string(y_true.size()) +
                                         " entries, prediction " + std::to_string(y_pred.size()));
  if (y_true.size() < 2) raise(ErrorKind::LengthMismatch, "need at least 2 samples");
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(y_true.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  if (ss_tot <= 0.0) raise(ErrorKind::ZeroVariance, "truth is constant");
  return 1.0 - ss_res / ss_tot;
}

double rate_deviation(double achieved_total, double target_total) {
  if (!(target_total > 0.0)) raise(ErrorKind::ZeroTarget, "target must be positive");
  return 100.0 * std::abs(achieved_total - target_total) / target_total;
}

double combined_yuv(double psnr_y, double psnr_u, double psnr_v) {
  return (6.0 * psnr_y + psnr_u + psnr_v) / 8.0;
}

void validate_rd_curve(const std::vector<RdPoint>& curve) {
  if (curve.size() < 4)
    raise(ErrorKind::DegenerateCurve, "need at least 4 rate-quality points, got " +
                                          std::to_string(curve.size()));
  for (size_t i = 0; i < curve.size(); ++i) {
    if (!(curve[i].rate > 0.0))
      raise(ErrorKind::DegenerateCurve, "non-positive rate at point " + std::to_string(i));
    if (!std::isfinite(curve[i].rate) || !std::isfinite(curve[i].quality))
      raise(ErrorKind::DegenerateCurve, "non-finite value at point " + std::to_string(i));
    if (i > 0 && !(curve[i].rate > curve[i - 1].rate))
      raise(ErrorKind::DegenerateCurve, "rate not strictly increasing at point " + std::to_string(i));
    if (i > 0 && !(curve[i].quality > curve[i - 1].quality))
      raise(ErrorKind::DegenerateCurve,
            "quality not strictly increasing at point " + std::to_string(i));
  }
}

// ---------------------------------------------------------------------------
// Monotone piecewise cubic Hermite

PchipInterpolant PchipInterpolant::fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) raise(ErrorKind::LengthMismatch, "knot arrays disagree in length");
  if (x.size() < 2) raise(ErrorKind::DegenerateCurve, "need at least 2 knots");
  for (size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) raise(ErrorKind::DegenerateCurve, "knots not strictly increasing");

  const size_t n = x.size();
  PchipInterpolant p;
  p.m_x = x;
  p.m_y = y;
  p.m_d.assign(n, 0.0);

  std::vector<double> h(n - 1), delta(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    p.m_d[0] = p.m_d[1] = delta[0];
    return p;
  }

  // Interior: weighted harmonic mean of the neighboring secants, zeroed at
  // local extrema; this is what keeps the interpolant monotone per segment.
  for (size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] == 0.0 || delta[i] == 0.0 || (delta[i - 1] > 0.0) != (delta[i] > 0.0)) {
      p.m_d[i] = 0.0;
    } else {
      double w1 = 2.0 * h[i] + h[i - 1];
      double w2 = h[i] + 2.0 * h[i - 1];
      p.m_d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }

  // One-sided three-point endpoint derivative, clamped to preserve shape.
  auto endpoint = [](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d == 0.0 || d0 == 0.0 || (d > 0.0) != (d0 > 0.0)) return 0.0;
    if ((d0 > 0.0) != (d1 > 0.0) && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return d;
  };
  p.m_d[0] = endpoint(h[0], h[1], delta[0], delta[1]);
  p.m_d[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return p;
}

double PchipInterpolant::operator()(double xq) const {
  if (xq < m_x.front() || xq > m_x.back())
    raise(ErrorKind::IndexOutOfRange, "query outside the knot range");
  size_t i = static_cast<size_t>(std::upper_bound(m_x.begin(), m_x.end(), xq) - m_x.begin());
  if (i > 0) --i;
  if (i + 1 >= m_x.size()) i = m_x.size() - 2;
  double h = m_x[i + 1] - m_x[i];
  double t = (xq - m_x[i]) / h;
  double t2 = t * t, t3 = t2 * t;
  return m_y[i] * (2.0 * t3 - 3.0 * t2 + 1.0) + h * m_d[i] * (t3 - 2.0 * t2 + t) +
         m_y[i + 1] * (-2.0 * t3 + 3.0 * t2) + h * m_d[i + 1] * (t3 - t2);
}

double PchipInterpolant::integral(double a, double b) const {
  if (b < a) return -integral(b, a);
  const double eps = 1e-9 * std::max(1.0, std::abs(m_x.back()) + std::abs(m_x.front()));
  if (a < m_x.front() - eps || b > m_x.back() + eps)
    raise(ErrorKind::IndexOutOfRange, "integration range outside the knot range");
  a = std::max(a, m_x.front());
  b = std::min(b, m_x.back());

  // Antiderivative of the Hermite basis on one segment, in local t.
  auto basis_int = [](double yi, double yj, double hdi, double hdj, double t) {
    double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    return yi * (0.5 * t4 - t3 + t) + hdi * (0.25 * t4 - 2.0 / 3.0 * t3 + 0.5 * t2) +
           yj * (-0.5 * t4 + t3) + hdj * (0.25 * t4 - t3 / 3.0);
  };

  double total = 0.0;
  for (size_t i = 0; i + 1 < m_x.size(); ++i) {
    double lo = std::max(a, m_x[i]);
    double hi = std::min(b, m_x[i + 1]);
    if (hi <= lo) continue;
    double h = m_x[i + 1] - m_x[i];
    double t0 = (lo - m_x[i]) / h;
    double t1 = (hi - m_x[i]) / h;
    total += h * (basis_int(m_y[i], m_y[i + 1], h * m_d[i], h * m_d[i + 1], t1) -
                  basis_int(m_y[i], m_y[i + 1], h * m_d[i], h * m_d[i + 1], t0));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Bjontegaard delta-rate

namespace {

// Least-squares cubic log10(rate) = c0 + c1 q + c2 q^2 + c3 q^3; the classic
// formulation, kept for cross-checks.
struct Cubic {
  double c[4] = {0, 0, 0, 0};

  double integral(double a, double b) const {
    auto anti = [&](double x) {
      return c[0] * x + c[1] * x * x / 2.0 + c[2] * x * x * x / 3.0 + c[3] * x * x * x * x / 4.0;
    };
    return anti(b) - anti(a);
  }
};

Cubic fit_cubic(const std::vector<RdPoint>& curve) {
  double a[4][4] = {};
  double rhs[4] = {};
  for (const auto& p : curve) {
    double q = p.quality;
    double lr = std::log10(p.rate);
    double pw[4] = {1.0, q, q * q, q * q * q};
    for (int i = 0; i < 4; ++i) {
      rhs[i] += pw[i] * lr;
      for (int j = 0; j < 4; ++j) a[i][j] += pw[i] * pw[j];
    }
  }
  // Gaussian elimination with partial pivoting on the 4x4 normal equations.
  int piv[4] = {0, 1, 2, 3};
  for (int col = 0; col < 4; ++col) {
    int best = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[piv[r]][col]) > std::abs(a[piv[best]][col])) best = r;
    std::swap(piv[col], piv[best]);
    double d = a[piv[col]][col];
    if (std::abs(d) < 1e-12) raise(ErrorKind::DegenerateCurve, "cubic fit is singular");
    for (int r = col + 1; r < 4; ++r) {
      double f = a[piv[r]][col] / d;
      for (int c2 = col; c2 < 4; ++c2) a[piv[r]][c2] -= f * a[piv[col]][c2];
      rhs[piv[r]] -= f * rhs[piv[col]];
    }
  }
  Cubic out;
  for (int col = 3; col >= 0; --col) {
    double v = rhs[piv[col]];
    for (int c2 = col + 1; c2 < 4; ++c2) v -= a[piv[col]][c2] * out.c[c2];
    out.c[col] = v / a[piv[col]][col];
  }
  return out;
}

}  // namespace

double bd_rate(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test,
               BdMethod method) {
  validate_rd_curve(anchor);
  validate_rd_curve(test);
  double lo = std::max(anchor.front().quality, test.front().quality);
  double hi = std::min(anchor.back().quality, test.back().quality);
  if (!(hi > lo)) raise(ErrorKind::NoOverlap, "quality ranges do not overlap");

  double diff = 0.0;
  if (method == BdMethod::MonotonePchip) {
    auto log_curve = [](const std::vector<RdPoint>& c) {
      std::vector<double> q(c.size()), lr(c.size());
      for (size_t i = 0; i < c.size(); ++i) {
        q[i] = c[i].quality;
        lr[i] = std::log10(c[i].rate);
      }
      return PchipInterpolant::fit(q, lr);
    };
    PchipInterpolant ia = log_curve(anchor);
    PchipInterpolant ib = log_curve(test);
    diff = (ib.integral(lo, hi) - ia.integral(lo, hi)) / (hi - lo);
  } else {
    Cubic ca = fit_cubic(anchor);
    Cubic cb = fit_cubic(test);
    diff = (cb.integral(lo, hi) - ca.integral(lo, hi)) / (hi - lo);
  }
  return 100.0 * (std::pow(10.0, diff) - 1.0);
}

// ---------------------------------------------------------------------------
// CSV

std::vector<RdPoint> read_rd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::FileNotFound, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) raise(ErrorKind::SchemaError, path + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "rate" || header[1] != "quality")
    raise(ErrorKind::SchemaError, path + ": expected header 'rate,quality'");
  std::vector<RdPoint> out;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    std::string ctx = path + ":" + std::to_string(lineno);
    if (cells.size() != 2) raise(ErrorKind::SchemaError, ctx + ": expected 2 cells");
    out.push_back({parse_double(cells[0], ctx), parse_double(cells[1], ctx)});
  }
  return out;
}

void write_rd_csv(const std::string& path, const std::vector<RdPoint>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << "rate,quality\n";
  for (const auto& p : curve)
    out << format_double(p.rate) << ',' << format_double(p.quality) << '\n';
  if (!out) raise(ErrorKind::IoError, "short write to '" + path + "'");
}

}  // namespace framebits
