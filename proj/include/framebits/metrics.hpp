#pragma once

#include <string>
#include <vector>

namespace framebits {

// Mean absolute percentage error, in percent.
double mape(const std::vector<double>& y_true, const std::vector<double>& y_pred);

// Coefficient of determination, 1 - SS_res/SS_tot about the truth mean.
double r2(const std::vector<double>& y_true, const std::vector<double>& y_pred);

// Absolute deviation of achieved from target, in percent.
double rate_deviation(double achieved_total, double target_total);

// Combined-plane quality: luma dominates 6:1:1.
double combined_yuv(double psnr_y, double psnr_u, double psnr_v);

struct RdPoint {
  double rate = 0.0;     // bits or bits/s, any consistent unit
  double quality = 0.0;  // dB or any monotone quality score
};

// Curve precondition for delta-rate work: >= 4 points, positive and strictly
// increasing rate, strictly increasing quality (the quality axis is inverted
// during interpolation, so duplicates are as fatal as decreases).
void validate_rd_curve(const std::vector<RdPoint>& curve);

// Monotone piecewise cubic Hermite interpolant with one-sided endpoint
// derivatives, plus its exact piecewise integral.
class PchipInterpolant {
public:
  // x strictly increasing, >= 2 points.
  static PchipInterpolant fit(const std::vector<double>& x, const std::vector<double>& y);

  double operator()(double x) const;
  // Exact integral over [a, b]; both ends must lie inside the knot range.
  double integral(double a, double b) const;

  double x_min() const { return m_x.front(); }
  double x_max() const { return m_x.back(); }

private:
  std::vector<double> m_x, m_y, m_d;
};

enum class BdMethod { MonotonePchip, ClassicCubic };

// Average rate difference of test vs. anchor over the overlapping quality
// range, in percent: interpolates log10(rate) against quality, integrates,
// and maps the mean log offset back to a ratio.
double bd_rate(const std::vector<RdPoint>& anchor, const std::vector<RdPoint>& test,
               BdMethod method = BdMethod::MonotonePchip);

std::vector<RdPoint> read_rd_csv(const std::string& path);
void write_rd_csv(const std::string& path, const std::vector<RdPoint>& curve);

}  // namespace framebits
