#pragma once

// Closed-form reference values used by the unit and acceptance tests. Nothing
// here calls into the library.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

inline double normal_pdf(double x, double mean = 0.0, double sigma = 1.0) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// -1/2 log(2 pi e sigma^2)
inline double normal_entropy(double sigma = 1.0) {
  return -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma * sigma);
}

inline double normal_kl_shift(double shift) { return 0.5 * shift * shift; }

// TV between N(0,1) and N(m,1): 2 Phi(m/2) - 1.
inline double normal_tv_shift(double shift) { return 2.0 * normal_cdf(0.5 * std::abs(shift)) - 1.0; }

// Square well of height v0 and radius r: a = r - tanh(k r)/k with k = sqrt(v0/2).
inline double square_well_scattering_length(double v0, double r) {
  const double k = std::sqrt(v0 / 2.0);
  return r - std::tanh(k * r) / k;
}

// For the square well, u = sinh(k r)/k inside. With the normalization u ~ (r - a)
// outside, \int |grad phi0|^2 / (4 pi a) = 1 - v0/(2 a c^2) \int_0^R (sinh(k r)/k)^2 dr,
// c = cosh(k R); obtained by integrating (u' r - u)^2 / r^2 by parts with u'' = v u / 2.
inline double square_well_s_hat(double v0, double r) {
  const double k = std::sqrt(v0 / 2.0);
  const double a = square_well_scattering_length(v0, r);
  const double c = std::cosh(k * r);
  const double integral = (std::sinh(2.0 * k * r) / (4.0 * k) - r / 2.0) / (k * k);
  return 1.0 - v0 / (2.0 * a * c * c) * integral;
}

// Thomas-Fermi density (lambda - x^2)_+ / (2g) in 1D with lambda fixed by unit mass:
// \int (lambda - x^2)_+ = (4/3) lambda^{3/2} = 2g.
inline double thomas_fermi_lambda_1d(double g) { return std::pow(1.5 * g, 2.0 / 3.0); }

inline double thomas_fermi_density_1d(double x, double g) {
  return std::max(0.0, thomas_fermi_lambda_1d(g) - x * x) / (2.0 * g);
}

// Optimal 1D coupling of two equal-size point clouds is the sorted matching.
inline double sorted_matching_cost(std::vector<double> a, std::vector<double> b, int order, double truncation) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a[i] - b[i]);
    s += order == 1 ? std::min(d, truncation) : d * d;
  }
  s /= static_cast<double>(a.size());
  return order == 1 ? s : std::sqrt(s);
}

}  // namespace oracle
