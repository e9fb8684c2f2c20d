#pragma once

// Univariate and bivariate standard normal kernels.
//
// All functions are pure and thread-safe. Accuracy: std_normal_cdf is within
// a few ulps of the exact value (erfc based); bivariate_normal_cdf uses the
// Drezner-Wesolowsky / Genz Gauss-Legendre scheme and is accurate to ~1e-15
// absolute for |rho| < 1.

namespace mlp::prob {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_normal_pdf(double x);

/// Phi(x). Throws DomainError for non-finite x.
double std_normal_cdf(double x);

/// Phi^{-1}(p) for p in (0,1). Throws DomainError otherwise.
double std_normal_quantile(double p);

/// P(X <= x, Y <= y) for a standard bivariate normal with correlation rho.
/// Requires finite x, y and |rho| < 1 (callers clamp, see clamp_corr).
double bivariate_normal_cdf(double x, double y, double rho);

/// Bivariate standard normal density; equals d/drho of bivariate_normal_cdf.
double bivariate_normal_pdf(double x, double y, double rho);

struct BivariateGrad {
  double d_x;
  double d_y;
  double d_rho;
};

/// Partial derivatives of bivariate_normal_cdf with respect to x, y and rho.
BivariateGrad grad_bivariate_cdf(double x, double y, double rho);

/// Largest |rho| the estimator ever feeds into the bivariate kernels.
inline constexpr double kCorrClamp = 1.0 - 1e-8;

inline double clamp_corr(double rho) {
  return rho > kCorrClamp ? kCorrClamp : (rho < -kCorrClamp ? -kCorrClamp : rho);
}

}  // namespace mlp::prob
