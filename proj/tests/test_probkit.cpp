#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mlp/error.hpp"
#include "mlp/probkit.hpp"
#include "oracles.hpp"

using namespace mlp::prob;

TEST(NormalCdf, KnownValues) {
  EXPECT_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(40.0), 1.0, 1e-15);
  EXPECT_NEAR(std_normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(std_normal_cdf(1.0), oracle::Phi(1.0), 1e-15);
  EXPECT_THROW(std_normal_cdf(std::nan("")), mlp::DomainError);
}

TEST(NormalQuantile, InverseAndAntisymmetry) {
  EXPECT_EQ(std_normal_quantile(0.5), 0.0);
  EXPECT_NEAR(std_normal_quantile(0.8413447460685429), 1.0, 1e-9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
  for (int t = 0; t < 1000; ++t) {
    const double p = u(rng);
    EXPECT_NEAR(std_normal_quantile(p), -std_normal_quantile(1.0 - p), 1e-7 * (1.0 + std::abs(std_normal_quantile(p))));
    EXPECT_NEAR(oracle::Phi(std_normal_quantile(p)), p, 1e-13 + 1e-12 * p);
  }
  EXPECT_THROW(std_normal_quantile(0.0), mlp::DomainError);
  EXPECT_THROW(std_normal_quantile(1.0), mlp::DomainError);
}

TEST(BivariateCdf, ClosedForms) {
  EXPECT_NEAR(bivariate_normal_cdf(0, 0, 0), 0.25, 1e-15);
  EXPECT_NEAR(bivariate_normal_cdf(0, 0, 0.5), 1.0 / 3.0, 1e-12);
  for (double r = -0.99; r <= 0.99; r += 0.01)
    EXPECT_NEAR(bivariate_normal_cdf(0, 0, r), 0.25 + std::asin(r) / (2 * oracle::kPi), 1e-12);
  EXPECT_NEAR(bivariate_normal_cdf(1.0, -0.5, 0.3), oracle::bvn_cdf_quadrature(1.0, -0.5, 0.3), 1e-12);
  EXPECT_THROW(bivariate_normal_cdf(0, 0, 1.0), mlp::DomainError);
  EXPECT_THROW(bivariate_normal_cdf(0, INFINITY, 0.1), mlp::DomainError);
}

TEST(BivariateCdf, QuadratureSpotChecks) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-5, 5), ur(-0.999, 0.999);
  for (int t = 0; t < 200; ++t) {
    const double x = ux(rng), y = ux(rng), r = ur(rng);
    EXPECT_NEAR(bivariate_normal_cdf(x, y, r), oracle::bvn_cdf_quadrature(x, y, r), 1e-11) << x << ' ' << y << ' ' << r;
  }
}

TEST(BivariateCdf, SymmetryMonotonicityBoundary) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-4, 4), ur(-0.95, 0.95), step(0.0, 0.3);
  for (int t = 0; t < 2000; ++t) {
    const double x = ux(rng), y = ux(rng), r = ur(rng);
    const double v = bivariate_normal_cdf(x, y, r);
    EXPECT_EQ(v, bivariate_normal_cdf(y, x, r));
    EXPECT_GE(bivariate_normal_cdf(x + step(rng), y, r), v - 1e-15);
    EXPECT_GE(bivariate_normal_cdf(x, y + step(rng), r), v - 1e-15);
    EXPECT_GE(bivariate_normal_cdf(x, y, std::min(0.99, r + step(rng))), v - 1e-15);
    EXPECT_NEAR(bivariate_normal_cdf(x, 12.0, r), std_normal_cdf(x), 1e-10);
  }
}

TEST(BivariatePdf, ValuesAndRhoDerivative) {
  EXPECT_NEAR(bivariate_normal_pdf(0, 0, 0), 1.0 / (2 * oracle::kPi), 1e-16);
  EXPECT_NEAR(bivariate_normal_pdf(0.3, -1.1, 0.0), oracle::phi(0.3) * oracle::phi(-1.1), 1e-16);
  const double h = 1e-5;
  const double fd = (bivariate_normal_cdf(0.7, -0.2, 0.4 + h) - bivariate_normal_cdf(0.7, -0.2, 0.4 - h)) / (2 * h);
  EXPECT_NEAR(bivariate_normal_pdf(0.7, -0.2, 0.4), fd, 1e-6);
}

TEST(BivariateGrad, ClosedForms) {
  const auto g0 = grad_bivariate_cdf(0, 0, 0);
  EXPECT_NEAR(g0.d_x, oracle::phi(0) * 0.5, 1e-15);
  EXPECT_NEAR(g0.d_y, oracle::phi(0) * 0.5, 1e-15);
  EXPECT_NEAR(g0.d_rho, 1.0 / (2 * oracle::kPi), 1e-15);
  const auto g1 = grad_bivariate_cdf(0.4, -1.3, 0.0);
  EXPECT_NEAR(g1.d_x, oracle::phi(0.4) * oracle::Phi(-1.3), 1e-15);
}

TEST(BivariateGrad, FiniteDifferences) {
  auto check = [](double x, double y, double r, double tol_rel) {
    const double h = 1e-5;
    const auto g = grad_bivariate_cdf(x, y, r);
    const double fx = (bivariate_normal_cdf(x + h, y, r) - bivariate_normal_cdf(x - h, y, r)) / (2 * h);
    const double fy = (bivariate_normal_cdf(x, y + h, r) - bivariate_normal_cdf(x, y - h, r)) / (2 * h);
    const double fr = (bivariate_normal_cdf(x, y, r + h) - bivariate_normal_cdf(x, y, r - h)) / (2 * h);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-3); };
    EXPECT_LE(rel(g.d_x, fx), tol_rel) << x << ' ' << y << ' ' << r;
    EXPECT_LE(rel(g.d_y, fy), tol_rel) << x << ' ' << y << ' ' << r;
    EXPECT_LE(rel(g.d_rho, fr), tol_rel) << x << ' ' << y << ' ' << r;
  };
  check(-0.5, 1.2, 0.6, 1e-6);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-3, 3), ur(-0.95, 0.95);
  for (int t = 0; t < 1000; ++t) check(ux(rng), ux(rng), ur(rng), 1e-6);
}

TEST(ClampCorr, Limits) {
  EXPECT_EQ(clamp_corr(1.0), kCorrClamp);
  EXPECT_EQ(clamp_corr(-2.0), -kCorrClamp);
  EXPECT_EQ(clamp_corr(0.3), 0.3);
}
