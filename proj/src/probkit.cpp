#include "mlp/probkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "mlp/error.hpp"

namespace mlp::prob {
namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kSqrtTwoPi = 2.50662827463100050242;

// Half sets of the 6-, 12- and 20-point Gauss-Legendre rules on [-1, 1].
constexpr std::array<double, 3> kX6 = {-0.9324695142031521, -0.6612093864662645,
                                       -0.2386191860831969};
constexpr std::array<double, 3> kW6 = {0.1713244923791704, 0.3607615730481386,
                                       0.4679139345726910};
constexpr std::array<double, 6> kX12 = {-0.9815606342467192, -0.9041172563704749,
                                        -0.7699026741943047, -0.5873179542866175,
                                        -0.3678314989981802, -0.1252334085114689};
constexpr std::array<double, 6> kW12 = {0.04717533638651183, 0.1069393259953184,
                                        0.1600783285433462, 0.2031674267230659,
                                        0.2334925365383548, 0.2491470458134028};
constexpr std::array<double, 10> kX20 = {
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
    -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154195,
    -0.2277858511416451, -0.07652652113349734};
constexpr std::array<double, 10> kW20 = {
    0.01761400713915212, 0.04060142980038694, 0.06267204833410907, 0.08327674157670475,
    0.1019301198172404,  0.1181945319615184,  0.1316886384491766,  0.1420961093183820,
    0.1491729864726037,  0.1527533871307258};

struct Rule {
  const double* x;
  const double* w;
  int n;
};

Rule pick_rule(double abs_r) {
  if (abs_r < 0.3) return {kX6.data(), kW6.data(), 3};
  if (abs_r < 0.75) return {kX12.data(), kW12.data(), 6};
  return {kX20.data(), kW20.data(), 10};
}

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Upper orthant probability P(X > h, Y > k), Genz's BVND.
double bvn_upper(double h, double k, double r) {
  const Rule rule = pick_rule(std::abs(r));
  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (int i = 0; i < rule.n; ++i) {
      double sn = std::sin(asr * (rule.x[i] + 1.0) / 2.0);
      bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      sn = std::sin(asr * (-rule.x[i] + 1.0) / 2.0);
      bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
    return bvn * asr / (2.0 * kTwoPi) + phi_cdf(-h) * phi_cdf(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  const double as = (1.0 - r) * (1.0 + r);
  double a = std::sqrt(as);
  const double bs = (h - k) * (h - k);
  const double c = (4.0 - hk) / 8.0;
  const double d = (12.0 - hk) / 16.0;
  bvn = a * std::exp(-(bs / as + hk) / 2.0) *
        (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
  if (hk > -160.0) {
    const double b = std::sqrt(bs);
    bvn -= std::exp(-hk / 2.0) * kSqrtTwoPi * phi_cdf(-b / a) * b *
           (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
  }
  a /= 2.0;
  for (int i = 0; i < rule.n; ++i) {
    double xs = a * (rule.x[i] + 1.0);
    xs *= xs;
    double rs = std::sqrt(1.0 - xs);
    bvn += a * rule.w[i] *
           (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
            std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
    xs = as * (1.0 - rule.x[i]) * (1.0 - rule.x[i]) / 4.0;
    rs = std::sqrt(1.0 - xs);
    bvn += a * rule.w[i] * std::exp(-(bs / xs + hk) / 2.0) *
           (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
  }
  bvn = -bvn / kTwoPi;

  if (r > 0.0) return bvn + phi_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    if (h < 0.0) {
      bvn += phi_cdf(k) - phi_cdf(h);
    } else {
      bvn += phi_cdf(-h) - phi_cdf(-k);
    }
  }
  return bvn;
}

void check_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite argument ") + name);
}

void check_corr(double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw DomainError("correlation must satisfy |rho| < 1, got " + std::to_string(rho));
  }
}

// Acklam's rational approximation, |rel err| < 1.2e-9; refined by Halley steps.
double quantile_seed(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) {
  check_finite(x, "x");
  return phi_cdf(x);
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("quantile requires p in (0,1), got " + std::to_string(p));
  }
  if (p > 0.5) return -std_normal_quantile(1.0 - p);
  double x = quantile_seed(p);
  for (int it = 0; it < 3; ++it) {
    const double e = phi_cdf(x) - p;
    const double u = e * kSqrtTwoPi * std::exp(0.5 * x * x);
    const double step = u / (1.0 + 0.5 * x * u);
    x -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

double bivariate_normal_cdf(double x, double y, double rho) {
  check_finite(x, "x");
  check_finite(y, "y");
  check_corr(rho);
  // Evaluate on the ordered pair so the result is exactly symmetric in (x, y).
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  const double v = bvn_upper(-lo, -hi, rho);
  return std::clamp(v, 0.0, phi_cdf(lo));
}

double bivariate_normal_pdf(double x, double y, double rho) {
  check_finite(x, "x");
  check_finite(y, "y");
  check_corr(rho);
  const double om = (1.0 - rho) * (1.0 + rho);
  const double q = (x * x - 2.0 * rho * x * y + y * y) / om;
  return std::exp(-0.5 * q) / (kTwoPi * std::sqrt(om));
}

BivariateGrad grad_bivariate_cdf(double x, double y, double rho) {
  check_finite(x, "x");
  check_finite(y, "y");
  check_corr(rho);
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  BivariateGrad g;
  g.d_x = std_normal_pdf(x) * phi_cdf((y - rho * x) / s);
  g.d_y = std_normal_pdf(y) * phi_cdf((x - rho * y) / s);
  g.d_rho = bivariate_normal_pdf(x, y, rho);
  return g;
}

}  // namespace mlp::prob
