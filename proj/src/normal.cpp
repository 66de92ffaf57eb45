#include "selinf/normal.hpp"

#include <cmath>
#include <stdexcept>

namespace selinf {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Tail series for log Phi_bar: Phi_bar(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - ...).
double tail_log_series(double x) {
  const double x2 = x * x;
  double term = 1.0, sum = 1.0, sign = -1.0, numer = 1.0;
  for (int k = 1; k <= 6; ++k) {
    numer *= (2 * k - 1);
    term = numer / std::pow(x2, k);
    sum += sign * term;
    sign = -sign;
  }
  return std::log(sum);
}
}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

double norm_log_sf(double x) {
  if (x < 30.0) {
    return std::log(norm_sf(x));
  }
  return -0.5 * x * x - kLogSqrt2Pi - std::log(x) + tail_log_series(x);
}

double norm_hazard(double x) {
  if (x < 8.0) {
    return norm_pdf(x) / norm_sf(x);
  }
  const double log_pdf = -0.5 * x * x - kLogSqrt2Pi;
  return std::exp(log_pdf - norm_log_sf(x));
}

// Acklam's rational approximation refined by one Halley step against erfc,
// accurate to full double precision away from the extreme tails.
double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("norm_quantile: p must lie in (0,1)");
  }
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = norm_cdf(x) - p;
  const double u = e / norm_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace selinf
