#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "selinf/normal.hpp"
#include "selinf/quadrature.hpp"
#include "selinf/stats.hpp"

using namespace selinf;

TEST_CASE("quantile matches reference critical values") {
  CHECK(norm_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  CHECK(norm_quantile(0.95) == doctest::Approx(1.644853626951472).epsilon(1e-10));
  CHECK(norm_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(norm_quantile(0.005) == doctest::Approx(-2.575829303548901).epsilon(1e-10));
  CHECK_THROWS_AS(norm_quantile(0.0), std::domain_error);
  CHECK_THROWS_AS(norm_quantile(1.0), std::domain_error);
}

TEST_CASE("cdf/quantile are mutual inverses") {
  for (double p : {1e-8, 1e-4, 0.02, 0.31, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-11));
  }
}

TEST_CASE("survival function symmetry and log tail") {
  for (double x : {-4.0, -1.0, 0.0, 0.5, 3.0, 7.5}) {
    CHECK(norm_sf(x) + norm_sf(-x) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(norm_log_sf(x) == doctest::Approx(std::log(norm_sf(x))).epsilon(1e-12));
  }
  // Deep tail: compare against the hazard identity d/dx log_sf = -hazard.
  for (double x : {20.0, 35.0, 60.0}) {
    const double h = 1e-5;
    const double fd = (norm_log_sf(x + h) - norm_log_sf(x - h)) / (2.0 * h);
    CHECK(fd == doctest::Approx(-norm_hazard(x)).epsilon(1e-6));
    CHECK(std::isfinite(norm_log_sf(x)));
  }
}

TEST_CASE("hazard continuous across the evaluation switch") {
  const double below = norm_hazard(7.999999);
  const double above = norm_hazard(8.000001);
  CHECK(below == doctest::Approx(above).epsilon(1e-6));
}

TEST_CASE("gauss-kronrod integrates known values") {
  CHECK(integrate_gk([](double x) { return std::exp(-x * x / 2.0); }, -10.0, 10.0) ==
        doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-12));
  CHECK(integrate_gk([](double x) { return std::sin(x); }, 0.0, M_PI) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("ks statistic on a stratified grid is near zero") {
  std::vector<double> sample;
  for (int i = 0; i < 1000; ++i) sample.push_back((i + 0.5) / 1000.0);
  const auto res = ks_test_uniform(sample);
  CHECK(res.statistic < 1e-3 + 1e-9);
  CHECK(res.pvalue > 0.99);
}
