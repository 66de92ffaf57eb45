#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "selinf/report.hpp"
#include "selinf/rng.hpp"
#include "selinf/simulation.hpp"

using namespace selinf;

TEST_CASE("gen_design matches the AR(1) covariance") {
  Rng rng(1);
  const double rho = 0.35;
  Eigen::MatrixXd X = gen_design(100000, 6, rho, rng);
  Eigen::MatrixXd cov = (X.transpose() * X) / double(X.rows());
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(std::abs(cov(i, j) - std::pow(rho, std::abs(i - j))) < 0.02);

  // rho = 0: independent standard normal columns.
  Rng rng0(2);
  Eigen::MatrixXd Z = gen_design(50000, 4, 0.0, rng0);
  Eigen::MatrixXd cov0 = (Z.transpose() * Z) / double(Z.rows());
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(cov0(i, j) - (i == j ? 1.0 : 0.0)) < 0.02);

  // The implied AR(1) factor matches a dense Cholesky of the covariance.
  Eigen::MatrixXd Sigma = ar1_covariance(5, rho);
  Eigen::MatrixXd L = Sigma.llt().matrixL();
  // Row recursion factor: first column rho^i, remaining diagonal structure.
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(5, 5);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < 5; ++i) {
    R(i, 0) = std::pow(rho, i);
    for (int j = 1; j <= i; ++j) R(i, j) = innov * std::pow(rho, i - j);
  }
  CHECK((L - R).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("beta_type4 layout") {
  Eigen::VectorXd beta = beta_type4(50);
  int nonzeros = 0;
  for (int j = 0; j < 50; ++j)
    if (beta(j) != 0.0) ++nonzeros;
  CHECK(nonzeros == 6);

  Eigen::VectorXd dense = beta_type4(6);
  Eigen::VectorXd expect(6);
  expect << -10, -6, -2, 2, 6, 10;
  CHECK((dense - expect).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd flat = flat_signal(20, 5, 1.0);
  CHECK(flat.cwiseAbs().sum() == 5.0);
}

TEST_CASE("snr_to_sigma2") {
  Eigen::VectorXd beta = beta_type4(30);
  Eigen::MatrixXd Sigma = ar1_covariance(30, 0.35);
  const double signal = beta.dot(Sigma * beta);
  CHECK(snr_to_sigma2(beta, Sigma, signal) == doctest::Approx(1.0).epsilon(1e-12));

  // PVE = snr/(1+snr): 0.42 -> about 30%.
  const double snr = 0.42;
  CHECK(snr / (1.0 + snr) == doctest::Approx(0.2958).epsilon(1e-3));

  // Dense-oracle quadratic form.
  double quad = 0.0;
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) quad += beta(i) * Sigma(i, j) * beta(j);
  CHECK(snr_to_sigma2(beta, Sigma, 2.0) == doctest::Approx(quad / 2.0).epsilon(1e-12));
}

TEST_CASE("lambda_theory") {
  Rng rng(3);
  // Single column of norm c: E||X^T Psi||_inf = c sigma sqrt(2/pi).
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(50, 1);
  for (int i = 0; i < 50; ++i) X(i, 0) = 0.3;
  const double c = X.col(0).norm();
  const double sigma2 = 1.7;
  Rng r1(5), r2(5);
  const double est = lambda_theory(X, sigma2, 4000, r1);
  const double expect = c * std::sqrt(sigma2) * std::sqrt(2.0 / M_PI);
  CHECK(est == doctest::Approx(expect).epsilon(0.05));

  // Linear scaling in sigma and determinism under a fixed seed.
  Rng r3(5);
  const double est2 = lambda_theory(X, 4.0 * sigma2, 4000, r3);
  CHECK(est2 == doctest::Approx(2.0 * est).epsilon(1e-12));
  Rng r4(5), r5(5);
  CHECK(lambda_theory(X, sigma2, 100, r4) == lambda_theory(X, sigma2, 100, r5));
}

TEST_CASE("cross validation lambda") {
  Rng rng(9);
  Eigen::MatrixXd X = gen_design(60, 8, 0.2, rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(8);
  beta(0) = 3.0;
  beta(4) = -2.0;
  Eigen::VectorXd y = X * beta + rng.normal_vector(60);

  Rng cv_rng(10);
  CvLambda cv = cross_validate_lambda(X, y, 5, cv_rng);
  CHECK(cv.cv_1se >= cv.cv_min);

  // Deterministic under the same seed.
  Rng cv_rng2(10);
  CvLambda cv2 = cross_validate_lambda(X, y, 5, cv_rng2);
  CHECK(cv.cv_min == cv2.cv_min);
  CHECK(cv.cv_1se == cv2.cv_1se);

  // Pure noise pushes cv_1se toward lambda_max.
  Eigen::VectorXd noise = rng.normal_vector(60);
  Rng cv_rng3(11);
  CvLambda cv_noise = cross_validate_lambda(X, noise, 5, cv_rng3);
  const double lam_max = (X.transpose() * noise).cwiseAbs().maxCoeff();
  CHECK(cv_noise.cv_1se > 0.3 * lam_max);

  CHECK_THROWS_AS(cross_validate_lambda(X, y, 1, cv_rng), std::domain_error);
}

TEST_CASE("relative_risk basics and rotation invariance") {
  Eigen::VectorXd beta(3);
  beta << 1.0, -2.0, 0.5;
  Eigen::MatrixXd Sigma = ar1_covariance(3, 0.4);
  CHECK(relative_risk(beta, beta, Sigma) == 0.0);
  CHECK(relative_risk(Eigen::VectorXd::Zero(3), beta, Sigma) == doctest::Approx(1.0));

  Rng rng(21);
  Eigen::VectorXd est = beta + 0.3 * rng.normal_vector(3);
  double direct = 0.0, denom = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      direct += (est(i) - beta(i)) * Sigma(i, j) * (est(j) - beta(j));
      denom += beta(i) * Sigma(i, j) * beta(j);
    }
  CHECK(relative_risk(est, beta, Sigma) == doctest::Approx(direct / denom).epsilon(1e-12));

  // Orthogonal rotation applied jointly leaves the value unchanged.
  Eigen::MatrixXd raw(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) raw(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd Qrot = qr.householderQ();
  const double rotated = relative_risk(Qrot * est, Qrot * beta, Qrot * Sigma * Qrot.transpose());
  CHECK(rotated == doctest::Approx(relative_risk(est, beta, Sigma)).epsilon(1e-10));
}

TEST_CASE("run_experiment determinism and aggregation oracle") {
  ExperimentConfig config;
  config.n = 80;
  config.p = 12;
  config.reps = 12;
  config.snr_grid = {1.22};
  config.seed = 42;
  config.threads = 2;

  Summary a = run_experiment(config);
  config.threads = 1;
  Summary b = run_experiment(config);
  REQUIRE(a.cells.size() == 1);
  CHECK(a.cells[0].coverage_mle == b.cells[0].coverage_mle);
  CHECK(a.cells[0].length_mle == b.cells[0].length_mle);
  CHECK(a.cells[0].power == b.cells[0].power);
  CHECK(summary_json(a) == summary_json(b));
  CHECK(summary_csv(a) == summary_csv(b));

  // Streaming-vs-batch oracle: recompute the aggregates from the raw
  // replication summaries in a second pass.
  double cov = 0.0;
  int valid = 0;
  long det_true = 0, screened = 0, det_false = 0, det_all = 0;
  for (int r = 0; r < config.reps; ++r) {
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(r));
    ReplicationSummary rep = run_replication(config, 1.22, rng);
    if (rep.empty) continue;
    ++valid;
    cov += rep.coverage_mle;
    det_true += rep.detected_true;
    det_false += rep.detected_false;
    screened += rep.screened_true;
    det_all += rep.detected_true + rep.detected_false;
  }
  REQUIRE(valid > 0);
  CHECK(a.cells[0].coverage_mle == doctest::Approx(cov / valid).epsilon(1e-12));
  CHECK(a.cells[0].power == doctest::Approx(double(det_true) / screened).epsilon(1e-12));
  if (det_all > 0)
    CHECK(a.cells[0].fdp == doctest::Approx(double(det_false) / det_all).epsilon(1e-12));
  CHECK(a.cells[0].power >= 0.0);
  CHECK(a.cells[0].power <= 1.0);
  if (det_all > 0) {
    CHECK(a.cells[0].fdp >= 0.0);
    CHECK(a.cells[0].fdp <= 1.0);
  }
}

TEST_CASE("interval lengths are finite and positive in a small run") {
  ExperimentConfig config;
  config.n = 80;
  config.p = 10;
  config.reps = 8;
  config.snr_grid = {0.71};
  config.seed = 7;
  Summary s = run_experiment(config);
  for (const auto& cell : s.cells) {
    if (cell.empty_reps == cell.reps) continue;
    CHECK(cell.length_mle > 0.0);
    CHECK(std::isfinite(cell.length_mle));
  }
}

TEST_CASE("experiment config json round trip") {
  ExperimentConfig config;
  config.n = 123;
  config.snr_grid = {0.5, 2.0};
  config.method = MethodTag::lasso2;
  config.signal = SignalType::flat;
  config.lambda_scheme = LambdaScheme::cv_1se;
  const std::string text = experiment_config_json(config);
  ExperimentConfig parsed = experiment_config_from_json(text);
  CHECK(parsed.n == 123);
  CHECK(parsed.snr_grid == config.snr_grid);
  CHECK(parsed.method == MethodTag::lasso2);
  CHECK(parsed.signal == SignalType::flat);
  CHECK(parsed.lambda_scheme == LambdaScheme::cv_1se);
  CHECK_THROWS_AS(experiment_config_from_json("{nope"), std::invalid_argument);
}
