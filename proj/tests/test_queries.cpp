#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "selinf/errors.hpp"
#include "selinf/normal.hpp"
#include "selinf/queries.hpp"
#include "selinf/rng.hpp"

using namespace selinf;

namespace {

Dataset random_dataset(Eigen::Index n, Eigen::Index p, Rng& rng, double sigma = 1.0,
                       int signals = 2, double amplitude = 2.5) {
  Dataset data;
  data.X.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) data.X(i, j) = rng.normal();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int s = 0; s < signals && s < p; ++s) beta(s) = (s % 2 ? -amplitude : amplitude);
  data.y = data.X * beta + sigma * rng.normal_vector(n);
  data.sigma2 = sigma * sigma;
  return data;
}

double lasso_objective(const Dataset& data, const Eigen::VectorXd& omega, double lambda,
                       double epsilon, const Eigen::VectorXd& coef) {
  return 0.5 * (data.y - data.X * coef).squaredNorm() + lambda * coef.lpNorm<1>() +
         0.5 * epsilon * coef.squaredNorm() - omega.dot(coef);
}

// Independent slow oracle: projected gradient on the positive/negative split
// (o = u - w, u,w >= 0), which makes the objective smooth over the orthant.
Eigen::VectorXd projected_gradient_lasso(const Dataset& data, const Eigen::VectorXd& omega,
                                         double lambda, double epsilon, int iters) {
  const Eigen::Index p = data.p();
  Eigen::MatrixXd gram = data.X.transpose() * data.X +
                         epsilon * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd lin = data.X.transpose() * data.y + omega;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double step = 1.0 / (2.0 * es.eigenvalues().maxCoeff());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(p), w = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd g = gram * (u - w) - lin;
    Eigen::VectorXd gu = g.array() + lambda;
    Eigen::VectorXd gw = -g.array() + lambda;
    u = (u - step * gu).cwiseMax(0.0);
    w = (w - step * gw).cwiseMax(0.0);
  }
  return u - w;
}

Eigen::VectorXd pad(const SelectionOutcome& outcome, Eigen::Index p) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k < outcome.active.size(); ++k)
    full(outcome.active[k]) = outcome.o1(static_cast<Eigen::Index>(k));
  return full;
}

}  // namespace

TEST_CASE("scalar lasso is a soft threshold with ridge") {
  Dataset data;
  data.X = Eigen::MatrixXd::Ones(1, 1);
  data.y = Eigen::VectorXd::Constant(1, 2.0);
  data.sigma2 = 1.0;
  Eigen::VectorXd omega = Eigen::VectorXd::Constant(1, 1.0);  // y + omega = 3
  auto outcome = solve_randomized_lasso(data, omega, 1.0, 0.5);
  REQUIRE(outcome.active.size() == 1);
  CHECK(outcome.o1(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(outcome.signs(0) == 1.0);
}

TEST_CASE("large lambda gives an empty selection") {
  Rng rng(3);
  Dataset data = random_dataset(20, 5, rng);
  Eigen::VectorXd omega = rng.normal_vector(5);
  const double huge = 10.0 * (data.X.transpose() * data.y + omega).cwiseAbs().maxCoeff();
  CHECK_THROWS_AS(solve_randomized_lasso(data, omega, huge, 0.5), EmptySelectionError);
}

TEST_CASE("lasso objective matches the slow projected-gradient oracle") {
  Rng rng(17);
  Dataset data = random_dataset(20, 5, rng);
  Eigen::VectorXd omega = rng.normal_vector(5);
  const double lambda = 4.0, epsilon = 0.3;
  auto outcome = solve_randomized_lasso(data, omega, lambda, epsilon);
  Eigen::VectorXd slow = projected_gradient_lasso(data, omega, lambda, epsilon, 1'000'000);
  const double fast_obj = lasso_objective(data, omega, lambda, epsilon, pad(outcome, 5));
  const double slow_obj = lasso_objective(data, omega, lambda, epsilon, slow);
  CHECK(fast_obj == doctest::Approx(slow_obj).epsilon(1e-8));
  CHECK(fast_obj <= slow_obj + 1e-8);
}

TEST_CASE("lasso invariants: signs, inactive bound, kkt reconstruction") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Dataset data = random_dataset(30, 8, rng);
    Eigen::VectorXd omega = 0.7 * rng.normal_vector(8);
    const double lambda = 6.0, epsilon = 1.0 / std::sqrt(30.0);
    SelectionOutcome outcome;
    try {
      outcome = solve_randomized_lasso(data, omega, lambda, epsilon);
    } catch (const EmptySelectionError&) {
      continue;
    }
    for (Eigen::Index k = 0; k < outcome.num_active(); ++k)
      CHECK(outcome.o1(k) * outcome.signs(k) > 0.0);
    if (outcome.o2.size() > 0) CHECK(outcome.o2.cwiseAbs().maxCoeff() < lambda);

    for (auto kind : {TargetKind::partial, TargetKind::full}) {
      TargetModel target = build_target(data, outcome.active, kind);
      KktAffine kkt = lasso_kkt(data, outcome, lambda, epsilon, target);
      CHECK(kkt_residual(kkt, target.beta_hat, outcome.o1, outcome.omega) < 1e-8);
      // Constraint satisfied strictly at the solved instance.
      CHECK(((kkt.v - kkt.U * outcome.o1).array() > 0.0).all());
    }
  }
}

TEST_CASE("orthonormal design gives identity active block in Q") {
  // X = I_4, epsilon = 0 is outside the solver's precondition, so build the
  // K.K.T. map from a solved instance with tiny epsilon and check structure.
  const Eigen::Index p = 4;
  Dataset data;
  data.X = Eigen::MatrixXd::Identity(p, p);
  data.y = Eigen::VectorXd::Zero(p);
  data.y << 4.0, -3.5, 0.1, 0.2;
  data.sigma2 = 1.0;
  Eigen::VectorXd omega = Eigen::VectorXd::Zero(p);
  const double epsilon = 1e-12;
  auto outcome = solve_randomized_lasso(data, omega, 1.0, epsilon);
  REQUIRE(outcome.active == std::vector<Eigen::Index>{0, 1});
  TargetModel target = build_target(data, outcome.active, TargetKind::partial);
  KktAffine kkt = lasso_kkt(data, outcome, 1.0, epsilon, target);
  for (Eigen::Index k = 0; k < outcome.num_active(); ++k) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double expected = (j == outcome.active[k]) ? 1.0 : 0.0;
      CHECK(kkt.Q(j, k) == doctest::Approx(expected).scale(1.0).epsilon(1e-9));
    }
  }
  // -diag(z) o1 < 0 at the solved instance.
  CHECK(((-outcome.signs.array() * outcome.o1.array()) < 0.0).all());
}

TEST_CASE("marginal screening thresholds and selection") {
  Rng rng(5);
  Dataset data = random_dataset(40, 6, rng);
  RandomizationSpec rand = RandomizationSpec::isotropic(0.8, 6);

  // alpha close to 1 selects everything.
  Eigen::VectorXd omega = rng.normal_vector(6);
  auto all = solve_marginal_screening(data, omega, rand, 0.999999);
  CHECK(all.active.size() == 6);

  // Tiny alpha (huge threshold) on pure noise selects nothing.
  Dataset noise = random_dataset(40, 6, rng, 1.0, /*signals=*/0);
  CHECK_THROWS_AS(solve_marginal_screening(noise, omega, rand, 1e-12), EmptySelectionError);

  // Thresholds match an independent quantile-oracle computation.
  const double alpha = 0.2;
  auto outcome = solve_marginal_screening(data, omega, rand, alpha);
  const Eigen::VectorXd stat = data.X.transpose() * data.y + omega;
  double zq = [] {
    double lo = 0.0, hi = 10.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (0.5 * std::erfc(mid / std::sqrt(2.0)) > 0.1) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  }();
  for (Eigen::Index j = 0; j < 6; ++j) {
    const double zeta =
        zq * std::sqrt(data.sigma2 * data.X.col(j).squaredNorm() + rand.Sigma_W(j, j));
    const bool selected =
        std::find(outcome.active.begin(), outcome.active.end(), j) != outcome.active.end();
    CHECK(selected == (std::abs(stat(j)) >= zeta - 1e-6));
  }

  // K.K.T. reconstruction and Q structure.
  TargetModel target = build_target(data, outcome.active, TargetKind::partial);
  KktAffine kkt = ms_kkt(data, outcome, rand, alpha, target);
  CHECK(kkt_residual(kkt, target.beta_hat, outcome.o1, outcome.omega) < 1e-8);
  for (Eigen::Index k = 0; k < outcome.num_active(); ++k)
    for (Eigen::Index j = 0; j < 6; ++j)
      CHECK(kkt.Q(j, k) == (j == outcome.active[k] ? 1.0 : 0.0));
  CHECK(((-outcome.signs.array() * outcome.o1.array()) < 0.0).all());
}

TEST_CASE("build_target structure") {
  Rng rng(31);
  // Orthonormal design: Sigma_S = sigma2 * I for both target kinds.
  const Eigen::Index n = 8, p = 4;
  Eigen::MatrixXd raw(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) raw(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd Qmat = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
  Dataset data{Qmat, rng.normal_vector(n), 2.0};
  std::vector<Eigen::Index> E{0, 2};
  for (auto kind : {TargetKind::partial, TargetKind::full}) {
    TargetModel target = build_target(data, E, kind);
    CHECK((target.Sigma_S - 2.0 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
  }

  // Partial Sigma_S symmetric positive definite on a generic design.
  Dataset generic = random_dataset(30, 6, rng);
  TargetModel target = build_target(generic, {1, 3, 4}, TargetKind::partial);
  CHECK((target.Sigma_S - target.Sigma_S.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::LLT<Eigen::MatrixXd> llt(target.Sigma_S);
  CHECK(llt.info() == Eigen::Success);
  CHECK_THROWS_AS(build_target(generic, {}, TargetKind::partial), EmptySelectionError);
}

TEST_CASE("full-target covariance matches a sampling oracle") {
  Rng rng(77);
  Dataset data = random_dataset(25, 4, rng);
  std::vector<Eigen::Index> E{0, 2, 3};
  TargetModel target = build_target(data, E, TargetKind::full);

  const int draws = 100000;
  const double sigma = std::sqrt(data.sigma2);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(3);
  for (int k = 0; k < draws; ++k) {
    Eigen::VectorXd stat = target.L * (sigma * rng.normal_vector(25));
    acc += stat * stat.transpose();
    mean_acc += stat;
  }
  Eigen::VectorXd mean = mean_acc / draws;
  Eigen::MatrixXd cov = acc / draws - mean * mean.transpose();
  // 3 MC standard errors elementwise; Var of a sample covariance entry is
  // roughly (S_ii S_jj + S_ij^2)/draws under normality.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((target.Sigma_S(i, i) * target.Sigma_S(j, j) +
                                   target.Sigma_S(i, j) * target.Sigma_S(i, j)) /
                                  draws);
      CHECK(std::abs(cov(i, j) - target.Sigma_S(i, j)) < 3.5 * se);
    }
}

TEST_CASE("decompose_data_term recovers the worked special cases") {
  Rng rng(13);
  Dataset data = random_dataset(25, 5, rng);
  std::vector<Eigen::Index> E{1, 4};
  TargetModel target = build_target(data, E, TargetKind::partial);

  // Partial target with M = -X^T: P = -X^T X_E exactly.
  Eigen::MatrixXd P;
  Eigen::VectorXd r;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(5);
  decompose_data_term(-data.X.transpose(), t, data.y, target, data.sigma2, P, r);
  Eigen::MatrixXd XE(25, 2);
  XE.col(0) = data.X.col(1);
  XE.col(1) = data.X.col(4);
  CHECK((P + data.X.transpose() * XE).cwiseAbs().maxCoeff() < 1e-9);

  // Covariance orthogonality: M cov_y L^T = P Sigma_S.
  Eigen::MatrixXd lhs = -data.X.transpose() * (data.sigma2 * target.L.transpose());
  CHECK((lhs - P * target.Sigma_S).cwiseAbs().maxCoeff() < 1e-8);

  // Zero-padded identity target with M = I: the independence identity holds.
  TargetModel ident;
  ident.kind = TargetKind::partial;
  ident.L = Eigen::MatrixXd::Zero(2, 25);
  ident.L(0, 0) = 1.0;
  ident.L(1, 1) = 1.0;
  ident.Sigma_S = data.sigma2 * Eigen::MatrixXd::Identity(2, 2);
  ident.beta_hat = ident.L * data.y;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(25, 25);
  Eigen::MatrixXd P2;
  Eigen::VectorXd r2;
  decompose_data_term(M, Eigen::VectorXd::Zero(25), data.y, ident, data.sigma2, P2, r2);
  Eigen::MatrixXd lhs2 = data.sigma2 * ident.L.transpose();
  CHECK((lhs2 - P2 * ident.Sigma_S).cwiseAbs().maxCoeff() < 1e-10);

  // Full target: covariance orthogonality within 1e-8.
  TargetModel full = build_target(data, E, TargetKind::full);
  Eigen::MatrixXd P3;
  Eigen::VectorXd r3;
  decompose_data_term(-data.X.transpose(), t, data.y, full, data.sigma2, P3, r3);
  Eigen::MatrixXd lhs3 = -data.X.transpose() * (data.sigma2 * full.L.transpose());
  CHECK((lhs3 - P3 * full.Sigma_S).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("estimate_sigma2 validates shape") {
  Rng rng(4);
  Dataset data = random_dataset(12, 4, rng);
  CHECK(estimate_sigma2(data.X, data.y) > 0.0);
  Eigen::MatrixXd wide = Eigen::MatrixXd::Random(3, 5);
  CHECK_THROWS_AS(estimate_sigma2(wide, Eigen::VectorXd::Zero(3)), std::domain_error);
}
