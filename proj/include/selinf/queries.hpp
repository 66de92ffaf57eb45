#pragma once

#include "selinf/rng.hpp"
#include "selinf/types.hpp"

namespace selinf {

struct LassoOptions {
  double tol = 1e-12;        // convergence on the largest coordinate update
  int max_sweeps = 50'000;
  double active_tol = 1e-10; // |coef| above this counts as active
  double kkt_tol = 1e-8;
};

/// Draw omega ~ N(0, Sigma_W).
Eigen::VectorXd draw_randomization(const RandomizationSpec& rand, Rng& rng);

/// Randomized LASSO: minimize 0.5||y - X o||^2 + lambda ||o||_1
/// + (epsilon/2)||o||^2 - omega^T o by cyclic coordinate descent with
/// active-set sweeps, followed by an exact active-set polish.
/// Throws EmptySelectionError when nothing is selected.
SelectionOutcome solve_randomized_lasso(const Dataset& data, const Eigen::VectorXd& omega,
                                        double lambda, double epsilon,
                                        const LassoOptions& opts = {});

SelectionOutcome solve_randomized_lasso(const Dataset& data, const RandomizationSpec& rand,
                                        double lambda, double epsilon, Rng& rng,
                                        const LassoOptions& opts = {});

/// K.K.T. map of a solved lasso in natural coordinate order.
KktAffine lasso_kkt(const Dataset& data, const SelectionOutcome& outcome, double lambda,
                    double epsilon, const TargetModel& target);

/// Marginal screening at level alpha: keep j when |X_j^T y + omega_j| >= zeta_j,
/// zeta_j = z_{1-alpha/2} sqrt(sigma2 (X^T X)_{jj} + (Sigma_W)_{jj}).
SelectionOutcome solve_marginal_screening(const Dataset& data, const Eigen::VectorXd& omega,
                                          const RandomizationSpec& rand, double alpha);

SelectionOutcome solve_marginal_screening(const Dataset& data, const RandomizationSpec& rand,
                                          double alpha, Rng& rng);

KktAffine ms_kkt(const Dataset& data, const SelectionOutcome& outcome,
                 const RandomizationSpec& rand, double alpha, const TargetModel& target);

/// Exact proximal operator of the sorted-l1 norm (stack-based isotonic pass).
/// lam must be strictly decreasing and positive.
Eigen::VectorXd slope_prox(const Eigen::VectorXd& u, const Eigen::VectorXd& lam);

struct SlopeOptions {
  double tol = 1e-12;    // fixed-point residual of the prox-gradient map
  int max_iter = 100'000;
  double active_tol = 1e-10;
  double tie_tol = 1e-9;  // magnitudes closer than this share a cluster
  double kkt_tol = 1e-8;
};

/// Randomized SLOPE by accelerated proximal gradient. The outcome records the
/// magnitude clusters, their signs, and the observed penalty subgradient.
SelectionOutcome solve_randomized_slope(const Dataset& data, const Eigen::VectorXd& omega,
                                        const Eigen::VectorXd& lam,
                                        const SlopeOptions& opts = {});

SelectionOutcome solve_randomized_slope(const Dataset& data, const RandomizationSpec& rand,
                                        const Eigen::VectorXd& lam, Rng& rng,
                                        const SlopeOptions& opts = {});

/// K.K.T. map of a solved SLOPE query. Columns of Q are X^T times the
/// sign-weighted cluster column sums; U stacks per-cluster sign rows on top of
/// adjacent-magnitude ordering rows.
KktAffine slope_kkt(const Dataset& data, const SelectionOutcome& outcome,
                    const Eigen::VectorXd& lam, const TargetModel& target);

/// Dispatch on outcome.query_kind; lambda/epsilon/lam as used when solving.
KktAffine query_kkt(const Dataset& data, const SelectionOutcome& outcome,
                    const RandomizationSpec& rand, double lambda, double epsilon,
                    const Eigen::VectorXd& lam, double alpha, const TargetModel& target);

}  // namespace selinf
