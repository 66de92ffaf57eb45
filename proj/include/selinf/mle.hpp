#pragma once

#include <Eigen/Core>
#include <vector>

#include "selinf/barrier.hpp"
#include "selinf/rng.hpp"
#include "selinf/types.hpp"

namespace selinf {

/// Gaussian regression of the active optimization variables on the target
/// statistic implied by a K.K.T. map:
/// Sigma_bar^{-1} = Q^T Sigma_W^{-1} Q, A = -Sigma_bar Q^T Sigma_W^{-1} P,
/// b = -Sigma_bar Q^T Sigma_W^{-1} r.
struct ImpliedParams {
  Eigen::MatrixXd Sigma_bar;
  Eigen::MatrixXd precision;  // Sigma_bar^{-1}
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

ImpliedParams implied_params(const KktAffine& kkt, const Eigen::MatrixXd& Sigma_W);

struct BarrierSolveOptions {
  double tol = 1e-10;  // sup-norm of the stationarity residual
  int max_iter = 200;
};

/// Minimizes 0.5 (o - A beta_hat - b)^T Sigma_bar^{-1} (o - A beta_hat - b)
/// + B(o) by damped Newton with feasibility backtracking. init must be
/// strictly feasible (the solved query's o1 always is).
Eigen::VectorXd solve_barrier(const ImpliedParams& ip, const Eigen::VectorXd& beta_hat,
                              const BarrierSpec& spec, const Eigen::VectorXd& init,
                              const BarrierSolveOptions& opts = {});

/// Theorem-2 estimating equation:
/// beta_hat + Sigma_S A^T Sigma_bar^{-1} (A beta_hat + b - o1_star).
Eigen::VectorXd selective_mle(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& Sigma_S,
                              const ImpliedParams& ip, const Eigen::VectorXd& o1_star);

/// Barrier-version approximate log-likelihood at breve_beta (up to a constant);
/// the inner joint minimization over (beta', o1) runs block-coordinate Newton
/// to stationarity tolerance inner_tol.
double approx_loglik(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& breve_beta,
                     const Eigen::MatrixXd& Sigma_S, const ImpliedParams& ip,
                     const BarrierSpec& spec, const Eigen::VectorXd& feasible_init,
                     double inner_tol = 1e-10);

/// Gradient of the approximate log-partition at natural parameter eta: equals
/// the beta'-component of the inner joint minimizer.
Eigen::VectorXd grad_log_partition(const Eigen::VectorXd& eta, const Eigen::MatrixXd& Sigma_S,
                                   const ImpliedParams& ip, const BarrierSpec& spec,
                                   const Eigen::VectorXd& feasible_init, double inner_tol = 1e-10);

struct FisherInfo {
  Eigen::MatrixXd info;
  Eigen::MatrixXd info_inverse;
};

/// Observed Fisher information of the approximate log-likelihood at the MLE
/// (Theorem 4), with its inverse computed from the same factorization.
FisherInfo fisher_info(const ImpliedParams& ip, const Eigen::MatrixXd& Sigma_S,
                       const Eigen::VectorXd& o1_star, const BarrierSpec& spec);

struct MleResult {
  Eigen::VectorXd mle;
  Eigen::MatrixXd info_inverse;
  Eigen::VectorXd pvalues;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.0;  // nominal coverage 1 - q
  bool empty = false;

  static MleResult empty_result(double level);
};

/// Full pipeline: implied parameters, barrier solve, MLE, Fisher information,
/// then per-coordinate two-sided p-values and level-(1-q) intervals.
MleResult infer(const TargetModel& target, const KktAffine& kkt, const Eigen::MatrixXd& Sigma_W,
                const BarrierSpec& spec, const Eigen::VectorXd& o1_obs, double q);

struct MvMseBoundReport {
  double mse;
  double bound;
  double mc_se;
  std::size_t accepted;
  std::size_t proposals;
  bool holds;
};

/// Monte-Carlo check of the Theorem-3 bound for a fixed conditioning geometry:
/// draws (beta_hat, o1) from the implied Gaussian, keeps draws inside the
/// selection polyhedron, and compares the conditional MSE of the approximate
/// MLE against (eta0 * eta1)^{-2} E||beta_hat - grad alpha(Sigma^{-1} breve)||^2.
MvMseBoundReport mse_bound_check_mv(const ImpliedParams& ip, const Eigen::MatrixXd& Sigma_S,
                                    const BarrierSpec& spec, const Eigen::VectorXd& breve_beta,
                                    const Eigen::VectorXd& feasible_init, std::size_t reps,
                                    Rng& rng, std::size_t max_proposals = 50'000'000);

/// Exact Theorem-1 maximum likelihood for d <= 2 and |E| <= 2 via adaptive
/// quadrature of the soft-truncation factor; validation oracle only.
Eigen::VectorXd exact_small_dim_mle(const TargetModel& target, const KktAffine& kkt,
                                    const Eigen::MatrixXd& Sigma_W);

/// The soft-truncation probability f(beta_hat) in (0, 1], by quadrature.
double selection_probability(const Eigen::VectorXd& beta_hat, const ImpliedParams& ip,
                             const KktAffine& kkt);

}  // namespace selinf
