#pragma once

#include <cstddef>
#include <optional>

#include "selinf/rng.hpp"

namespace selinf {

/// Publish-if-significant prototype: Y ~ N(beta, 1) is reported only when
/// Y + W > tau for an independent Gaussian randomization W ~ N(0, eta2).
struct FileDrawerProblem {
  double tau;
  double eta2;
  std::optional<double> q;  // selection level when tau was derived from one

  FileDrawerProblem(double tau_in, double eta2_in);

  /// tau = sqrt(1 + eta2) * z_{1-q}.
  static FileDrawerProblem from_level(double q, double eta2);

  double scale() const;  // sqrt(1 + eta2)
};

double threshold_from_level(double q, double eta2);

/// Log of the soft-truncated likelihood in beta, up to a beta-free constant:
/// y*beta - beta^2/2 - log Phi_bar((tau - beta)/sqrt(1+eta2)).
double soft_trunc_loglik(double y, double beta, const FileDrawerProblem& prob);

/// Gradient of the log-partition: beta + hazard((tau-beta)/s)/s with s = sqrt(1+eta2).
double grad_alpha(double beta, const FileDrawerProblem& prob);

/// Second derivative of the log-partition; also the observed Fisher information
/// when evaluated at the MLE. Bounded below by eta2/(1+eta2).
double hess_alpha(double beta, const FileDrawerProblem& prob);

struct MleOptions {
  int max_iter = 100;
  double tol = 1e-10;
};

/// Root of grad_alpha(beta) = y by safeguarded Newton with a bisection fallback.
double solve_mle_1d(double y, const FileDrawerProblem& prob, const MleOptions& opts = {});

inline double fisher_info_1d(double beta_mle, const FileDrawerProblem& prob) {
  return hess_alpha(beta_mle, prob);
}

/// One-sided pivot Phi_bar(sqrt(I(mle)) * (mle - beta)).
double pivot_1d(double y, double beta, const FileDrawerProblem& prob);

/// Two-sided p-value 2*min(Phi_bar(t), Phi(t)) with t = sqrt(I(mle))*mle; the
/// reporting default for hypothesis beta = 0.
double pvalue_two_sided_1d(double y, const FileDrawerProblem& prob);

/// Unnormalized exact density of the selective MLE at m (validation oracle).
double exact_mle_density(double m, double beta, const FileDrawerProblem& prob);

/// Draw Y from the conditional law {Y : Y + W > tau} by rejection, or nullopt
/// if max_attempts proposals are exhausted.
std::optional<double> sample_conditional_y(double beta, const FileDrawerProblem& prob, Rng& rng,
                                           std::size_t max_attempts = 10'000'000,
                                           std::size_t* attempts_out = nullptr);

struct MseBoundReport {
  double mse;            // Monte-Carlo conditional MSE of the selective MLE
  double bound;          // B^{-1} * Var(Y | selection), B = eta^4 (1+eta2)^{-2}
  double mc_se;          // combined standard error of (mse - bound)
  std::size_t accepted;
  std::size_t proposals;
  bool holds;            // mse <= bound + 3 * mc_se
};

/// Monte-Carlo check of the conditional mean-squared-error bound.
MseBoundReport mse_bound_check(double beta, const FileDrawerProblem& prob, std::size_t reps,
                               Rng& rng);

}  // namespace selinf
