#include "selinf/filedrawer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "selinf/errors.hpp"
#include "selinf/normal.hpp"
#include "selinf/stats.hpp"

namespace selinf {

FileDrawerProblem::FileDrawerProblem(double tau_in, double eta2_in) : tau(tau_in), eta2(eta2_in) {
  if (!(eta2 > 0.0)) throw std::domain_error("FileDrawerProblem: eta2 must be positive");
}

FileDrawerProblem FileDrawerProblem::from_level(double q_in, double eta2_in) {
  FileDrawerProblem prob(threshold_from_level(q_in, eta2_in), eta2_in);
  prob.q = q_in;
  return prob;
}

double FileDrawerProblem::scale() const { return std::sqrt(1.0 + eta2); }

double threshold_from_level(double q, double eta2) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("threshold_from_level: q must lie in (0,1)");
  // eta2 = 0 recovers the non-randomized threshold; only negative is rejected.
  if (eta2 < 0.0) throw std::domain_error("threshold_from_level: eta2 must be nonnegative");
  return std::sqrt(1.0 + eta2) * norm_quantile(1.0 - q);
}

double soft_trunc_loglik(double y, double beta, const FileDrawerProblem& prob) {
  const double s = prob.scale();
  return y * beta - 0.5 * beta * beta - norm_log_sf((prob.tau - beta) / s);
}

double grad_alpha(double beta, const FileDrawerProblem& prob) {
  const double s = prob.scale();
  return beta + norm_hazard((prob.tau - beta) / s) / s;
}

double hess_alpha(double beta, const FileDrawerProblem& prob) {
  const double s = prob.scale();
  const double u = (prob.tau - beta) / s;
  const double h = norm_hazard(u);
  // 1 + (u*h - h^2) / (1+eta2); the parenthesized term lives in (-1, 0].
  return 1.0 + (u * h - h * h) / (s * s);
}

double solve_mle_1d(double y, const FileDrawerProblem& prob, const MleOptions& opts) {
  if (!std::isfinite(y)) throw std::domain_error("solve_mle_1d: y must be finite");
  const double s = prob.scale();

  // grad_alpha(beta) > beta makes the upper end bracket immediately; the lower
  // end expands geometrically to cover extreme thresholds.
  double width = 10.0 * s;
  double hi = y + width;
  double lo = y - width;
  double flo = grad_alpha(lo, prob) - y;
  for (int k = 0; k < 200 && flo > 0.0; ++k) {
    width *= 2.0;
    lo = y - width;
    flo = grad_alpha(lo, prob) - y;
  }
  if (flo > 0.0) throw SolverError("solve_mle_1d: failed to bracket the estimating equation", flo);

  double x = std::min(std::max(y, lo), hi);
  double fx = grad_alpha(x, prob) - y;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (std::abs(fx) < opts.tol) return x;
    if (fx > 0.0) hi = x; else lo = x;
    const double step = fx / hess_alpha(x, prob);
    double x_new = x - step;
    if (!(x_new > lo && x_new < hi)) x_new = 0.5 * (lo + hi);
    x = x_new;
    fx = grad_alpha(x, prob) - y;
  }
  if (std::abs(fx) < opts.tol) return x;
  throw SolverError("solve_mle_1d: no convergence", std::abs(fx));
}

double pivot_1d(double y, double beta, const FileDrawerProblem& prob) {
  const double mle = solve_mle_1d(y, prob);
  const double info = fisher_info_1d(mle, prob);
  return norm_sf(std::sqrt(info) * (mle - beta));
}

double pvalue_two_sided_1d(double y, const FileDrawerProblem& prob) {
  const double mle = solve_mle_1d(y, prob);
  const double t = std::sqrt(fisher_info_1d(mle, prob)) * mle;
  return 2.0 * std::min(norm_sf(t), norm_cdf(t));
}

double exact_mle_density(double m, double beta, const FileDrawerProblem& prob) {
  const double ga = grad_alpha(m, prob);
  const double det = std::abs(hess_alpha(m, prob));
  return det * std::exp(-0.5 * (ga - beta) * (ga - beta)) *
         norm_sf((prob.tau - ga) / std::sqrt(prob.eta2));
}

std::optional<double> sample_conditional_y(double beta, const FileDrawerProblem& prob, Rng& rng,
                                           std::size_t max_attempts, std::size_t* attempts_out) {
  const double eta = std::sqrt(prob.eta2);
  for (std::size_t k = 0; k < max_attempts; ++k) {
    const double y = beta + rng.normal();
    const double w = eta * rng.normal();
    if (y + w > prob.tau) {
      if (attempts_out) *attempts_out = k + 1;
      return y;
    }
  }
  if (attempts_out) *attempts_out = max_attempts;
  return std::nullopt;
}

MseBoundReport mse_bound_check(double beta, const FileDrawerProblem& prob, std::size_t reps,
                               Rng& rng) {
  if (reps < 1000) throw std::domain_error("mse_bound_check: reps must be at least 1000");
  const double b_const = prob.eta2 * prob.eta2 / ((1.0 + prob.eta2) * (1.0 + prob.eta2));

  std::vector<double> sq_err(reps), ys(reps);
  std::size_t proposals = 0;
  for (std::size_t i = 0; i < reps; ++i) {
    std::size_t used = 0;
    auto y = sample_conditional_y(beta, prob, rng, 10'000'000, &used);
    proposals += used;
    if (!y) throw EmptySelectionError("mse_bound_check: no accepted draws within the attempt cap");
    const double mle = solve_mle_1d(*y, prob);
    sq_err[i] = (mle - beta) * (mle - beta);
    ys[i] = *y;
  }

  const double n = static_cast<double>(reps);
  const double mse = mean(sq_err);
  const double var_y = variance(ys);
  const double bound = var_y / b_const;
  const double se_mse = std::sqrt(variance(sq_err) / n);
  // Var of the sample variance of Y under approximate normality: 2*sigma^4/(n-1).
  const double se_bound = std::sqrt(2.0 * var_y * var_y / (n - 1.0)) / b_const;
  const double mc_se = std::sqrt(se_mse * se_mse + se_bound * se_bound);
  return {mse, bound, mc_se, reps, proposals, mse <= bound + 3.0 * mc_se};
}

}  // namespace selinf
