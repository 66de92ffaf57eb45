#include "selinf/multi.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "selinf/errors.hpp"
#include "selinf/normal.hpp"

namespace selinf {

std::vector<ImpliedParams> multi_implied_params(const MultiQuerySetup& setup) {
  std::vector<ImpliedParams> ips;
  ips.reserve(setup.queries.size());
  for (const auto& query : setup.queries) ips.push_back(implied_params(query.kkt, query.Sigma_W));
  return ips;
}

Eigen::VectorXd multi_selective_mle(const MultiQuerySetup& setup,
                                    const std::vector<ImpliedParams>& ips,
                                    std::vector<Eigen::VectorXd>* o1_stars_out) {
  const Eigen::VectorXd& beta_hat = setup.target.beta_hat;
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(beta_hat.size());
  std::vector<Eigen::VectorXd> stars;
  stars.reserve(setup.queries.size());
  for (std::size_t l = 0; l < setup.queries.size(); ++l) {
    const auto& query = setup.queries[l];
    Eigen::VectorXd o_star;
    try {
      o_star = solve_barrier(ips[l], beta_hat, query.barrier, query.o1_obs);
    } catch (const SolverError& err) {
      throw SolverError("multi_selective_mle: query " + std::to_string(l) + ": " + err.what(),
                        err.residual());
    }
    correction +=
        ips[l].A.transpose() * (ips[l].precision * (ips[l].A * beta_hat + ips[l].b - o_star));
    stars.push_back(std::move(o_star));
  }
  if (o1_stars_out) *o1_stars_out = std::move(stars);
  return beta_hat + setup.target.Sigma_S * correction;
}

Eigen::MatrixXd multi_fisher_info_inverse(const MultiQuerySetup& setup,
                                          const std::vector<ImpliedParams>& ips,
                                          const std::vector<Eigen::VectorXd>& o1_stars) {
  const Eigen::Index d = setup.target.dim();
  Eigen::LLT<Eigen::MatrixXd> sigma_llt(setup.target.Sigma_S);
  if (sigma_llt.info() != Eigen::Success)
    throw NumericalError("multi_fisher_info: target covariance is not positive definite");

  Eigen::MatrixXd core = sigma_llt.solve(Eigen::MatrixXd::Identity(d, d));
  for (std::size_t l = 0; l < setup.queries.size(); ++l) {
    BarrierEval be = barrier_eval(o1_stars[l], setup.queries[l].barrier);
    const Eigen::MatrixXd pa = ips[l].precision * ips[l].A;
    Eigen::LLT<Eigen::MatrixXd> mid(ips[l].precision + be.hessian);
    if (mid.info() != Eigen::Success)
      throw NumericalError("multi_fisher_info: barrier Hessian factorization failed");
    core += ips[l].A.transpose() * pa - pa.transpose() * mid.solve(pa);
  }
  core = 0.5 * (core + core.transpose()).eval();
  Eigen::MatrixXd inv = setup.target.Sigma_S * core * setup.target.Sigma_S;
  return 0.5 * (inv + inv.transpose());
}

MleResult multi_infer(const MultiQuerySetup& setup, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("multi_infer: q must lie in (0,1)");
  std::vector<ImpliedParams> ips = multi_implied_params(setup);
  std::vector<Eigen::VectorXd> stars;
  MleResult res;
  res.mle = multi_selective_mle(setup, ips, &stars);
  res.info_inverse = multi_fisher_info_inverse(setup, ips, stars);
  res.level = 1.0 - q;

  const Eigen::Index d = res.mle.size();
  const double z = norm_quantile(1.0 - q / 2.0);
  res.pvalues.resize(d);
  res.lower.resize(d);
  res.upper.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(res.info_inverse(j, j));
    const double t = res.mle(j) / sd;
    res.pvalues(j) = 2.0 * std::min(norm_sf(t), norm_cdf(t));
    res.lower(j) = res.mle(j) - z * sd;
    res.upper(j) = res.mle(j) + z * sd;
  }
  return res;
}

TargetModel union_target(const Dataset& data, const std::vector<SelectionOutcome>& outcomes) {
  std::set<Eigen::Index> merged;
  for (const auto& outcome : outcomes) merged.insert(outcome.active.begin(), outcome.active.end());
  if (merged.empty()) throw EmptySelectionError("union_target: all selections empty");
  std::vector<Eigen::Index> E(merged.begin(), merged.end());
  return build_target(data, E, TargetKind::partial);
}

Eigen::VectorXd slope_lambda_ramp(double base, Eigen::Index p) {
  if (!(base > 0.0)) throw std::domain_error("slope_lambda_ramp: base must be positive");
  Eigen::VectorXd lam(p);
  if (p == 1) {
    lam(0) = base;
    return lam;
  }
  for (Eigen::Index j = 0; j < p; ++j)
    lam(j) = base * (1.25 - 0.5 * static_cast<double>(j) / static_cast<double>(p - 1));
  return lam;
}

MsSlopePipeline ms_then_slope_pipeline(const Dataset& data, const RandomizationSpec& rand_stage1,
                                       double eta2_stage2, const MsSlopeOptions& opts, Rng& rng) {
  MsSlopePipeline pipe;
  pipe.screening = solve_marginal_screening(data, rand_stage1, opts.alpha, rng);
  const auto& E1 = pipe.screening.active;
  const Eigen::Index p1 = static_cast<Eigen::Index>(E1.size());

  pipe.stage2.X.resize(data.n(), p1);
  for (Eigen::Index k = 0; k < p1; ++k) pipe.stage2.X.col(k) = data.X.col(E1[k]);
  pipe.stage2.y = data.y;
  pipe.stage2.sigma2 = data.sigma2;

  Eigen::VectorXd lam = opts.lam;
  if (lam.size() == 0) {
    // Ramp anchored at a soft-threshold scale for the screened design.
    const double base =
        opts.lam_scale * std::sqrt(2.0 * std::log(std::max<double>(2.0, double(p1))) *
                                   data.sigma2 * pipe.stage2.X.colwise().squaredNorm().maxCoeff());
    lam = slope_lambda_ramp(base, p1);
  }
  RandomizationSpec rand_stage2 = RandomizationSpec::isotropic(eta2_stage2, p1, rand_stage1.seed);
  pipe.slope = solve_randomized_slope(pipe.stage2, rand_stage2, lam, rng);

  for (Eigen::Index idx : pipe.slope.active) pipe.selected.push_back(E1[idx]);

  // Shared target: partial coefficients of the stage-2 selected columns.
  pipe.setup.target = build_target(pipe.stage2, pipe.slope.active, TargetKind::partial);

  QueryEntry stage1;
  stage1.kkt = ms_kkt(data, pipe.screening, rand_stage1, opts.alpha, pipe.setup.target);
  stage1.barrier = BarrierSpec::sign_only(pipe.screening.signs);
  stage1.Sigma_W = rand_stage1.Sigma_W;
  stage1.o1_obs = pipe.screening.o1;

  QueryEntry stage2;
  stage2.kkt = slope_kkt(pipe.stage2, pipe.slope, lam, pipe.setup.target);
  stage2.barrier = BarrierSpec::affine(stage2.kkt.U, stage2.kkt.v);
  stage2.Sigma_W = rand_stage2.Sigma_W;
  stage2.o1_obs = pipe.slope.o1;

  pipe.setup.queries.push_back(std::move(stage1));
  pipe.setup.queries.push_back(std::move(stage2));
  return pipe;
}

}  // namespace selinf
