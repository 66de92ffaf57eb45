#pragma once

#include <vector>

#include "selinf/mle.hpp"
#include "selinf/queries.hpp"

namespace selinf {

/// One of L independently randomized queries sharing a common target.
struct QueryEntry {
  KktAffine kkt;
  BarrierSpec barrier;
  Eigen::MatrixXd Sigma_W;
  Eigen::VectorXd o1_obs;  // strictly feasible initializer (the solved query's o1)
};

struct MultiQuerySetup {
  std::vector<QueryEntry> queries;
  TargetModel target;
};

std::vector<ImpliedParams> multi_implied_params(const MultiQuerySetup& setup);

/// Theorem-5 combined estimate: the L barrier programs are separable; results
/// are reduced in query order.
Eigen::VectorXd multi_selective_mle(const MultiQuerySetup& setup,
                                    const std::vector<ImpliedParams>& ips,
                                    std::vector<Eigen::VectorXd>* o1_stars_out = nullptr);

Eigen::MatrixXd multi_fisher_info_inverse(const MultiQuerySetup& setup,
                                          const std::vector<ImpliedParams>& ips,
                                          const std::vector<Eigen::VectorXd>& o1_stars);

/// Full multi-query pipeline with the per-coordinate p-value and interval
/// formulas shared with the single-query path.
MleResult multi_infer(const MultiQuerySetup& setup, double q);

/// Partial target on the union of the active sets.
TargetModel union_target(const Dataset& data, const std::vector<SelectionOutcome>& outcomes);

struct MsSlopeOptions {
  double alpha = 0.20;          // marginal screening level
  Eigen::VectorXd lam;          // SLOPE weights for the screened design; empty = linear ramp
  double lam_scale = 1.0;       // multiplier on the default ramp
};

struct MsSlopePipeline {
  MultiQuerySetup setup;
  SelectionOutcome screening;
  SelectionOutcome slope;
  std::vector<Eigen::Index> selected;  // final active set, original column indices
  Dataset stage2;                      // response with the screened design
};

/// Strictly decreasing linear ramp from 1.25*base down to 0.75*base.
Eigen::VectorXd slope_lambda_ramp(double base, Eigen::Index p);

/// Marginal screening followed by SLOPE on the screened design, each with its
/// own randomization, assembled into a two-query setup for multi_infer.
MsSlopePipeline ms_then_slope_pipeline(const Dataset& data, const RandomizationSpec& rand_stage1,
                                       double eta2_stage2, const MsSlopeOptions& opts, Rng& rng);

}  // namespace selinf
