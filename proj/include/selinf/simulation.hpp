#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "selinf/rng.hpp"
#include "selinf/types.hpp"

namespace selinf {

/// Design matrix with i.i.d. N(0, Sigma(rho)) rows, Sigma_ij = rho^|i-j|,
/// generated through the AR(1) recursion.
Eigen::MatrixXd gen_design(Eigen::Index n, Eigen::Index p, double rho, Rng& rng);

/// AR(1) covariance rho^|i-j|.
Eigen::MatrixXd ar1_covariance(Eigen::Index p, double rho);

/// Six nonzero amplitudes -10,-6,-2,2,6,10 at equally spaced positions.
Eigen::VectorXd beta_type4(Eigen::Index p);

/// s nonzeros of the given amplitude at equally spaced positions.
Eigen::VectorXd flat_signal(Eigen::Index p, Eigen::Index s, double amplitude);

/// sigma2 = beta^T Sigma beta / snr.
double snr_to_sigma2(const Eigen::VectorXd& beta, const Eigen::MatrixXd& Sigma, double snr);

/// Monte-Carlo mean of ||X^T Psi||_inf with Psi ~ N(0, sigma2 I).
double lambda_theory(const Eigen::MatrixXd& X, double sigma2, int draws, Rng& rng);

struct CvLambda {
  double cv_min;
  double cv_1se;
};

/// K-fold cross validation of the canonical lasso over a 100-point log grid
/// spanning four decades below ||X^T y||_inf.
CvLambda cross_validate_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int folds,
                               Rng& rng);

/// (est - beta)^T Sigma (est - beta) / beta^T Sigma beta.
double relative_risk(const Eigen::VectorXd& estimate, const Eigen::VectorXd& beta,
                     const Eigen::MatrixXd& Sigma);

enum class SignalType { type4, flat };
enum class LambdaScheme { theory, cv_min, cv_1se, fixed };
enum class MethodTag { lasso, lasso2, ms_slope };

struct ExperimentConfig {
  Eigen::Index n = 200;
  Eigen::Index p = 50;
  double rho = 0.35;
  SignalType signal = SignalType::type4;
  Eigen::Index flat_s = 20;
  double flat_amplitude = 1.0;
  std::vector<double> snr_grid = {0.31, 1.22};
  LambdaScheme lambda_scheme = LambdaScheme::theory;
  double lambda_fixed = 0.0;
  double rand_ratio = 0.5;  // eta^2 / sigma2_hat
  int reps = 500;
  std::uint64_t seed = 1;
  TargetKind target_kind = TargetKind::partial;
  MethodTag method = MethodTag::lasso;
  double level_q = 0.10;
  double ms_alpha = 0.20;
  double slope_lam_scale = 1.0;
  int cv_folds = 10;
  int threads = 0;  // 0: SELINF_THREADS env or hardware count
};

/// Raw material of one replication.
struct ReplicationSummary {
  bool empty = true;
  int selected = 0;
  int screened_true = 0;
  int detected_true = 0;
  int detected_false = 0;
  double coverage_mle = 0.0;   // within-replication average over the selection
  double coverage_naive = 0.0;
  double length_mle = 0.0;
  double length_naive = 0.0;
  double risk_mle = 0.0;
  double risk_query = 0.0;     // point estimate of the query itself
};

struct CellSummary {
  double snr;
  int reps = 0;
  int empty_reps = 0;
  double coverage_mle;   // NaN when every replication had an empty selection
  double coverage_naive;
  double length_mle;
  double length_naive;
  double power;  // pooled: detected true / screened true
  double fdp;    // pooled: detected false / all detections
  double risk_mle;
  double risk_query;
  double mean_selected;
};

struct Summary {
  ExperimentConfig config;
  std::vector<CellSummary> cells;
};

ReplicationSummary run_replication(const ExperimentConfig& config, double snr, Rng& rng);

/// Runs reps x snr_grid replications on per-replication RNG streams split from
/// the master seed; the reduction is slot-based so results do not depend on
/// thread scheduling.
Summary run_experiment(const ExperimentConfig& config);

const char* to_string(SignalType s);
const char* to_string(LambdaScheme s);
const char* to_string(MethodTag m);
const char* to_string(TargetKind k);

}  // namespace selinf
