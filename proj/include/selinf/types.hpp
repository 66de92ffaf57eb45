#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace selinf {

/// Fixed-design regression data. sigma2 is the (known or estimated) noise
/// variance of the response.
struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd y;  // n
  double sigma2;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

/// OLS residual variance ||(I - X(X^T X)^{-1} X^T) y||^2 / (n - p); needs n > p.
double estimate_sigma2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Gaussian randomization W ~ N(0, Sigma_W). Isotropic by default.
struct RandomizationSpec {
  Eigen::MatrixXd Sigma_W;
  std::uint64_t seed = 0;

  static RandomizationSpec isotropic(double eta2, Eigen::Index p, std::uint64_t seed = 0);
};

enum class QueryKind { lasso, screening, slope };

/// Everything conditioned on after solving one randomized query.
struct SelectionOutcome {
  QueryKind query_kind;
  std::vector<Eigen::Index> active;        // E, ordered
  Eigen::VectorXd signs;                   // z_E, one per active coordinate
  Eigen::VectorXd o1;                      // active optimization variables
                                           //   (per cluster for slope)
  Eigen::VectorXd o2;                      // inactive subgradient / statistic values,
                                           //   natural order over E^c
  Eigen::VectorXd omega;                   // realized randomization draw
  std::vector<std::vector<Eigen::Index>> clusters;  // slope only
  Eigen::VectorXd cluster_signs;                    // slope only, one per cluster
  Eigen::VectorXd subgradient;             // full observed penalty subgradient (slope)

  Eigen::Index num_active() const { return static_cast<Eigen::Index>(active.size()); }
};

/// Affine K.K.T. representation omega = P beta_hat + Q o1 + r with the
/// polyhedral selection event {o1 : U o1 < v}.
struct KktAffine {
  Eigen::MatrixXd P;  // p x d
  Eigen::MatrixXd Q;  // p x m
  Eigen::VectorXd r;  // p
  Eigen::MatrixXd U;  // c x m
  Eigen::VectorXd v;  // c
};

/// Max-norm of omega - (P beta_hat + Q o1 + r).
double kkt_residual(const KktAffine& kkt, const Eigen::VectorXd& beta_hat,
                    const Eigen::VectorXd& o1, const Eigen::VectorXd& omega);

enum class TargetKind { partial, full };

/// Linear target beta_hat = L y with pre-selection covariance Sigma_S.
struct TargetModel {
  Eigen::VectorXd beta_hat;  // d
  Eigen::MatrixXd Sigma_S;   // d x d, sigma2 * L L^T
  TargetKind kind;
  Eigen::MatrixXd L;         // d x n

  Eigen::Index dim() const { return beta_hat.size(); }
};

/// Partial target: L = (X_E^T X_E)^{-1} X_E^T. Full target: rows E of
/// (X^T X)^{-1} X^T (requires an invertible Gram matrix).
TargetModel build_target(const Dataset& data, const std::vector<Eigen::Index>& E, TargetKind kind);

/// Splits the data term M y + t of a K.K.T. map into the target contribution
/// P beta_hat plus a remainder r whose random part is covariance-orthogonal to
/// beta_hat: P = M cov_y L^T Sigma_S^{-1}, r = M y + t - P beta_hat.
void decompose_data_term(const Eigen::MatrixXd& M, const Eigen::VectorXd& t,
                         const Eigen::VectorXd& y, const TargetModel& target,
                         const Eigen::MatrixXd& cov_y, Eigen::MatrixXd& P_out,
                         Eigen::VectorXd& r_out);

/// Convenience overload for cov_y = sigma2 * I.
void decompose_data_term(const Eigen::MatrixXd& M, const Eigen::VectorXd& t,
                         const Eigen::VectorXd& y, const TargetModel& target, double sigma2,
                         Eigen::MatrixXd& P_out, Eigen::VectorXd& r_out);

}  // namespace selinf
