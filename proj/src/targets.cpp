#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <stdexcept>

#include "selinf/errors.hpp"
#include "selinf/types.hpp"

namespace selinf {

double estimate_sigma2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n <= p) throw std::domain_error("estimate_sigma2: needs n > p");
  Eigen::VectorXd coef = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  const double rss = (y - X * coef).squaredNorm();
  const double s2 = rss / static_cast<double>(n - p);
  if (!(s2 > 0.0)) throw NumericalError("estimate_sigma2: nonpositive residual variance");
  return s2;
}

RandomizationSpec RandomizationSpec::isotropic(double eta2, Eigen::Index p, std::uint64_t seed) {
  if (!(eta2 > 0.0)) throw std::domain_error("RandomizationSpec: eta2 must be positive");
  RandomizationSpec spec;
  spec.Sigma_W = eta2 * Eigen::MatrixXd::Identity(p, p);
  spec.seed = seed;
  return spec;
}

double kkt_residual(const KktAffine& kkt, const Eigen::VectorXd& beta_hat,
                    const Eigen::VectorXd& o1, const Eigen::VectorXd& omega) {
  return (omega - kkt.P * beta_hat - kkt.Q * o1 - kkt.r).cwiseAbs().maxCoeff();
}

TargetModel build_target(const Dataset& data, const std::vector<Eigen::Index>& E,
                         TargetKind kind) {
  if (E.empty()) throw EmptySelectionError("build_target: empty active set");
  const Eigen::Index n = data.n(), p = data.p(), d = static_cast<Eigen::Index>(E.size());

  TargetModel target;
  target.kind = kind;
  if (kind == TargetKind::partial) {
    Eigen::MatrixXd XE(n, d);
    for (Eigen::Index k = 0; k < d; ++k) XE.col(k) = data.X.col(E[k]);
    Eigen::MatrixXd gram = XE.transpose() * XE;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw NumericalError("build_target: singular active Gram matrix");
    target.L = llt.solve(XE.transpose());
    target.Sigma_S = data.sigma2 * llt.solve(Eigen::MatrixXd::Identity(d, d));
  } else {
    if (n < p) throw std::domain_error("build_target: full target needs n >= p");
    Eigen::MatrixXd gram = data.X.transpose() * data.X;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("build_target: singular Gram matrix");
    Eigen::MatrixXd pinv = llt.solve(data.X.transpose());      // p x n
    Eigen::MatrixXd gram_inv = llt.solve(Eigen::MatrixXd::Identity(p, p));
    target.L.resize(d, n);
    target.Sigma_S.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      target.L.row(i) = pinv.row(E[i]);
      for (Eigen::Index j = 0; j < d; ++j) target.Sigma_S(i, j) = data.sigma2 * gram_inv(E[i], E[j]);
    }
  }
  target.Sigma_S = 0.5 * (target.Sigma_S + target.Sigma_S.transpose()).eval();
  target.beta_hat = target.L * data.y;
  return target;
}

void decompose_data_term(const Eigen::MatrixXd& M, const Eigen::VectorXd& t,
                         const Eigen::VectorXd& y, const TargetModel& target,
                         const Eigen::MatrixXd& cov_y, Eigen::MatrixXd& P_out,
                         Eigen::VectorXd& r_out) {
  Eigen::LLT<Eigen::MatrixXd> llt(target.Sigma_S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("decompose_data_term: singular target covariance");
  // P = M cov_y L^T Sigma_S^{-1}; the remainder M y + t - P beta_hat then has
  // zero covariance with beta_hat.
  Eigen::MatrixXd cross = M * (cov_y * target.L.transpose());
  P_out = llt.solve(cross.transpose()).transpose();
  r_out = M * y + t - P_out * target.beta_hat;
}

void decompose_data_term(const Eigen::MatrixXd& M, const Eigen::VectorXd& t,
                         const Eigen::VectorXd& y, const TargetModel& target, double sigma2,
                         Eigen::MatrixXd& P_out, Eigen::VectorXd& r_out) {
  Eigen::LLT<Eigen::MatrixXd> llt(target.Sigma_S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("decompose_data_term: singular target covariance");
  Eigen::MatrixXd cross = sigma2 * (M * target.L.transpose());
  P_out = llt.solve(cross.transpose()).transpose();
  r_out = M * y + t - P_out * target.beta_hat;
}

}  // namespace selinf
