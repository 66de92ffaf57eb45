#include <Eigen/Dense>
#include <cmath>

#include "selinf/errors.hpp"
#include "selinf/normal.hpp"
#include "selinf/queries.hpp"

namespace selinf {

namespace {
Eigen::VectorXd screening_thresholds(const Dataset& data, const RandomizationSpec& rand,
                                     double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("solve_marginal_screening: alpha must lie in (0,1)");
  const double z = norm_quantile(1.0 - alpha / 2.0);
  const Eigen::Index p = data.p();
  Eigen::VectorXd zeta(p);
  for (Eigen::Index j = 0; j < p; ++j)
    zeta(j) = z * std::sqrt(data.sigma2 * data.X.col(j).squaredNorm() + rand.Sigma_W(j, j));
  return zeta;
}
}  // namespace

SelectionOutcome solve_marginal_screening(const Dataset& data, const Eigen::VectorXd& omega,
                                          const RandomizationSpec& rand, double alpha) {
  const Eigen::Index p = data.p();
  const Eigen::VectorXd zeta = screening_thresholds(data, rand, alpha);
  const Eigen::VectorXd stat = data.X.transpose() * data.y + omega;

  SelectionOutcome out;
  out.query_kind = QueryKind::screening;
  std::vector<double> o1_vals, sign_vals, o2_vals;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::abs(stat(j)) >= zeta(j)) {
      const double z_j = stat(j) > 0.0 ? 1.0 : -1.0;
      out.active.push_back(j);
      sign_vals.push_back(z_j);
      // Active subgradient of the box penalty: z_j (|stat_j| - zeta_j) > 0.
      o1_vals.push_back(z_j * (std::abs(stat(j)) - zeta(j)));
    } else {
      o2_vals.push_back(stat(j));
    }
  }
  if (out.active.empty())
    throw EmptySelectionError("solve_marginal_screening: no coordinate exceeds its threshold");

  out.signs = Eigen::Map<Eigen::VectorXd>(sign_vals.data(), sign_vals.size());
  out.o1 = Eigen::Map<Eigen::VectorXd>(o1_vals.data(), o1_vals.size());
  out.o2 = Eigen::Map<Eigen::VectorXd>(o2_vals.data(), o2_vals.size());
  out.omega = omega;
  return out;
}

SelectionOutcome solve_marginal_screening(const Dataset& data, const RandomizationSpec& rand,
                                          double alpha, Rng& rng) {
  return solve_marginal_screening(data, draw_randomization(rand, rng), rand, alpha);
}

KktAffine ms_kkt(const Dataset& data, const SelectionOutcome& outcome,
                 const RandomizationSpec& rand, double alpha, const TargetModel& target) {
  if (outcome.query_kind != QueryKind::screening)
    throw std::invalid_argument("ms_kkt: outcome is not from a screening query");
  const Eigen::Index p = data.p(), m = outcome.num_active();
  const Eigen::VectorXd zeta = screening_thresholds(data, rand, alpha);

  KktAffine kkt;
  kkt.Q = Eigen::MatrixXd::Zero(p, m);
  Eigen::VectorXd t(p);
  Eigen::Index next = 0, pos = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (next < m && outcome.active[next] == j) {
      kkt.Q(j, next) = 1.0;
      t(j) = outcome.signs(next) * zeta(j);
      ++next;
    } else {
      t(j) = outcome.o2(pos);
      ++pos;
    }
  }
  decompose_data_term(-data.X.transpose(), t, data.y, target, data.sigma2, kkt.P, kkt.r);

  kkt.U = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) kkt.U(k, k) = -outcome.signs(k);
  kkt.v = Eigen::VectorXd::Zero(m);

  const double resid = kkt_residual(kkt, target.beta_hat, outcome.o1, outcome.omega);
  if (resid >= 1e-8)
    throw NumericalError("ms_kkt: reconstruction residual " + std::to_string(resid));
  return kkt;
}

}  // namespace selinf
