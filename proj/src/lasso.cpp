#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "selinf/errors.hpp"
#include "selinf/queries.hpp"

namespace selinf {

namespace {
double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}
}  // namespace

Eigen::VectorXd draw_randomization(const RandomizationSpec& rand, Rng& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(rand.Sigma_W);
  if (llt.info() != Eigen::Success)
    throw NumericalError("draw_randomization: Sigma_W is not positive definite");
  return llt.matrixL() * rng.normal_vector(rand.Sigma_W.rows());
}

SelectionOutcome solve_randomized_lasso(const Dataset& data, const Eigen::VectorXd& omega,
                                        double lambda, double epsilon,
                                        const LassoOptions& opts) {
  if (!(lambda > 0.0)) throw std::domain_error("solve_randomized_lasso: lambda must be positive");
  if (!(epsilon > 0.0)) throw std::domain_error("solve_randomized_lasso: epsilon must be positive");
  const Eigen::Index n = data.n(), p = data.p();
  if (omega.size() != p) throw std::invalid_argument("solve_randomized_lasso: omega size");

  Eigen::VectorXd col_sq(p);
  for (Eigen::Index j = 0; j < p; ++j) col_sq(j) = data.X.col(j).squaredNorm();

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd resid = data.y;
  std::vector<char> in_active(p, 1);

  auto sweep = [&](bool full) {
    double max_update = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!full && !in_active[j]) continue;
      const double cj = data.X.col(j).dot(resid) + col_sq(j) * coef(j) + omega(j);
      const double updated = soft_threshold(cj, lambda) / (col_sq(j) + epsilon);
      const double delta = updated - coef(j);
      if (delta != 0.0) {
        resid -= delta * data.X.col(j);
        coef(j) = updated;
      }
      max_update = std::max(max_update, std::abs(delta));
      in_active[j] = coef(j) != 0.0;
    }
    return max_update;
  };

  double last_update = std::numeric_limits<double>::infinity();
  int sweeps = 0;
  while (sweeps < opts.max_sweeps) {
    ++sweeps;
    last_update = sweep(true);
    if (last_update >= opts.tol) {
      while (sweeps < opts.max_sweeps && sweep(false) >= opts.tol) ++sweeps;
      continue;
    }
    break;
  }
  if (last_update >= opts.tol)
    throw SolverError("solve_randomized_lasso: coordinate descent did not converge", last_update);

  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p; ++j)
    if (std::abs(coef(j)) > opts.active_tol) active.push_back(j);
  if (active.empty())
    throw EmptySelectionError("solve_randomized_lasso: empty active set");

  // Exact polish: with signs fixed, the active block solves
  // (X_E^T X_E + eps I) o1 = X_E^T y + omega_E - lambda z_E.
  const Eigen::Index m = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd XE(n, m);
  Eigen::VectorXd signs(m), rhs(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    XE.col(k) = data.X.col(active[k]);
    signs(k) = coef(active[k]) > 0.0 ? 1.0 : -1.0;
  }
  Eigen::MatrixXd gram = XE.transpose() * XE + epsilon * Eigen::MatrixXd::Identity(m, m);
  rhs = XE.transpose() * data.y + Eigen::VectorXd::NullaryExpr(m, [&](Eigen::Index k) {
          return omega(active[k]);
        }) - lambda * signs;
  Eigen::VectorXd o1 = gram.llt().solve(rhs);

  bool polish_ok = true;
  for (Eigen::Index k = 0; k < m; ++k)
    if (o1(k) * signs(k) <= 0.0) polish_ok = false;
  if (!polish_ok) {
    // Keep the coordinate-descent iterate when the polish would flip a sign.
    o1.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) o1(k) = coef(active[k]);
  }

  Eigen::VectorXd fit_resid = data.y - XE * o1;
  Eigen::VectorXd grad = data.X.transpose() * fit_resid + omega;  // equals eps*o1 + lambda*s
  double kkt_err = 0.0;
  Eigen::VectorXd o2(p - m);
  Eigen::Index next = 0, pos = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (next < m && active[next] == j) {
      kkt_err = std::max(kkt_err, std::abs(grad(j) - epsilon * o1(next) - lambda * signs(next)));
      ++next;
    } else {
      o2(pos) = grad(j);
      if (std::abs(grad(j)) >= lambda)
        throw SolverError("solve_randomized_lasso: inactive subgradient bound violated",
                          std::abs(grad(j)) - lambda);
      ++pos;
    }
  }
  if (kkt_err > opts.kkt_tol)
    throw SolverError("solve_randomized_lasso: stationarity residual too large", kkt_err);

  SelectionOutcome out;
  out.query_kind = QueryKind::lasso;
  out.active = std::move(active);
  out.signs = std::move(signs);
  out.o1 = std::move(o1);
  out.o2 = std::move(o2);
  out.omega = omega;
  return out;
}

SelectionOutcome solve_randomized_lasso(const Dataset& data, const RandomizationSpec& rand,
                                        double lambda, double epsilon, Rng& rng,
                                        const LassoOptions& opts) {
  return solve_randomized_lasso(data, draw_randomization(rand, rng), lambda, epsilon, opts);
}

KktAffine lasso_kkt(const Dataset& data, const SelectionOutcome& outcome, double lambda,
                    double epsilon, const TargetModel& target) {
  if (outcome.query_kind != QueryKind::lasso)
    throw std::invalid_argument("lasso_kkt: outcome is not from a lasso query");
  const Eigen::Index p = data.p(), m = outcome.num_active();

  KktAffine kkt;
  kkt.Q.resize(p, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    kkt.Q.col(k) = data.X.transpose() * data.X.col(outcome.active[k]);
    kkt.Q(outcome.active[k], k) += epsilon;
  }

  // Data term: omega = -X^T y + Q o1 + t with t carrying the fixed subgradient.
  Eigen::VectorXd t(p);
  Eigen::Index next = 0, pos = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (next < m && outcome.active[next] == j) {
      t(j) = lambda * outcome.signs(next);
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
    throw NumericalError("lasso_kkt: reconstruction residual " + std::to_string(resid));
  return kkt;
}

}  // namespace selinf
