#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "selinf/errors.hpp"
#include "selinf/queries.hpp"

namespace selinf {

namespace {
void check_lam(const Eigen::VectorXd& lam) {
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (!(lam(i) > 0.0)) throw std::domain_error("slope: weights must be positive");
    if (i > 0 && !(lam(i) < lam(i - 1)))
      throw std::domain_error("slope: weights must be strictly decreasing");
  }
}
}  // namespace

Eigen::VectorXd slope_prox(const Eigen::VectorXd& u, const Eigen::VectorXd& lam) {
  const Eigen::Index p = u.size();
  if (lam.size() != p) throw std::invalid_argument("slope_prox: size mismatch");
  check_lam(lam);

  std::vector<Eigen::Index> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(u(a)) > std::abs(u(b));
  });

  // Stack-based isotonic pass on |u| sorted decreasing.
  std::vector<Eigen::Index> start(p), end(p);
  std::vector<double> sum(p);
  Eigen::Index top = -1;
  for (Eigen::Index k = 0; k < p; ++k) {
    ++top;
    start[top] = k;
    end[top] = k;
    sum[top] = std::abs(u(order[k])) - lam(k);
    while (top > 0 &&
           sum[top] / (end[top] - start[top] + 1) >= sum[top - 1] / (end[top - 1] - start[top - 1] + 1)) {
      sum[top - 1] += sum[top];
      end[top - 1] = end[top];
      --top;
    }
  }

  Eigen::VectorXd result = Eigen::VectorXd::Zero(p);
  for (Eigen::Index blk = 0; blk <= top; ++blk) {
    const double value = std::max(0.0, sum[blk] / (end[blk] - start[blk] + 1));
    for (Eigen::Index k = start[blk]; k <= end[blk]; ++k) {
      const Eigen::Index j = order[k];
      result(j) = (u(j) >= 0.0 ? 1.0 : -1.0) * value;
    }
  }
  return result;
}

SelectionOutcome solve_randomized_slope(const Dataset& data, const Eigen::VectorXd& omega,
                                        const Eigen::VectorXd& lam, const SlopeOptions& opts) {
  const Eigen::Index p = data.p();
  if (omega.size() != p || lam.size() != p)
    throw std::invalid_argument("solve_randomized_slope: size mismatch");
  check_lam(lam);

  const Eigen::MatrixXd gram = data.X.transpose() * data.X;
  const Eigen::VectorXd xty = data.X.transpose() * data.y;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-12);

  // Plain proximal gradient: monotone and linearly convergent whenever the
  // Gram matrix is nonsingular, which holds in the n > p settings used here.
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  double step_size = 1.0 / lip;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::VectorXd grad = gram * coef - xty - omega;
    Eigen::VectorXd next = slope_prox(coef - step_size * grad, step_size * lam);
    residual = (next - coef).cwiseAbs().maxCoeff();
    coef = next;
    if (residual < opts.tol) break;
  }
  if (residual >= opts.tol)
    throw SolverError("solve_randomized_slope: prox-gradient did not converge", residual);

  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < p; ++j)
    if (std::abs(coef(j)) > opts.active_tol) active.push_back(j);
  if (active.empty()) throw EmptySelectionError("solve_randomized_slope: empty active set");

  // Magnitude clusters in decreasing order, averaging within ties.
  std::vector<Eigen::Index> by_mag(active);
  std::stable_sort(by_mag.begin(), by_mag.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(coef(a)) > std::abs(coef(b));
  });
  SelectionOutcome out;
  out.query_kind = QueryKind::slope;
  out.active = active;
  out.signs.resize(static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k)
    out.signs(static_cast<Eigen::Index>(k)) = coef(active[k]) > 0.0 ? 1.0 : -1.0;

  std::vector<double> cluster_vals;
  for (std::size_t i = 0; i < by_mag.size();) {
    std::size_t j = i;
    double mag_sum = 0.0;
    while (j < by_mag.size() &&
           std::abs(std::abs(coef(by_mag[j])) - std::abs(coef(by_mag[i]))) <= opts.tie_tol) {
      mag_sum += std::abs(coef(by_mag[j]));
      ++j;
    }
    out.clusters.emplace_back(by_mag.begin() + i, by_mag.begin() + j);
    cluster_vals.push_back(mag_sum / static_cast<double>(j - i));
    i = j;
  }
  const Eigen::Index num_clusters = static_cast<Eigen::Index>(out.clusters.size());
  out.cluster_signs.resize(num_clusters);
  out.o1.resize(num_clusters);
  for (Eigen::Index k = 0; k < num_clusters; ++k) {
    const double lead_sign = coef(out.clusters[k].front()) > 0.0 ? 1.0 : -1.0;
    out.cluster_signs(k) = lead_sign;
    out.o1(k) = lead_sign * cluster_vals[k];
    // Snap tied coordinates to the shared magnitude.
    for (Eigen::Index j : out.clusters[k])
      coef(j) = (coef(j) > 0.0 ? 1.0 : -1.0) * cluster_vals[k];
  }

  // Observed subgradient of the sorted-l1 penalty at the solution.
  out.subgradient = omega + xty - gram * coef;
  out.o2.resize(p - static_cast<Eigen::Index>(active.size()));
  Eigen::Index pos = 0;
  std::size_t next = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (next < active.size() && active[next] == j) {
      ++next;
    } else {
      out.o2(pos++) = out.subgradient(j);
    }
  }
  out.omega = omega;

  const double kkt_res =
      (coef - slope_prox(coef - step_size * (gram * coef - xty - omega), step_size * lam))
          .cwiseAbs()
          .maxCoeff();
  if (kkt_res > opts.kkt_tol)
    throw SolverError("solve_randomized_slope: stationarity residual after snapping", kkt_res);
  return out;
}

SelectionOutcome solve_randomized_slope(const Dataset& data, const RandomizationSpec& rand,
                                        const Eigen::VectorXd& lam, Rng& rng,
                                        const SlopeOptions& opts) {
  return solve_randomized_slope(data, draw_randomization(rand, rng), lam, opts);
}

KktAffine slope_kkt(const Dataset& data, const SelectionOutcome& outcome,
                    const Eigen::VectorXd& lam, const TargetModel& target) {
  if (outcome.query_kind != QueryKind::slope)
    throw std::invalid_argument("slope_kkt: outcome is not from a slope query");
  (void)lam;  // weights enter through the observed subgradient
  const Eigen::Index p = data.p();
  const Eigen::Index num_clusters = static_cast<Eigen::Index>(outcome.clusters.size());

  KktAffine kkt;
  kkt.Q.resize(p, num_clusters);
  for (Eigen::Index k = 0; k < num_clusters; ++k) {
    Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(data.n());
    for (Eigen::Index j : outcome.clusters[k]) {
      const auto it = std::find(outcome.active.begin(), outcome.active.end(), j);
      const double z_j = outcome.signs(it - outcome.active.begin());
      col_sum += z_j * outcome.cluster_signs(k) * data.X.col(j);
    }
    kkt.Q.col(k) = data.X.transpose() * col_sum;
  }

  decompose_data_term(-data.X.transpose(), outcome.subgradient, data.y, target, data.sigma2,
                      kkt.P, kkt.r);

  // Sign rows, then adjacent-magnitude gap rows.
  kkt.U = Eigen::MatrixXd::Zero(2 * num_clusters - 1, num_clusters);
  for (Eigen::Index k = 0; k < num_clusters; ++k) kkt.U(k, k) = -outcome.cluster_signs(k);
  for (Eigen::Index k = 0; k + 1 < num_clusters; ++k) {
    kkt.U(num_clusters + k, k) = -outcome.cluster_signs(k);
    kkt.U(num_clusters + k, k + 1) = outcome.cluster_signs(k + 1);
  }
  kkt.v = Eigen::VectorXd::Zero(2 * num_clusters - 1);

  const double resid = kkt_residual(kkt, target.beta_hat, outcome.o1, outcome.omega);
  if (resid >= 1e-8)
    throw NumericalError("slope_kkt: reconstruction residual " + std::to_string(resid));
  return kkt;
}

KktAffine query_kkt(const Dataset& data, const SelectionOutcome& outcome,
                    const RandomizationSpec& rand, double lambda, double epsilon,
                    const Eigen::VectorXd& lam, double alpha, const TargetModel& target) {
  switch (outcome.query_kind) {
    case QueryKind::lasso:
      return lasso_kkt(data, outcome, lambda, epsilon, target);
    case QueryKind::screening:
      return ms_kkt(data, outcome, rand, alpha, target);
    case QueryKind::slope:
      return slope_kkt(data, outcome, lam, target);
  }
  throw std::logic_error("query_kkt: unknown query kind");
}

}  // namespace selinf
