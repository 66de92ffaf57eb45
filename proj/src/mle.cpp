#include "selinf/mle.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "selinf/errors.hpp"
#include "selinf/normal.hpp"
#include "selinf/quadrature.hpp"

namespace selinf {

namespace {

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& mat, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(mat);
  if (llt.info() == Eigen::Success) return llt;
  // Jitter once before giving up, as factorizations of nearly singular
  // conditioning geometries occasionally lose definiteness.
  const double jitter = 1e-10 * mat.trace() / static_cast<double>(mat.rows());
  Eigen::MatrixXd bumped = mat + jitter * Eigen::MatrixXd::Identity(mat.rows(), mat.cols());
  llt.compute(bumped);
  if (llt.info() == Eigen::Success) return llt;
  throw NumericalError(std::string(what) + ": matrix is not positive definite");
}

double quad_form(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& x) {
  return x.dot(llt.solve(x));
}

}  // namespace

ImpliedParams implied_params(const KktAffine& kkt, const Eigen::MatrixXd& Sigma_W) {
  const Eigen::Index m = kkt.Q.cols();
  Eigen::LLT<Eigen::MatrixXd> w_llt(Sigma_W);
  if (w_llt.info() != Eigen::Success)
    throw NumericalError("implied_params: Sigma_W is not positive definite");

  const Eigen::MatrixXd Wq = w_llt.solve(kkt.Q);  // Sigma_W^{-1} Q
  ImpliedParams ip;
  ip.precision = kkt.Q.transpose() * Wq;
  ip.precision = 0.5 * (ip.precision + ip.precision.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> prec_llt(ip.precision);
  if (prec_llt.info() != Eigen::Success)
    throw NumericalError("implied_params: Q is rank deficient");
  ip.Sigma_bar = prec_llt.solve(Eigen::MatrixXd::Identity(m, m));
  ip.A = -prec_llt.solve(Wq.transpose() * kkt.P);
  ip.b = -prec_llt.solve(Wq.transpose() * kkt.r);
  return ip;
}

Eigen::VectorXd solve_barrier(const ImpliedParams& ip, const Eigen::VectorXd& beta_hat,
                              const BarrierSpec& spec, const Eigen::VectorXd& init,
                              const BarrierSolveOptions& opts) {
  if (!spec.feasible(init)) throw std::domain_error("solve_barrier: init is not strictly feasible");
  const Eigen::VectorXd mu = ip.A * beta_hat + ip.b;

  Eigen::VectorXd o = init;
  auto objective = [&](const Eigen::VectorXd& x) {
    return 0.5 * (x - mu).dot(ip.precision * (x - mu)) + barrier_value(x, spec);
  };

  double obj = objective(o);
  for (int it = 0; it < opts.max_iter; ++it) {
    BarrierEval be = barrier_eval(o, spec);
    Eigen::VectorXd grad = ip.precision * (o - mu) + be.gradient;
    const double grad_norm = grad.cwiseAbs().maxCoeff();
    if (grad_norm < opts.tol) return o;

    Eigen::MatrixXd hess = ip.precision + be.hessian;
    Eigen::VectorXd direction = -spd_factor(hess, "solve_barrier").solve(grad);

    // Largest feasible step, backed off from the boundary.
    const Eigen::VectorXd slack = spec.v - spec.U * o;
    const Eigen::VectorXd du = spec.U * direction;
    double step = 1.0;
    for (Eigen::Index i = 0; i < du.size(); ++i)
      if (du(i) > 0.0) step = std::min(step, 0.99 * slack(i) / du(i));

    // Near-boundary optimizers (tiny constraint slack) make the gradient norm
    // unattainable in doubles; the affine-invariant Newton decrement still
    // certifies the remaining objective gap. One last capped step squashes the
    // residual to whatever the conditioning allows.
    const double decrement = std::sqrt(std::max(0.0, -grad.dot(direction)));
    if (decrement < opts.tol) {
      o += step * direction;
      return o;
    }

    if (grad_norm < 1e-5) {
      // Close to the optimum the objective decrease is below float resolution;
      // the feasibility-capped Newton step converges quadratically on its own.
      o += step * direction;
      obj = objective(o);
      continue;
    }
    const double slope = grad.dot(direction);
    double trial_obj = objective(o + step * direction);
    int backtracks = 0;
    while (trial_obj > obj + 1e-4 * step * slope && backtracks++ < 60) {
      step *= 0.5;
      trial_obj = objective(o + step * direction);
    }
    o += step * direction;
    obj = trial_obj;
  }

  BarrierEval be = barrier_eval(o, spec);
  const double resid = (ip.precision * (o - mu) + be.gradient).cwiseAbs().maxCoeff();
  if (resid < opts.tol) return o;
  throw SolverError("solve_barrier: Newton did not reach tolerance", resid);
}

Eigen::VectorXd selective_mle(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& Sigma_S,
                              const ImpliedParams& ip, const Eigen::VectorXd& o1_star) {
  return beta_hat +
         Sigma_S * (ip.A.transpose() * (ip.precision * (ip.A * beta_hat + ip.b - o1_star)));
}

namespace {

struct InnerSolution {
  Eigen::VectorXd beta_prime;
  Eigen::VectorXd o1;
  double value;  // joint objective at the minimizer
};

// Inner joint minimization of
//   0.5 (b' - breve)^T Sigma^{-1} (b' - breve)
// + 0.5 (o - A b' - b)^T Sigma_bar^{-1} (o - A b' - b) + B(o).
// The beta' block is an unconstrained quadratic, so it eliminates exactly: the
// problem collapses to a single barrier program whose Gaussian part carries
// the marginal covariance Sigma_bar + A Sigma_S A^T, and beta' reads back in
// closed form from the optimizer.
InnerSolution inner_joint_minimize(const Eigen::VectorXd& breve_beta,
                                   const Eigen::MatrixXd& Sigma_S, const ImpliedParams& ip,
                                   const BarrierSpec& spec, const Eigen::VectorXd& feasible_init,
                                   double tol) {
  Eigen::LLT<Eigen::MatrixXd> sigma_llt = spd_factor(Sigma_S, "inner_joint_minimize");
  const Eigen::Index d = breve_beta.size();
  const Eigen::Index m = ip.b.size();

  ImpliedParams reduced;
  reduced.Sigma_bar = ip.Sigma_bar + ip.A * Sigma_S * ip.A.transpose();
  reduced.Sigma_bar = 0.5 * (reduced.Sigma_bar + reduced.Sigma_bar.transpose()).eval();
  reduced.precision =
      spd_factor(reduced.Sigma_bar, "inner_joint_minimize").solve(Eigen::MatrixXd::Identity(m, m));
  reduced.A = ip.A;
  reduced.b = ip.b;

  BarrierSolveOptions opts;
  opts.tol = tol;
  InnerSolution sol;
  sol.o1 = solve_barrier(reduced, breve_beta, spec, feasible_init, opts);

  Eigen::MatrixXd beta_hess =
      sigma_llt.solve(Eigen::MatrixXd::Identity(d, d)) + ip.A.transpose() * ip.precision * ip.A;
  sol.beta_prime = spd_factor(beta_hess, "inner_joint_minimize")
                       .solve(sigma_llt.solve(breve_beta) +
                              ip.A.transpose() * (ip.precision * (sol.o1 - ip.b)));
  const Eigen::VectorXd mismatch = sol.o1 - ip.A * sol.beta_prime - ip.b;
  sol.value = 0.5 * quad_form(sigma_llt, sol.beta_prime - breve_beta) +
              0.5 * mismatch.dot(ip.precision * mismatch) + barrier_value(sol.o1, spec);
  return sol;
}

}  // namespace

double approx_loglik(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& breve_beta,
                     const Eigen::MatrixXd& Sigma_S, const ImpliedParams& ip,
                     const BarrierSpec& spec, const Eigen::VectorXd& feasible_init,
                     double inner_tol) {
  Eigen::LLT<Eigen::MatrixXd> sigma_llt = spd_factor(Sigma_S, "approx_loglik");
  InnerSolution inner =
      inner_joint_minimize(breve_beta, Sigma_S, ip, spec, feasible_init, inner_tol);
  return -0.5 * quad_form(sigma_llt, beta_hat - breve_beta) + inner.value;
}

Eigen::VectorXd grad_log_partition(const Eigen::VectorXd& eta, const Eigen::MatrixXd& Sigma_S,
                                   const ImpliedParams& ip, const BarrierSpec& spec,
                                   const Eigen::VectorXd& feasible_init, double inner_tol) {
  return inner_joint_minimize(Sigma_S * eta, Sigma_S, ip, spec, feasible_init, inner_tol)
      .beta_prime;
}

FisherInfo fisher_info(const ImpliedParams& ip, const Eigen::MatrixXd& Sigma_S,
                       const Eigen::VectorXd& o1_star, const BarrierSpec& spec) {
  const Eigen::Index d = Sigma_S.rows();
  BarrierEval be = barrier_eval(o1_star, spec);

  const Eigen::MatrixXd pa = ip.precision * ip.A;  // Sigma_bar^{-1} A
  Eigen::LLT<Eigen::MatrixXd> mid_llt = spd_factor(ip.precision + be.hessian, "fisher_info");
  Eigen::LLT<Eigen::MatrixXd> sigma_llt = spd_factor(Sigma_S, "fisher_info");

  Eigen::MatrixXd core = sigma_llt.solve(Eigen::MatrixXd::Identity(d, d)) +
                         ip.A.transpose() * pa - pa.transpose() * mid_llt.solve(pa);
  core = 0.5 * (core + core.transpose()).eval();

  FisherInfo fi;
  fi.info_inverse = Sigma_S * core * Sigma_S;
  fi.info_inverse = 0.5 * (fi.info_inverse + fi.info_inverse.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> inv_llt = spd_factor(fi.info_inverse, "fisher_info");
  fi.info = inv_llt.solve(Eigen::MatrixXd::Identity(d, d));
  return fi;
}

MleResult MleResult::empty_result(double level) {
  MleResult res;
  res.level = level;
  res.empty = true;
  return res;
}

MleResult infer(const TargetModel& target, const KktAffine& kkt, const Eigen::MatrixXd& Sigma_W,
                const BarrierSpec& spec, const Eigen::VectorXd& o1_obs, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("infer: q must lie in (0,1)");
  ImpliedParams ip = implied_params(kkt, Sigma_W);
  Eigen::VectorXd o1_star = solve_barrier(ip, target.beta_hat, spec, o1_obs);
  FisherInfo fi = fisher_info(ip, target.Sigma_S, o1_star, spec);

  MleResult res;
  res.mle = selective_mle(target.beta_hat, target.Sigma_S, ip, o1_star);
  res.info_inverse = fi.info_inverse;
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

MvMseBoundReport mse_bound_check_mv(const ImpliedParams& ip, const Eigen::MatrixXd& Sigma_S,
                                    const BarrierSpec& spec, const Eigen::VectorXd& breve_beta,
                                    const Eigen::VectorXd& feasible_init, std::size_t reps,
                                    Rng& rng, std::size_t max_proposals) {
  if (reps < 1000) throw std::domain_error("mse_bound_check_mv: reps must be at least 1000");
  const Eigen::Index d = breve_beta.size(), m = ip.b.size();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> prec_eigs(ip.A.transpose() * ip.precision * ip.A +
                                                           spd_factor(Sigma_S, "mse_bound_check_mv")
                                                               .solve(Eigen::MatrixXd::Identity(d, d)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sigma_eigs(Sigma_S);
  const double eta0 = 1.0 / prec_eigs.eigenvalues().maxCoeff();
  const double eta1 = 1.0 / sigma_eigs.eigenvalues().maxCoeff();
  const double b_const = (eta0 * eta1) * (eta0 * eta1);

  const Eigen::VectorXd grad_alpha_at_breve =
      grad_log_partition(spd_factor(Sigma_S, "mse_bound_check_mv").solve(breve_beta), Sigma_S, ip,
                         spec, feasible_init);

  Eigen::MatrixXd sigma_chol = spd_factor(Sigma_S, "mse_bound_check_mv").matrixL();
  Eigen::MatrixXd bar_chol = spd_factor(ip.Sigma_bar, "mse_bound_check_mv").matrixL();

  std::vector<double> gap(reps);
  double mse_sum = 0.0, rhs_sum = 0.0;
  std::size_t accepted = 0, proposals = 0;
  BarrierSolveOptions solve_opts;
  while (accepted < reps) {
    if (++proposals > max_proposals)
      throw EmptySelectionError("mse_bound_check_mv: proposal budget exhausted");
    Eigen::VectorXd beta_draw = breve_beta + sigma_chol * rng.normal_vector(d);
    Eigen::VectorXd o_draw = ip.A * beta_draw + ip.b + bar_chol * rng.normal_vector(m);
    if (!spec.feasible(o_draw)) continue;

    Eigen::VectorXd o_star = solve_barrier(ip, beta_draw, spec, o_draw, solve_opts);
    Eigen::VectorXd mle = selective_mle(beta_draw, Sigma_S, ip, o_star);
    const double sq_err = (mle - breve_beta).squaredNorm();
    const double rhs = (beta_draw - grad_alpha_at_breve).squaredNorm();
    gap[accepted] = sq_err - rhs / b_const;
    mse_sum += sq_err;
    rhs_sum += rhs;
    ++accepted;
  }

  const double n = static_cast<double>(reps);
  const double mean_gap = (mse_sum - rhs_sum / b_const) / n;
  double var_gap = 0.0;
  for (double g : gap) var_gap += (g - mean_gap) * (g - mean_gap);
  var_gap /= (n - 1.0);
  const double se = std::sqrt(var_gap / n);

  MvMseBoundReport report;
  report.mse = mse_sum / n;
  report.bound = rhs_sum / (n * b_const);
  report.mc_se = se;
  report.accepted = accepted;
  report.proposals = proposals;
  report.holds = mean_gap <= 3.0 * se;
  return report;
}

// ---------------------------------------------------------------------------
// Exact small-dimension oracle (Theorem 1 by quadrature)
// ---------------------------------------------------------------------------

namespace {

// Probability of {U o < v} under N(mu, Sigma_bar) for m <= 2, by adaptive
// quadrature in the outer coordinate and a conditional-normal interval inside.
double region_probability(const Eigen::VectorXd& mu, const Eigen::MatrixXd& Sigma_bar,
                          const Eigen::MatrixXd& U, const Eigen::VectorXd& v) {
  const Eigen::Index m = mu.size();
  if (m == 1) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      const double coef = U(i, 0);
      if (coef > 0.0) hi = std::min(hi, v(i) / coef);
      else if (coef < 0.0) lo = std::max(lo, v(i) / coef);
      else if (v(i) <= 0.0) return 0.0;
    }
    if (!(lo < hi)) return 0.0;
    const double sd = std::sqrt(Sigma_bar(0, 0));
    const double a = std::max(lo, mu(0) - 10.0 * sd), b = std::min(hi, mu(0) + 10.0 * sd);
    if (!(a < b)) {
      // Mass sits entirely on one side of the window.
      return norm_cdf((hi - mu(0)) / sd) - norm_cdf((lo - mu(0)) / sd);
    }
    return integrate_gk(
        [&](double o) { return norm_pdf((o - mu(0)) / sd) / sd; }, a, b, 1e-10, 1e-14);
  }
  if (m == 2) {
    const double s1 = std::sqrt(Sigma_bar(0, 0));
    const double slope = Sigma_bar(1, 0) / Sigma_bar(0, 0);
    const double cond_var = Sigma_bar(1, 1) - Sigma_bar(1, 0) * Sigma_bar(1, 0) / Sigma_bar(0, 0);
    const double cond_sd = std::sqrt(std::max(cond_var, 1e-300));
    auto slice = [&](double o1) {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < U.rows(); ++i) {
        const double c1 = U(i, 0), c2 = U(i, 1), rhs = v(i) - c1 * o1;
        if (c2 > 0.0) hi = std::min(hi, rhs / c2);
        else if (c2 < 0.0) lo = std::max(lo, rhs / c2);
        else if (rhs <= 0.0) return 0.0;
      }
      if (!(lo < hi)) return 0.0;
      const double cond_mean = mu(1) + slope * (o1 - mu(0));
      const double inner =
          norm_cdf((hi - cond_mean) / cond_sd) - norm_cdf((lo - cond_mean) / cond_sd);
      return inner * norm_pdf((o1 - mu(0)) / s1) / s1;
    };
    return integrate_gk(slice, mu(0) - 10.0 * s1, mu(0) + 10.0 * s1, 1e-9, 1e-14);
  }
  throw std::domain_error("region_probability: only m <= 2 supported");
}

}  // namespace

double selection_probability(const Eigen::VectorXd& beta_hat, const ImpliedParams& ip,
                             const KktAffine& kkt) {
  return region_probability(ip.A * beta_hat + ip.b, ip.Sigma_bar, kkt.U, kkt.v);
}

Eigen::VectorXd exact_small_dim_mle(const TargetModel& target, const KktAffine& kkt,
                                    const Eigen::MatrixXd& Sigma_W) {
  const Eigen::Index d = target.dim();
  ImpliedParams ip = implied_params(kkt, Sigma_W);
  if (d > 2 || ip.b.size() > 2)
    throw std::domain_error("exact_small_dim_mle: supports d <= 2 and |E| <= 2 only");

  auto soft_trunc = [&](const Eigen::VectorXd& m) {
    return region_probability(ip.A * m + ip.b, ip.Sigma_bar, kkt.U, kkt.v);
  };

  if (d == 1) {
    const double sd = std::sqrt(target.Sigma_S(0, 0));
    const double y = target.beta_hat(0);
    // Score: (y - E[m | breve]) / Sigma with E under the tilted density
    // exp(-(m-breve)^2 / 2 Sigma) f(m); monotone in breve.
    auto tilted_mean = [&](double breve) {
      const double a = breve - 10.0 * sd, b = breve + 10.0 * sd;
      auto weight = [&](double m) {
        const double zscore = (m - breve) / sd;
        Eigen::VectorXd mv(1);
        mv << m;
        return std::exp(-0.5 * zscore * zscore) * soft_trunc(mv);
      };
      const double z0 = integrate_gk(weight, a, b, 1e-9, 1e-300);
      const double z1 = integrate_gk([&](double m) { return m * weight(m); }, a, b, 1e-9, 1e-300);
      return z1 / z0;
    };
    double lo = y - 15.0 * sd, hi = y + 15.0 * sd;
    double flo = tilted_mean(lo) - y, fhi = tilted_mean(hi) - y;
    int guard = 0;
    while (flo > 0.0 && guard++ < 30) {
      lo -= 10.0 * sd;
      flo = tilted_mean(lo) - y;
    }
    while (fhi < 0.0 && guard++ < 30) {
      hi += 10.0 * sd;
      fhi = tilted_mean(hi) - y;
    }
    if (flo > 0.0 || fhi < 0.0)
      throw NumericalError("exact_small_dim_mle: failed to bracket the score root");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if ((tilted_mean(mid) - y) > 0.0) hi = mid;
      else lo = mid;
      if (hi - lo < 1e-9 * sd) break;
    }
    Eigen::VectorXd result(1);
    result << 0.5 * (lo + hi);
    return result;
  }

  // d == 2: Newton on the score Sigma^{-1}(beta_hat - E[m | breve]) with a
  // finite-difference Jacobian of the tilted mean.
  Eigen::LLT<Eigen::MatrixXd> sigma_llt = spd_factor(target.Sigma_S, "exact_small_dim_mle");
  const double sd0 = std::sqrt(target.Sigma_S(0, 0)), sd1 = std::sqrt(target.Sigma_S(1, 1));
  auto tilted_mean2 = [&](const Eigen::VectorXd& breve) {
    auto density = [&](double m0, double m1) {
      Eigen::VectorXd m(2);
      m << m0, m1;
      return std::exp(-0.5 * quad_form(sigma_llt, m - breve)) * soft_trunc(m);
    };
    auto inner = [&](double m0, int which) {
      return integrate_gk(
          [&](double m1) {
            const double w = density(m0, m1);
            return which == 2 ? m1 * w : w;
          },
          breve(1) - 8.0 * sd1, breve(1) + 8.0 * sd1, 1e-7, 1e-300, 24);
    };
    const double z0 =
        integrate_gk([&](double m0) { return inner(m0, 0); }, breve(0) - 8.0 * sd0,
                     breve(0) + 8.0 * sd0, 1e-7, 1e-300, 24);
    const double z1 =
        integrate_gk([&](double m0) { return m0 * inner(m0, 0); }, breve(0) - 8.0 * sd0,
                     breve(0) + 8.0 * sd0, 1e-7, 1e-300, 24);
    const double z2 =
        integrate_gk([&](double m0) { return inner(m0, 2); }, breve(0) - 8.0 * sd0,
                     breve(0) + 8.0 * sd0, 1e-7, 1e-300, 24);
    Eigen::VectorXd mean(2);
    mean << z1 / z0, z2 / z0;
    return mean;
  };

  Eigen::VectorXd breve = target.beta_hat;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd residual = tilted_mean2(breve) - target.beta_hat;
    if (residual.cwiseAbs().maxCoeff() < 1e-7 * std::min(sd0, sd1)) break;
    Eigen::MatrixXd jac(2, 2);
    const double h0 = 1e-4 * sd0, h1 = 1e-4 * sd1;
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXd shifted = breve;
      const double h = c == 0 ? h0 : h1;
      shifted(c) += h;
      jac.col(c) = (tilted_mean2(shifted) - residual - target.beta_hat) / h;
    }
    Eigen::VectorXd step = jac.colPivHouseholderQr().solve(residual);
    // Damped update; the tilted mean is monotone so modest steps suffice.
    double scale = 1.0;
    if (step.cwiseAbs().maxCoeff() > 3.0 * std::max(sd0, sd1))
      scale = 3.0 * std::max(sd0, sd1) / step.cwiseAbs().maxCoeff();
    breve -= scale * step;
  }
  return breve;
}

}  // namespace selinf
