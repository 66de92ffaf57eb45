#include "selinf/simulation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

#include "selinf/errors.hpp"
#include "selinf/mle.hpp"
#include "selinf/multi.hpp"
#include "selinf/normal.hpp"
#include "selinf/queries.hpp"

namespace selinf {

Eigen::MatrixXd gen_design(Eigen::Index n, Eigen::Index p, double rho, Rng& rng) {
  if (!(std::abs(rho) < 1.0)) throw std::domain_error("gen_design: |rho| must be below 1");
  Eigen::MatrixXd X(n, p);
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prev = rng.normal();
    X(i, 0) = prev;
    for (Eigen::Index j = 1; j < p; ++j) {
      prev = rho * prev + innovation * rng.normal();
      X(i, j) = prev;
    }
  }
  return X;
}

Eigen::MatrixXd ar1_covariance(Eigen::Index p, double rho) {
  Eigen::MatrixXd Sigma(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) Sigma(i, j) = std::pow(rho, std::abs(double(i - j)));
  return Sigma;
}

namespace {
Eigen::VectorXd spaced_signal(Eigen::Index p, const std::vector<double>& amplitudes) {
  const Eigen::Index s = static_cast<Eigen::Index>(amplitudes.size());
  if (p < s) throw std::domain_error("signal: p must be at least the sparsity");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index k = 0; k < s; ++k) {
    const Eigen::Index pos =
        s == 1 ? 0 : static_cast<Eigen::Index>(std::llround(double(k) * double(p - 1) / double(s - 1)));
    beta(pos) = amplitudes[static_cast<std::size_t>(k)];
  }
  return beta;
}
}  // namespace

Eigen::VectorXd beta_type4(Eigen::Index p) {
  return spaced_signal(p, {-10.0, -6.0, -2.0, 2.0, 6.0, 10.0});
}

Eigen::VectorXd flat_signal(Eigen::Index p, Eigen::Index s, double amplitude) {
  return spaced_signal(p, std::vector<double>(static_cast<std::size_t>(s), amplitude));
}

double snr_to_sigma2(const Eigen::VectorXd& beta, const Eigen::MatrixXd& Sigma, double snr) {
  if (!(snr > 0.0)) throw std::domain_error("snr_to_sigma2: snr must be positive");
  return beta.dot(Sigma * beta) / snr;
}

double lambda_theory(const Eigen::MatrixXd& X, double sigma2, int draws, Rng& rng) {
  if (draws < 1) throw std::domain_error("lambda_theory: draws must be positive");
  const double sigma = std::sqrt(sigma2);
  double acc = 0.0;
  for (int k = 0; k < draws; ++k) {
    Eigen::VectorXd psi = sigma * rng.normal_vector(X.rows());
    acc += (X.transpose() * psi).cwiseAbs().maxCoeff();
  }
  return acc / draws;
}

namespace {

// Canonical (non-randomized, ridge-free) lasso by coordinate descent along a
// descending lambda path with warm starts; used only for cross validation.
class LassoPath {
 public:
  LassoPath(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) : X_(X), y_(y) {
    col_sq_ = X.colwise().squaredNorm();
    coef_ = Eigen::VectorXd::Zero(X.cols());
    resid_ = y;
  }

  const Eigen::VectorXd& fit(double lambda) {
    for (int sweep = 0; sweep < 10'000; ++sweep) {
      double max_update = 0.0;
      for (Eigen::Index j = 0; j < X_.cols(); ++j) {
        if (col_sq_(j) <= 0.0) continue;
        const double cj = X_.col(j).dot(resid_) + col_sq_(j) * coef_(j);
        double updated = 0.0;
        if (cj > lambda) updated = (cj - lambda) / col_sq_(j);
        else if (cj < -lambda) updated = (cj + lambda) / col_sq_(j);
        const double delta = updated - coef_(j);
        if (delta != 0.0) {
          resid_ -= delta * X_.col(j);
          coef_(j) = updated;
        }
        max_update = std::max(max_update, std::abs(delta));
      }
      if (max_update < 1e-9) break;
    }
    return coef_;
  }

 private:
  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  Eigen::VectorXd col_sq_, coef_, resid_;
};

}  // namespace

CvLambda cross_validate_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int folds,
                               Rng& rng) {
  if (folds < 2) throw std::domain_error("cross_validate_lambda: folds must be at least 2");
  const Eigen::Index n = X.rows();
  const int grid_size = 100;
  const double lam_max = (X.transpose() * y).cwiseAbs().maxCoeff();
  std::vector<double> grid(grid_size);
  for (int g = 0; g < grid_size; ++g)
    grid[g] = lam_max * std::pow(10.0, -4.0 * g / (grid_size - 1));

  // Deterministic shuffled round-robin fold assignment.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
  std::vector<int> fold_of(n);
  for (Eigen::Index i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % folds);

  Eigen::MatrixXd fold_mse = Eigen::MatrixXd::Zero(folds, grid_size);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);
    Eigen::MatrixXd Xtr(train.size(), X.cols()), Xte(test.size(), X.cols());
    Eigen::VectorXd ytr(train.size()), yte(test.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      Xtr.row(i) = X.row(train[i]);
      ytr(i) = y(train[i]);
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
      Xte.row(i) = X.row(test[i]);
      yte(i) = y(test[i]);
    }
    LassoPath path(Xtr, ytr);
    for (int g = 0; g < grid_size; ++g) {
      const Eigen::VectorXd& coef = path.fit(grid[g]);
      fold_mse(f, g) = (yte - Xte * coef).squaredNorm() / static_cast<double>(test.size());
    }
  }

  Eigen::VectorXd cv = fold_mse.colwise().mean();
  int best = 0;
  for (int g = 1; g < grid_size; ++g)
    if (cv(g) < cv(best)) best = g;
  double se = 0.0;
  for (int f = 0; f < folds; ++f) se += std::pow(fold_mse(f, best) - cv(best), 2.0);
  se = std::sqrt(se / (folds - 1.0) / folds);

  int one_se = best;
  for (int g = 0; g <= best; ++g) {
    if (cv(g) <= cv(best) + se) {
      one_se = g;  // grid is descending, so the first hit is the largest lambda
      break;
    }
  }
  return {grid[best], grid[one_se]};
}

double relative_risk(const Eigen::VectorXd& estimate, const Eigen::VectorXd& beta,
                     const Eigen::MatrixXd& Sigma) {
  const Eigen::VectorXd diff = estimate - beta;
  return diff.dot(Sigma * diff) / beta.dot(Sigma * beta);
}

namespace {

Eigen::VectorXd pad_active(const std::vector<Eigen::Index>& active, const Eigen::VectorXd& values,
                           Eigen::Index p) {
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k < active.size(); ++k) padded(active[k]) = values(k);
  return padded;
}

Eigen::VectorXd slope_padded_solution(const SelectionOutcome& outcome, Eigen::Index p) {
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k < outcome.clusters.size(); ++k) {
    const double mag = std::abs(outcome.o1(static_cast<Eigen::Index>(k)));
    for (Eigen::Index j : outcome.clusters[k]) {
      const auto it = std::find(outcome.active.begin(), outcome.active.end(), j);
      padded(j) = outcome.signs(it - outcome.active.begin()) * mag;
    }
  }
  return padded;
}

struct IntervalStats {
  double coverage_mle, coverage_naive, length_mle, length_naive;
  int detected_true, detected_false, screened_true;
};

IntervalStats interval_stats(const MleResult& res, const TargetModel& target,
                             const Eigen::VectorXd& estimand,
                             const std::vector<char>& is_true_signal, double q) {
  const Eigen::Index d = res.mle.size();
  const double z = norm_quantile(1.0 - q / 2.0);
  IntervalStats stats{0.0, 0.0, 0.0, 0.0, 0, 0, 0};
  for (Eigen::Index j = 0; j < d; ++j) {
    const bool covered = res.lower(j) <= estimand(j) && estimand(j) <= res.upper(j);
    stats.coverage_mle += covered ? 1.0 : 0.0;
    stats.length_mle += res.upper(j) - res.lower(j);

    const double naive_sd = std::sqrt(target.Sigma_S(j, j));
    const double nl = target.beta_hat(j) - z * naive_sd, nu = target.beta_hat(j) + z * naive_sd;
    stats.coverage_naive += (nl <= estimand(j) && estimand(j) <= nu) ? 1.0 : 0.0;
    stats.length_naive += nu - nl;

    const bool detected = res.lower(j) > 0.0 || res.upper(j) < 0.0;
    if (is_true_signal[static_cast<std::size_t>(j)]) {
      ++stats.screened_true;
      if (detected) ++stats.detected_true;
    } else if (detected) {
      ++stats.detected_false;
    }
  }
  stats.coverage_mle /= d;
  stats.coverage_naive /= d;
  stats.length_mle /= d;
  stats.length_naive /= d;
  return stats;
}

}  // namespace

ReplicationSummary run_replication(const ExperimentConfig& config, double snr, Rng& rng) {
  const Eigen::Index n = config.n, p = config.p;
  const Eigen::MatrixXd Sigma_pop = ar1_covariance(p, config.rho);
  const Eigen::VectorXd beta_true = config.signal == SignalType::type4
                                        ? beta_type4(p)
                                        : flat_signal(p, config.flat_s, config.flat_amplitude);
  const double sigma2_true = snr_to_sigma2(beta_true, Sigma_pop, snr);

  Eigen::MatrixXd X = gen_design(n, p, config.rho, rng);
  Eigen::VectorXd y = X * beta_true + std::sqrt(sigma2_true) * rng.normal_vector(n);

  Dataset data{X, y, 0.0};
  data.sigma2 = n > p ? estimate_sigma2(X, y) : sigma2_true;

  double lambda = config.lambda_fixed;
  switch (config.lambda_scheme) {
    case LambdaScheme::theory:
      lambda = lambda_theory(X, data.sigma2, 500, rng);
      break;
    case LambdaScheme::cv_min:
      lambda = cross_validate_lambda(X, y, config.cv_folds, rng).cv_min;
      break;
    case LambdaScheme::cv_1se:
      lambda = cross_validate_lambda(X, y, config.cv_folds, rng).cv_1se;
      break;
    case LambdaScheme::fixed:
      break;
  }

  const double eta2 = config.rand_ratio * data.sigma2;
  const double epsilon = 1.0 / std::sqrt(static_cast<double>(n));
  ReplicationSummary rep;

  try {
    TargetModel target;
    MleResult res;
    std::vector<Eigen::Index> selected;
    Eigen::VectorXd query_estimate;

    if (config.method == MethodTag::lasso) {
      RandomizationSpec rand = RandomizationSpec::isotropic(eta2, p);
      SelectionOutcome outcome = solve_randomized_lasso(data, rand, lambda, epsilon, rng);
      target = build_target(data, outcome.active, config.target_kind);
      KktAffine kkt = lasso_kkt(data, outcome, lambda, epsilon, target);
      res = infer(target, kkt, rand.Sigma_W, BarrierSpec::sign_only(outcome.signs), outcome.o1,
                  config.level_q);
      selected = outcome.active;
      query_estimate = pad_active(outcome.active, outcome.o1, p);
    } else if (config.method == MethodTag::lasso2) {
      RandomizationSpec rand = RandomizationSpec::isotropic(eta2, p);
      SelectionOutcome first = solve_randomized_lasso(data, rand, lambda, epsilon, rng);
      SelectionOutcome second = solve_randomized_lasso(data, rand, lambda, epsilon, rng);
      target = union_target(data, {first, second});
      MultiQuerySetup setup;
      setup.target = target;
      for (const SelectionOutcome* outcome : {&first, &second}) {
        QueryEntry entry;
        entry.kkt = lasso_kkt(data, *outcome, lambda, epsilon, target);
        entry.barrier = BarrierSpec::sign_only(outcome->signs);
        entry.Sigma_W = rand.Sigma_W;
        entry.o1_obs = outcome->o1;
        setup.queries.push_back(std::move(entry));
      }
      res = multi_infer(setup, config.level_q);
      std::set<Eigen::Index> merged(first.active.begin(), first.active.end());
      merged.insert(second.active.begin(), second.active.end());
      selected.assign(merged.begin(), merged.end());
      query_estimate = pad_active(first.active, first.o1, p);
    } else {
      RandomizationSpec rand1 = RandomizationSpec::isotropic(eta2, p);
      MsSlopeOptions ms_opts;
      ms_opts.alpha = config.ms_alpha;
      ms_opts.lam_scale = config.slope_lam_scale;
      MsSlopePipeline pipe = ms_then_slope_pipeline(data, rand1, eta2, ms_opts, rng);
      target = pipe.setup.target;
      res = multi_infer(pipe.setup, config.level_q);
      selected = pipe.selected;
      // slope solution is indexed by the screened design; map back to 1..p
      Eigen::VectorXd stage2_padded = slope_padded_solution(pipe.slope, pipe.stage2.p());
      query_estimate = Eigen::VectorXd::Zero(p);
      for (Eigen::Index k = 0; k < pipe.stage2.p(); ++k)
        query_estimate(pipe.screening.active[k]) = stage2_padded(k);
    }

    const Eigen::VectorXd estimand = target.L * (X * beta_true);
    std::vector<char> is_true(selected.size());
    for (std::size_t k = 0; k < selected.size(); ++k)
      is_true[k] = beta_true(selected[k]) != 0.0;

    IntervalStats stats = interval_stats(res, target, estimand, is_true, config.level_q);
    rep.empty = false;
    rep.selected = static_cast<int>(selected.size());
    rep.screened_true = stats.screened_true;
    rep.detected_true = stats.detected_true;
    rep.detected_false = stats.detected_false;
    rep.coverage_mle = stats.coverage_mle;
    rep.coverage_naive = stats.coverage_naive;
    rep.length_mle = stats.length_mle;
    rep.length_naive = stats.length_naive;

    Eigen::VectorXd mle_padded = Eigen::VectorXd::Zero(p);
    for (std::size_t k = 0; k < selected.size(); ++k) mle_padded(selected[k]) = res.mle(k);
    rep.risk_mle = relative_risk(mle_padded, beta_true, Sigma_pop);
    rep.risk_query = relative_risk(query_estimate, beta_true, Sigma_pop);
  } catch (const EmptySelectionError&) {
    rep.empty = true;
  }
  return rep;
}

namespace {
int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SELINF_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

Summary run_experiment(const ExperimentConfig& config) {
  Summary summary;
  summary.config = config;
  const int threads = resolve_threads(config.threads);

  for (std::size_t cell_idx = 0; cell_idx < config.snr_grid.size(); ++cell_idx) {
    const double snr = config.snr_grid[cell_idx];
    std::vector<ReplicationSummary> reps(config.reps);
    std::atomic<int> next_rep{0};
    auto worker = [&]() {
      for (;;) {
        const int r = next_rep.fetch_add(1);
        if (r >= config.reps) break;
        Rng rng = Rng::stream(config.seed,
                              (static_cast<std::uint64_t>(cell_idx) << 32) |
                                  static_cast<std::uint64_t>(r));
        reps[r] = run_replication(config, snr, rng);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    CellSummary cell;
    cell.snr = snr;
    cell.reps = config.reps;
    double cov_mle = 0, cov_naive = 0, len_mle = 0, len_naive = 0, risk_mle = 0, risk_query = 0,
           selected = 0;
    long detected_true = 0, detected_false = 0, screened_true = 0, detections = 0;
    int valid = 0;
    for (const auto& rep : reps) {
      if (rep.empty) {
        ++cell.empty_reps;
        continue;
      }
      ++valid;
      cov_mle += rep.coverage_mle;
      cov_naive += rep.coverage_naive;
      len_mle += rep.length_mle;
      len_naive += rep.length_naive;
      risk_mle += rep.risk_mle;
      risk_query += rep.risk_query;
      selected += rep.selected;
      detected_true += rep.detected_true;
      detected_false += rep.detected_false;
      screened_true += rep.screened_true;
      detections += rep.detected_true + rep.detected_false;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.coverage_mle = valid ? cov_mle / valid : nan;
    cell.coverage_naive = valid ? cov_naive / valid : nan;
    cell.length_mle = valid ? len_mle / valid : nan;
    cell.length_naive = valid ? len_naive / valid : nan;
    cell.power = screened_true ? double(detected_true) / double(screened_true) : nan;
    cell.fdp = detections ? double(detected_false) / double(detections) : nan;
    cell.risk_mle = valid ? risk_mle / valid : nan;
    cell.risk_query = valid ? risk_query / valid : nan;
    cell.mean_selected = valid ? selected / valid : nan;
    summary.cells.push_back(cell);
  }
  return summary;
}

const char* to_string(SignalType s) { return s == SignalType::type4 ? "type4" : "flat"; }
const char* to_string(LambdaScheme s) {
  switch (s) {
    case LambdaScheme::theory: return "theory";
    case LambdaScheme::cv_min: return "cv.min";
    case LambdaScheme::cv_1se: return "cv.1se";
    case LambdaScheme::fixed: return "fixed";
  }
  return "?";
}
const char* to_string(MethodTag m) {
  switch (m) {
    case MethodTag::lasso: return "lasso";
    case MethodTag::lasso2: return "lasso2";
    case MethodTag::ms_slope: return "ms-slope";
  }
  return "?";
}
const char* to_string(TargetKind k) { return k == TargetKind::partial ? "partial" : "full"; }

}  // namespace selinf
