#include "selinf.h"

#include <cmath>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "selinf/errors.hpp"
#include "selinf/multi.hpp"
#include "selinf/queries.hpp"
#include "selinf/report.hpp"
#include "selinf/simulation.hpp"

struct selinf_result {
  std::string json;
  std::string csv;
  bool has_csv = false;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return SELINF_OK;
  } catch (const selinf::EmptySelectionError& err) {
    return fail(SELINF_ERR_EMPTY_SELECTION, err.what());
  } catch (const selinf::SolverError& err) {
    return fail(SELINF_ERR_SOLVER, err.what());
  } catch (const selinf::NumericalError& err) {
    return fail(SELINF_ERR_NUMERIC, err.what());
  } catch (const std::domain_error& err) {
    return fail(SELINF_ERR_INVALID, err.what());
  } catch (const std::invalid_argument& err) {
    return fail(SELINF_ERR_INVALID, err.what());
  } catch (const std::exception& err) {
    return fail(SELINF_ERR_INTERNAL, err.what());
  }
}

using namespace selinf;

InferReport run_infer(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<std::string>& names, const selinf_infer_options& opts) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const std::string query = opts.query ? opts.query : "lasso";
  const std::string lambda_scheme = opts.lambda ? opts.lambda : "theory";
  const std::string target_name = opts.target ? opts.target : "partial";
  if (!(opts.level > 0.0 && opts.level < 1.0))
    throw std::domain_error("infer: level must lie in (0,1)");
  const double q = 1.0 - opts.level;

  Dataset data{X, y, opts.sigma2};
  if (!(data.sigma2 > 0.0)) {
    if (n <= p) throw std::domain_error("infer: sigma2 must be supplied when n <= p");
    data.sigma2 = estimate_sigma2(X, y);
  }
  TargetKind kind;
  if (target_name == "partial") kind = TargetKind::partial;
  else if (target_name == "full") kind = TargetKind::full;
  else throw std::invalid_argument("infer: unknown target " + target_name);
  if (kind == TargetKind::full && n <= p)
    throw std::domain_error("infer: full target requires n > p");

  Rng rng(opts.seed);
  const double eta2 = opts.rand_ratio * data.sigma2;
  if (!(eta2 > 0.0)) throw std::domain_error("infer: rand_ratio must be positive");
  const double epsilon = 1.0 / std::sqrt(static_cast<double>(n));

  double lambda_value = 0.0;
  auto resolve_lambda = [&]() {
    if (lambda_scheme == "theory") return lambda_theory(X, data.sigma2, 500, rng);
    if (lambda_scheme == "cv.min") return cross_validate_lambda(X, y, 10, rng).cv_min;
    if (lambda_scheme == "cv.1se") return cross_validate_lambda(X, y, 10, rng).cv_1se;
    try {
      std::size_t used = 0;
      const double parsed = std::stod(lambda_scheme, &used);
      if (used != lambda_scheme.size() || !(parsed > 0.0)) throw std::invalid_argument("");
      return parsed;
    } catch (...) {
      throw std::invalid_argument("infer: unknown lambda scheme " + lambda_scheme);
    }
  };

  InferReport report;
  report.query = query;
  report.lambda_scheme = lambda_scheme;
  report.rand_ratio = opts.rand_ratio;
  report.eta2 = eta2;
  report.sigma2 = data.sigma2;
  report.level_q = q;
  report.target = target_name;
  report.seed = opts.seed;
  report.standardized = opts.standardize != 0;
  report.n = n;
  report.p = p;

  std::vector<Eigen::Index> selected;
  if (query == "lasso") {
    lambda_value = resolve_lambda();
    RandomizationSpec rand = RandomizationSpec::isotropic(eta2, p);
    SelectionOutcome outcome = solve_randomized_lasso(data, rand, lambda_value, epsilon, rng);
    TargetModel target = build_target(data, outcome.active, kind);
    KktAffine kkt = lasso_kkt(data, outcome, lambda_value, epsilon, target);
    report.result =
        infer(target, kkt, rand.Sigma_W, BarrierSpec::sign_only(outcome.signs), outcome.o1, q);
    selected = outcome.active;
  } else if (query == "screening") {
    RandomizationSpec rand = RandomizationSpec::isotropic(eta2, p);
    SelectionOutcome outcome = solve_marginal_screening(data, rand, opts.ms_alpha, rng);
    TargetModel target = build_target(data, outcome.active, kind);
    KktAffine kkt = ms_kkt(data, outcome, rand, opts.ms_alpha, target);
    report.result =
        infer(target, kkt, rand.Sigma_W, BarrierSpec::sign_only(outcome.signs), outcome.o1, q);
    selected = outcome.active;
  } else if (query == "slope") {
    lambda_value = resolve_lambda();
    Eigen::VectorXd lam = slope_lambda_ramp(opts.slope_lam_scale * lambda_value, p);
    RandomizationSpec rand = RandomizationSpec::isotropic(eta2, p);
    SelectionOutcome outcome = solve_randomized_slope(data, rand, lam, rng);
    TargetModel target = build_target(data, outcome.active, kind);
    KktAffine kkt = slope_kkt(data, outcome, lam, target);
    report.result = infer(target, kkt, rand.Sigma_W, BarrierSpec::affine(kkt.U, kkt.v),
                          outcome.o1, q);
    selected = outcome.active;
  } else if (query == "lasso2") {
    lambda_value = resolve_lambda();
    RandomizationSpec rand = RandomizationSpec::isotropic(eta2, p);
    SelectionOutcome first = solve_randomized_lasso(data, rand, lambda_value, epsilon, rng);
    SelectionOutcome second = solve_randomized_lasso(data, rand, lambda_value, epsilon, rng);
    if (kind != TargetKind::partial)
      throw std::domain_error("infer: lasso2 supports the partial target only");
    MultiQuerySetup setup;
    setup.target = union_target(data, {first, second});
    for (const SelectionOutcome* outcome : {&first, &second}) {
      QueryEntry entry;
      entry.kkt = lasso_kkt(data, *outcome, lambda_value, epsilon, setup.target);
      entry.barrier = BarrierSpec::sign_only(outcome->signs);
      entry.Sigma_W = rand.Sigma_W;
      entry.o1_obs = outcome->o1;
      setup.queries.push_back(std::move(entry));
    }
    report.result = multi_infer(setup, q);
    std::set<Eigen::Index> merged(first.active.begin(), first.active.end());
    merged.insert(second.active.begin(), second.active.end());
    selected.assign(merged.begin(), merged.end());
  } else if (query == "ms-slope") {
    if (kind != TargetKind::partial)
      throw std::domain_error("infer: ms-slope supports the partial target only");
    RandomizationSpec rand = RandomizationSpec::isotropic(eta2, p);
    MsSlopeOptions ms_opts;
    ms_opts.alpha = opts.ms_alpha;
    ms_opts.lam_scale = opts.slope_lam_scale;
    MsSlopePipeline pipe = ms_then_slope_pipeline(data, rand, eta2, ms_opts, rng);
    report.result = multi_infer(pipe.setup, q);
    selected = pipe.selected;
  } else {
    throw std::invalid_argument("infer: unknown query " + query);
  }

  report.lambda_value = lambda_value;
  for (Eigen::Index idx : selected) report.names.push_back(names[static_cast<std::size_t>(idx)]);
  return report;
}

}  // namespace

extern "C" {

void selinf_infer_options_init(selinf_infer_options* opts) {
  if (!opts) return;
  opts->query = "lasso";
  opts->lambda = "theory";
  opts->rand_ratio = 0.5;
  opts->level = 0.90;
  opts->target = "partial";
  opts->seed = 0;
  opts->standardize = 1;
  opts->sigma2 = 0.0;
  opts->ms_alpha = 0.20;
  opts->slope_lam_scale = 1.0;
}

int selinf_infer(const double* x, int64_t n, int64_t p, const double* y,
                 const char* const* names, const selinf_infer_options* opts,
                 selinf_result** out) {
  if (!x || !y || !opts || !out || n < 1 || p < 1)
    return fail(SELINF_ERR_INVALID, "selinf_infer: null or empty arguments");
  return guarded([&]() {
    Eigen::Map<const Eigen::MatrixXd> X(x, n, p);
    Eigen::Map<const Eigen::VectorXd> yv(y, n);
    std::vector<std::string> colnames;
    for (int64_t j = 0; j < p; ++j)
      colnames.push_back(names && names[j] ? names[j] : "x" + std::to_string(j));
    InferReport report = run_infer(X, yv, colnames, *opts);
    auto* result = new selinf_result;
    result->json = infer_report_json(report);
    *out = result;
  });
}

int selinf_simulate(const char* config_json, selinf_result** out) {
  if (!config_json || !out) return fail(SELINF_ERR_INVALID, "selinf_simulate: null arguments");
  return guarded([&]() {
    ExperimentConfig config = experiment_config_from_json(config_json);
    Summary summary = run_experiment(config);
    auto* result = new selinf_result;
    result->json = summary_json(summary);
    result->csv = summary_csv(summary);
    result->has_csv = true;
    *out = result;
  });
}

int selinf_pivot_check(double beta, double tau, double eta2, int draws, uint64_t seed,
                       selinf_result** out) {
  if (!out) return fail(SELINF_ERR_INVALID, "selinf_pivot_check: null output");
  return guarded([&]() {
    PivotCheckResult res = run_pivot_check(beta, tau, eta2, draws, seed);
    auto* result = new selinf_result;
    result->json = pivot_check_json(res);
    result->csv = pivot_check_csv(res);
    result->has_csv = true;
    *out = result;
  });
}

const char* selinf_result_json(const selinf_result* result) {
  return result ? result->json.c_str() : nullptr;
}

const char* selinf_result_csv(const selinf_result* result) {
  return result && result->has_csv ? result->csv.c_str() : nullptr;
}

void selinf_result_free(selinf_result* result) { delete result; }

const char* selinf_last_error(void) { return g_last_error.c_str(); }

const char* selinf_version(void) { return selinf::kArtifactVersion; }

}  // extern "C"
