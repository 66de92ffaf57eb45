#include "selinf/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "selinf/errors.hpp"
#include "selinf/filedrawer.hpp"

namespace selinf {

using nlohmann::json;

namespace {
json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

json manifest_json(std::uint64_t seed, const std::string& subcommand) {
  return json{{"schema", kSchemaTag},
              {"artifact_version", kArtifactVersion},
              {"subcommand", subcommand},
              {"seed", seed}};
}
}  // namespace

std::string infer_report_json(const InferReport& report) {
  json doc;
  doc["manifest"] = manifest_json(report.seed, "infer");
  doc["manifest"]["query"] = report.query;
  doc["manifest"]["lambda_scheme"] = report.lambda_scheme;
  doc["manifest"]["lambda"] = number_or_null(report.lambda_value);
  doc["manifest"]["rand_ratio"] = report.rand_ratio;
  doc["manifest"]["eta2"] = report.eta2;
  doc["manifest"]["sigma2"] = report.sigma2;
  doc["manifest"]["level"] = 1.0 - report.level_q;
  doc["manifest"]["target"] = report.target;
  doc["manifest"]["standardize"] = report.standardized;
  doc["manifest"]["n"] = report.n;
  doc["manifest"]["p"] = report.p;

  json rows = json::array();
  for (Eigen::Index j = 0; j < report.result.mle.size(); ++j) {
    rows.push_back(json{{"variable", report.names[static_cast<std::size_t>(j)]},
                        {"mle", report.result.mle(j)},
                        {"std_error", std::sqrt(report.result.info_inverse(j, j))},
                        {"pvalue", report.result.pvalues(j)},
                        {"lower", report.result.lower(j)},
                        {"upper", report.result.upper(j)}});
  }
  doc["selected"] = rows;
  doc["empty_selection"] = report.result.empty;
  return doc.dump(2) + "\n";
}

namespace {
json config_to_json(const ExperimentConfig& config) {
  return json{{"n", config.n},
              {"p", config.p},
              {"rho", config.rho},
              {"signal", to_string(config.signal)},
              {"flat_s", config.flat_s},
              {"flat_amplitude", config.flat_amplitude},
              {"snr_grid", config.snr_grid},
              {"lambda", to_string(config.lambda_scheme)},
              {"lambda_fixed", config.lambda_fixed},
              {"rand_ratio", config.rand_ratio},
              {"reps", config.reps},
              {"seed", config.seed},
              {"target", to_string(config.target_kind)},
              {"method", to_string(config.method)},
              {"level", 1.0 - config.level_q},
              {"ms_alpha", config.ms_alpha},
              {"slope_lam_scale", config.slope_lam_scale},
              {"cv_folds", config.cv_folds}};
}
}  // namespace

std::string experiment_config_json(const ExperimentConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& err) {
    throw std::invalid_argument(std::string("config: ") + err.what());
  }
  ExperimentConfig config;
  auto get = [&](const char* key, auto& slot) {
    if (doc.contains(key)) slot = doc.at(key).get<std::decay_t<decltype(slot)>>();
  };
  long long n = config.n, p = config.p, flat_s = config.flat_s;
  get("n", n);
  get("p", p);
  get("flat_s", flat_s);
  config.n = n;
  config.p = p;
  config.flat_s = flat_s;
  get("rho", config.rho);
  get("flat_amplitude", config.flat_amplitude);
  get("rand_ratio", config.rand_ratio);
  get("reps", config.reps);
  get("seed", config.seed);
  get("lambda_fixed", config.lambda_fixed);
  get("ms_alpha", config.ms_alpha);
  get("slope_lam_scale", config.slope_lam_scale);
  get("cv_folds", config.cv_folds);
  if (doc.contains("snr_grid")) config.snr_grid = doc.at("snr_grid").get<std::vector<double>>();
  if (doc.contains("level")) config.level_q = 1.0 - doc.at("level").get<double>();
  if (doc.contains("signal")) {
    const std::string s = doc.at("signal").get<std::string>();
    if (s == "type4") config.signal = SignalType::type4;
    else if (s == "flat") config.signal = SignalType::flat;
    else throw std::invalid_argument("config: unknown signal " + s);
  }
  if (doc.contains("lambda")) {
    const std::string s = doc.at("lambda").get<std::string>();
    if (s == "theory") config.lambda_scheme = LambdaScheme::theory;
    else if (s == "cv.min") config.lambda_scheme = LambdaScheme::cv_min;
    else if (s == "cv.1se") config.lambda_scheme = LambdaScheme::cv_1se;
    else {
      config.lambda_scheme = LambdaScheme::fixed;
      config.lambda_fixed = std::stod(s);
    }
  }
  if (doc.contains("target")) {
    const std::string s = doc.at("target").get<std::string>();
    if (s == "partial") config.target_kind = TargetKind::partial;
    else if (s == "full") config.target_kind = TargetKind::full;
    else throw std::invalid_argument("config: unknown target " + s);
  }
  if (doc.contains("method")) {
    const std::string s = doc.at("method").get<std::string>();
    if (s == "lasso") config.method = MethodTag::lasso;
    else if (s == "lasso2") config.method = MethodTag::lasso2;
    else if (s == "ms-slope") config.method = MethodTag::ms_slope;
    else throw std::invalid_argument("config: unknown method " + s);
  }
  return config;
}

std::string summary_json(const Summary& summary) {
  json doc;
  doc["manifest"] = manifest_json(summary.config.seed, "simulate");
  doc["config"] = config_to_json(summary.config);
  json cells = json::array();
  for (const auto& cell : summary.cells) {
    cells.push_back(json{{"snr", cell.snr},
                         {"reps", cell.reps},
                         {"empty_reps", cell.empty_reps},
                         {"coverage_mle", number_or_null(cell.coverage_mle)},
                         {"coverage_naive", number_or_null(cell.coverage_naive)},
                         {"length_mle", number_or_null(cell.length_mle)},
                         {"length_naive", number_or_null(cell.length_naive)},
                         {"power", number_or_null(cell.power)},
                         {"fdp", number_or_null(cell.fdp)},
                         {"risk_mle", number_or_null(cell.risk_mle)},
                         {"risk_query", number_or_null(cell.risk_query)},
                         {"mean_selected", number_or_null(cell.mean_selected)}});
  }
  doc["cells"] = cells;
  return doc.dump(2) + "\n";
}

std::string summary_csv(const Summary& summary) {
  std::ostringstream out;
  out.precision(12);
  out << "snr,metric,method,target,value\n";
  const char* method = to_string(summary.config.method);
  const char* target = to_string(summary.config.target_kind);
  auto row = [&](double snr, const char* metric, double value) {
    out << snr << ',' << metric << ',' << method << ',' << target << ',';
    if (std::isfinite(value)) out << value;
    else out << "NA";
    out << '\n';
  };
  for (const auto& cell : summary.cells) {
    row(cell.snr, "coverage_mle", cell.coverage_mle);
    row(cell.snr, "coverage_naive", cell.coverage_naive);
    row(cell.snr, "length_mle", cell.length_mle);
    row(cell.snr, "length_naive", cell.length_naive);
    row(cell.snr, "power", cell.power);
    row(cell.snr, "fdp", cell.fdp);
    row(cell.snr, "risk_mle", cell.risk_mle);
    row(cell.snr, "risk_query", cell.risk_query);
    row(cell.snr, "mean_selected", cell.mean_selected);
    row(cell.snr, "empty_reps", cell.empty_reps);
  }
  return out.str();
}

PivotCheckResult run_pivot_check(double beta, double tau, double eta2, int draws,
                                 std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("pivot-check: draws must be positive");
  FileDrawerProblem prob(tau, eta2);
  Rng rng(seed);
  PivotCheckResult res;
  res.beta = beta;
  res.tau = tau;
  res.eta2 = eta2;
  res.seed = seed;
  res.pivots.reserve(static_cast<std::size_t>(draws));
  for (int k = 0; k < draws; ++k) {
    auto y = sample_conditional_y(beta, prob, rng);
    if (!y) throw EmptySelectionError("pivot-check: rejection cap reached");
    res.pivots.push_back(pivot_1d(*y, beta, prob));
  }
  res.ks = ks_test_uniform(res.pivots);
  std::sort(res.pivots.begin(), res.pivots.end());
  return res;
}

std::string pivot_check_json(const PivotCheckResult& res) {
  json doc;
  doc["manifest"] = manifest_json(res.seed, "pivot-check");
  doc["beta"] = res.beta;
  doc["tau"] = res.tau;
  doc["eta2"] = res.eta2;
  doc["draws"] = res.pivots.size();
  doc["ks_statistic"] = res.ks.statistic;
  doc["ks_pvalue"] = res.ks.pvalue;
  doc["uniform_at_1pct"] = res.ks.pvalue > 0.01;
  return doc.dump(2) + "\n";
}

std::string pivot_check_csv(const PivotCheckResult& res) {
  std::ostringstream out;
  out.precision(12);
  out << "pivot,ecdf\n";
  const double n = static_cast<double>(res.pivots.size());
  for (std::size_t i = 0; i < res.pivots.size(); ++i)
    out << res.pivots[i] << ',' << (static_cast<double>(i) + 1.0) / n << '\n';
  return out.str();
}

}  // namespace selinf
