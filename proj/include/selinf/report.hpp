#pragma once

#include <string>
#include <vector>

#include "selinf/mle.hpp"
#include "selinf/simulation.hpp"
#include "selinf/stats.hpp"

namespace selinf {

inline constexpr const char* kSchemaTag = "selinf-mle/1";
inline constexpr const char* kArtifactVersion = "0.1.0";

struct InferReport {
  std::vector<std::string> names;  // selected column names
  MleResult result;
  std::string query;
  std::string lambda_scheme;
  double lambda_value = 0.0;
  double rand_ratio = 0.0;
  double eta2 = 0.0;
  double sigma2 = 0.0;
  double level_q = 0.10;
  std::string target;
  std::uint64_t seed = 0;
  bool standardized = true;
  Eigen::Index n = 0, p = 0;
};

std::string infer_report_json(const InferReport& report);

std::string summary_json(const Summary& summary);

/// Long-format CSV: snr,metric,method,target,value.
std::string summary_csv(const Summary& summary);

struct PivotCheckResult {
  std::vector<double> pivots;  // sorted
  KsResult ks;
  double beta, tau, eta2;
  std::uint64_t seed = 0;
};

PivotCheckResult run_pivot_check(double beta, double tau, double eta2, int draws,
                                 std::uint64_t seed);

std::string pivot_check_json(const PivotCheckResult& res);
std::string pivot_check_csv(const PivotCheckResult& res);

/// Parses an ExperimentConfig from a JSON object string (missing keys keep
/// defaults). Throws std::invalid_argument on malformed input.
ExperimentConfig experiment_config_from_json(const std::string& text);

std::string experiment_config_json(const ExperimentConfig& config);

}  // namespace selinf
