#pragma once

#include <vector>

namespace selinf {

struct KsResult {
  double statistic;  // sup |F_hat - F_uniform|
  double pvalue;     // asymptotic Kolmogorov tail with Stephens' correction
};

/// One-sample Kolmogorov-Smirnov test against Uniform(0,1). Sorts a copy.
KsResult ks_test_uniform(std::vector<double> sample);

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // unbiased

}  // namespace selinf
