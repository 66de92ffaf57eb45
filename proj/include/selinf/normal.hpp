#pragma once

namespace selinf {

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal CDF, Phi(x).
double norm_cdf(double x);

/// Upper tail Phi_bar(x) = 1 - Phi(x), computed without cancellation.
double norm_sf(double x);

/// log Phi_bar(x); switches to an asymptotic expansion deep in the tail so the
/// value stays finite long after norm_sf underflows.
double norm_log_sf(double x);

/// Hazard ratio phi(x) / Phi_bar(x), evaluated in log space for large x.
double norm_hazard(double x);

/// Inverse CDF. Throws std::domain_error unless 0 < p < 1.
double norm_quantile(double p);

}  // namespace selinf
