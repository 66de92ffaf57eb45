#pragma once

#include <functional>

namespace selinf {

/// Adaptive Gauss-Kronrod (15 point) integration on [a, b].
/// Splits the interval until the embedded error estimate satisfies
/// |err| <= max(abs_tol, rel_tol * |integral|). Throws NumericalError if the
/// subdivision budget is exhausted.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-10, double abs_tol = 1e-14,
                    int max_depth = 48);

}  // namespace selinf
