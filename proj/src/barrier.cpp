#include "selinf/barrier.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace selinf {

BarrierSpec BarrierSpec::sign_only(const Eigen::VectorXd& signs) {
  BarrierSpec spec;
  const Eigen::Index m = signs.size();
  spec.U = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) spec.U(k, k) = -signs(k);
  spec.v = Eigen::VectorXd::Zero(m);
  spec.kind = BarrierKind::sign_only;
  return spec;
}

BarrierSpec BarrierSpec::affine(Eigen::MatrixXd U, Eigen::VectorXd v) {
  BarrierSpec spec;
  spec.U = std::move(U);
  spec.v = std::move(v);
  spec.kind = BarrierKind::general_affine;
  return spec;
}

bool BarrierSpec::feasible(const Eigen::VectorXd& o) const {
  return ((v - U * o).array() > 0.0).all();
}

double barrier_value(const Eigen::VectorXd& o, const BarrierSpec& spec) {
  const Eigen::VectorXd slack = spec.v - spec.U * o;
  double total = 0.0;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    if (!(slack(i) > 0.0)) return std::numeric_limits<double>::infinity();
    total += std::log1p(1.0 / slack(i));
  }
  return total;
}

BarrierEval barrier_eval(const Eigen::VectorXd& o, const BarrierSpec& spec) {
  const Eigen::Index m = o.size();
  const Eigen::VectorXd slack = spec.v - spec.U * o;
  BarrierEval eval;
  eval.value = 0.0;
  eval.gradient = Eigen::VectorXd::Zero(m);
  eval.hessian = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    const double s = slack(i);
    if (!(s > 0.0)) throw std::domain_error("barrier_eval: point is not strictly feasible");
    eval.value += std::log1p(1.0 / s);
    const double g = 1.0 / (s * (s + 1.0));          // -d/ds log(1 + 1/s)
    const double h = (2.0 * s + 1.0) / (s * s * (s + 1.0) * (s + 1.0));
    eval.gradient += g * spec.U.row(i).transpose();
    eval.hessian += h * spec.U.row(i).transpose() * spec.U.row(i);
  }
  return eval;
}

}  // namespace selinf
