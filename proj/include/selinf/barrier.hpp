#pragma once

#include <Eigen/Core>

namespace selinf {

enum class BarrierKind { sign_only, general_affine };

/// Log-barrier B(o) = sum_i log(1 + 1/(v_i - u_i^T o)) over the polyhedron
/// {o : U o < v}. The sign-only kind is the special case U = -diag(z), v = 0,
/// giving sum_j log(1 + 1/(z_j o_j)).
struct BarrierSpec {
  Eigen::MatrixXd U;
  Eigen::VectorXd v;
  BarrierKind kind = BarrierKind::general_affine;

  static BarrierSpec sign_only(const Eigen::VectorXd& signs);
  static BarrierSpec affine(Eigen::MatrixXd U, Eigen::VectorXd v);

  Eigen::Index dim() const { return U.cols(); }
  bool feasible(const Eigen::VectorXd& o) const;
};

struct BarrierEval {
  double value;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Value only; +inf outside the feasible region.
double barrier_value(const Eigen::VectorXd& o, const BarrierSpec& spec);

/// Value, analytic gradient and Hessian. Throws std::domain_error when o is
/// not strictly feasible.
BarrierEval barrier_eval(const Eigen::VectorXd& o, const BarrierSpec& spec);

}  // namespace selinf
