#pragma once

#include <Eigen/Core>

namespace huberpen {

/// One linear inequality <a, x> <= b. The Euclidean norm of a is computed
/// once at construction and reused by every penalty evaluation.
struct Halfspace {
  Eigen::VectorXd a;
  double b = 0.0;
  double a_norm = 0.0;

  Halfspace(Eigen::VectorXd a_in, double b_in);

  Eigen::Index dim() const { return a.size(); }

  /// Signed residual <a, x> - b; nonpositive iff x satisfies the constraint.
  double residual(const Eigen::VectorXd& x) const { return a.dot(x) - b; }
};

/// Penalty weight gamma > 0 and smoothing width delta >= 0.
struct PenaltyParams {
  double gamma = 1.0;
  double delta = 1.0;

  PenaltyParams(double gamma_in, double delta_in);
};

/// Scalar one-sided Huber kernel: 0 for s < -delta, quadratic ramp
/// (s + delta)^2 / (4 delta) on [-delta, delta], linear (= s) above.
/// The middle branch owns both endpoints; the branches agree there exactly.
double one_sided_huber(double s, double delta);

/// Derivative of the kernel: 0 / (s + delta)/(2 delta) / 1 on the same
/// branches. Nondecreasing, continuous, valued in [0, 1].
double one_sided_huber_deriv(double s, double delta);

/// Halfspace penalty h(x) = p(<a,x> - b) / |a|. delta = 0 degenerates to the
/// Euclidean distance to the halfspace (positive-part residual over |a|).
double penalty_value(const Eigen::VectorXd& x, const Halfspace& hs, double delta);

/// Gradient p'(<a,x> - b) * a / |a|; requires delta > 0 (the delta = 0
/// penalty is nonsmooth on the boundary). Norm never exceeds 1, and the map
/// is Lipschitz in x with constant |a| / (2 delta).
Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& x, const Halfspace& hs, double delta);

/// Certified uniform bound (delta1 - delta2) / (2 delta1) on
/// |grad h_{delta1}(x) - grad h_{delta2}(x)| over all x, for delta1 >= delta2 > 0.
/// The bound is attained at residuals +-delta2.
double gradient_delta_shift_bound(double delta1, double delta2);

/// Euclidean distance from x to the halfspace: max(0, <a,x> - b) / |a|.
double halfspace_distance(const Eigen::VectorXd& x, const Halfspace& hs);

}  // namespace huberpen
