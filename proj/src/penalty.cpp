#include "huberpen/penalty.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace huberpen {

namespace {

void require_positive_delta(double delta, const char* where) {
  if (!std::isfinite(delta) || delta <= 0.0) {
    throw std::invalid_argument(std::string(where) + ": delta must be positive and finite");
  }
}

void require_same_dim(const Eigen::VectorXd& x, const Halfspace& hs, const char* where) {
  if (x.size() != hs.dim()) {
    throw std::invalid_argument(std::string(where) + ": dimension mismatch");
  }
}

}  // namespace

Halfspace::Halfspace(Eigen::VectorXd a_in, double b_in) : a(std::move(a_in)), b(b_in) {
  if (a.size() == 0) throw std::invalid_argument("Halfspace: empty normal");
  if (!a.allFinite() || !std::isfinite(b)) throw std::invalid_argument("Halfspace: non-finite data");
  a_norm = a.norm();
  if (a_norm == 0.0) throw std::invalid_argument("Halfspace: normal must be nonzero");
}

PenaltyParams::PenaltyParams(double gamma_in, double delta_in) : gamma(gamma_in), delta(delta_in) {
  if (!std::isfinite(gamma) || gamma <= 0.0)
    throw std::invalid_argument("PenaltyParams: gamma must be positive");
  if (!std::isfinite(delta) || delta < 0.0)
    throw std::invalid_argument("PenaltyParams: delta must be nonnegative");
}

double one_sided_huber(double s, double delta) {
  require_positive_delta(delta, "one_sided_huber");
  if (!std::isfinite(s)) throw std::invalid_argument("one_sided_huber: s must be finite");
  if (s > delta) return s;
  if (s < -delta) return 0.0;
  const double t = s + delta;
  return t * t / (4.0 * delta);
}

double one_sided_huber_deriv(double s, double delta) {
  require_positive_delta(delta, "one_sided_huber_deriv");
  if (!std::isfinite(s)) throw std::invalid_argument("one_sided_huber_deriv: s must be finite");
  if (s > delta) return 1.0;
  if (s < -delta) return 0.0;
  return (s + delta) / (2.0 * delta);
}

double penalty_value(const Eigen::VectorXd& x, const Halfspace& hs, double delta) {
  require_same_dim(x, hs, "penalty_value");
  if (!std::isfinite(delta) || delta < 0.0)
    throw std::invalid_argument("penalty_value: delta must be nonnegative and finite");
  const double s = hs.residual(x);
  if (delta == 0.0) return std::max(0.0, s) / hs.a_norm;
  return one_sided_huber(s, delta) / hs.a_norm;
}

Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& x, const Halfspace& hs, double delta) {
  require_same_dim(x, hs, "penalty_gradient");
  require_positive_delta(delta, "penalty_gradient");
  const double w = one_sided_huber_deriv(hs.residual(x), delta) / hs.a_norm;
  return w * hs.a;
}

double gradient_delta_shift_bound(double delta1, double delta2) {
  require_positive_delta(delta2, "gradient_delta_shift_bound");
  if (!std::isfinite(delta1) || delta1 < delta2)
    throw std::invalid_argument("gradient_delta_shift_bound: requires delta1 >= delta2 > 0");
  return (delta1 - delta2) / (2.0 * delta1);
}

double halfspace_distance(const Eigen::VectorXd& x, const Halfspace& hs) {
  require_same_dim(x, hs, "halfspace_distance");
  return std::max(0.0, hs.residual(x)) / hs.a_norm;
}

}  // namespace huberpen
