#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace huberpen {

/// Power-family parameter schedules: gamma_k = gamma0 * k^g (growing penalty
/// weight), delta_k = delta0 * k^-d (shrinking smoothing width),
/// step_k = step0 * k^-s. Defined for k >= 1.
struct Schedule {
  double g = 0.25;
  double d = 0.75;
  double s = 1.0;
  double gamma0 = 1.0;
  double delta0 = 1.0;
  double step0 = 1.0;

  double gamma(std::int64_t k) const;
  double delta(std::int64_t k) const;
  double step(std::int64_t k) const;

  /// Upper bound on gamma_k * delta_k for all k >= 1 (valid when g <= d, so
  /// the product is nonincreasing from its k = 1 value).
  double product_bound() const { return gamma0 * delta0; }

  /// Certified bound on |x_k* - x_{k+1}*|, the drift between successive
  /// penalized minimizers of a mu-strongly convex objective:
  /// [(gamma_{k+1} - gamma_k) + gamma_k (delta_k - delta_{k+1}) / (2 delta_k)] / mu.
  double drift_bound(double mu, std::int64_t k) const;
};

enum class Severity { info, warning, error };

struct Diagnostic {
  Severity severity;
  std::string message;
};

/// Predicted mean-square-error decay exponent min{s - 2g, 2 - 2s + 2g, d - g};
/// the method converges at rate O(1/k^exponent) when it is positive.
double rate_exponent(const Schedule& sch);

/// Errors when g <= 0, d <= 0, s outside (0, 1], or g > d (gamma*delta would
/// increase). Warnings when the predicted rate exponent is nonpositive. One
/// info entry reports the exponent for valid schedules.
std::vector<Diagnostic> validate(const Schedule& sch);

/// True when no error-level diagnostic is present.
bool is_valid(const std::vector<Diagnostic>& diags);

std::string to_string(const Diagnostic& diag);

}  // namespace huberpen
