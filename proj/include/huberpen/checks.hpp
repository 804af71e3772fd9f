#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "huberpen/oracle.hpp"
#include "huberpen/problem.hpp"
#include "huberpen/schedule.hpp"

namespace huberpen {

/// One verified inequality family: `min_margin` is the worst slack observed
/// (negative means a violation beyond the allowed tolerance).
struct CheckItem {
  std::string name;
  bool passed = false;
  double min_margin = 0.0;
  long samples = 0;
  std::string detail;
};

struct CheckSuiteResult {
  std::string name;
  bool passed = false;
  std::vector<CheckItem> items;
};

/// Sampled penalty invariants over random (x, a, b, delta) with n <= max_dim:
/// nonnegativity, the delta/(4|a|) two-sided boundary bounds, monotonicity in
/// delta, h >= halfspace distance, kernel convexity, gradient norm <= 1, the
/// |a|/(2 delta) gradient Lipschitz inequality, branch agreement at +-delta,
/// and analytic-vs-central-difference gradients away from the kinks.
CheckSuiteResult check_penalty_invariants(std::uint64_t seed, long samples, int max_dim = 8,
                                          double slack_tol = 1e-12, double fd_rel_tol = 1e-6);

/// For random width pairs delta1 > delta2, the sampled sup of
/// |grad h_{delta1} - grad h_{delta2}| stays below the certified bound and
/// attains at least `attain_frac` of it when the grid includes the extremal
/// residuals +-delta2.
CheckSuiteResult check_gradient_shift_bound(std::uint64_t seed, int pairs, long points_per_pair,
                                            double slack_tol = 1e-12, double attain_frac = 0.99);

/// Drift bound between successive penalized minimizers on freshly generated
/// instances, k in {1, 2, 4, ..., k_max}.
CheckSuiteResult check_drift_suite(const std::vector<std::uint64_t>& seeds, const Schedule& sch,
                                   std::int64_t k_max, double tol, double oracle_tol);

/// Optimality-gap inequality: full three-term form on m = 1 instances with a
/// boundary-active optimum, beta-free consequence on general-m instances.
CheckSuiteResult check_gap_suite(const std::vector<std::uint64_t>& m1_seeds,
                                 const std::vector<std::uint64_t>& general_seeds, double tol);

/// Level-set containment of penalized minimizers: f(x_k*) <= f(x*) +
/// gamma_k delta_k / (4 alpha_min) + tol for each k, and the schedule-wide
/// product bound version.
CheckSuiteResult check_level_set_suite(const std::vector<std::uint64_t>& seeds, const Schedule& sch,
                                       const std::vector<std::int64_t>& ks, double tol,
                                       double oracle_tol);

}  // namespace huberpen
