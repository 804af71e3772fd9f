#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "huberpen/problem.hpp"
#include "huberpen/schedule.hpp"

namespace huberpen {

/// Raised when a reference solver cannot certify its result.
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Constrained optimum with its KKT certificate. active_set holds 0-based
/// constraint indices; multipliers is aligned with it.
struct OracleSolution {
  Eigen::VectorXd x_star;
  double f_star = 0.0;
  std::vector<int> active_set;
  Eigen::VectorXd multipliers;
  double tolerance = 0.0;
  double kkt_residual = 0.0;  // worst of stationarity / feasibility / sign / slackness
};

/// Ground-truth constrained optimum by exhaustive active-set enumeration
/// (all subsets with at most n linearly independent normals; m <= 20).
/// Returns the feasible KKT point with nonnegative multipliers; ties resolve
/// to the lowest objective, then the smallest index set.
OracleSolution solve_constrained_exact(const ConstrainedProblem& p, double tol);

/// Unique minimizer of the penalized objective F_{gamma,delta}, certified by
/// |grad F(x)| <= tol * mu (hence |x - x*_{gamma,delta}| <= tol). Safeguarded
/// Newton on the piecewise-quadratic F with Armijo backtracking and a
/// Lipschitz gradient-step fallback.
Eigen::VectorXd minimize_penalized(const ConstrainedProblem& p, double gamma, double delta,
                                   double tol);

/// Euclidean projection onto the feasible polyhedron, as the exact solve of
/// min 1/2 |y - x|^2 subject to the problem's constraints.
Eigen::VectorXd project_polyhedron(const ConstrainedProblem& p, const Eigen::VectorXd& x,
                                   double tol);

/// Certified bound L_f * R + |c| on the gradient norm of the quadratic
/// objective over the ball |x| <= R.
double subgradient_bound(const ConstrainedProblem& p, double R);

/// Radius R = 2 (|x*| + level-set radius) such that every penalized
/// minimizer with gamma*delta <= product_bound, and its projection, lies in
/// the ball B(0, R). Used to instantiate subgradient_bound.
double iterate_radius_bound(const ConstrainedProblem& p, double product_bound, double tol);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  int points_used = 0;
  std::vector<std::int64_t> excluded_ks;  // nonpositive errors dropped before the fit
};

/// Least-squares fit of log(mse) against log(k) over snapshots with
/// k in [k_min, k_max]; requires at least 10 usable points.
RateFit rate_fit(const std::vector<std::int64_t>& ks, const std::vector<double>& mse,
                 std::int64_t k_min, std::int64_t k_max);

struct DriftCheckRow {
  std::int64_t k = 0;
  double lhs = 0.0;    // mu * |x_k* - x_{k+1}*|
  double bound = 0.0;  // (gamma_{k+1}-gamma_k) + gamma_k (delta_k-delta_{k+1}) / (2 delta_k)
  double margin = 0.0; // bound + tol - lhs
};

struct DriftCheckReport {
  std::vector<DriftCheckRow> rows;
  bool passed = false;
  double min_margin = 0.0;
};

/// Verifies the drift bound between successive penalized minimizers at each
/// listed k. Minimizers are computed at oracle_tol (default tol/10).
DriftCheckReport check_minimizer_drift(const ConstrainedProblem& p, const Schedule& sch,
                                       const std::vector<std::int64_t>& ks, double tol,
                                       double oracle_tol = 0.0);

struct GapCheckReport {
  double gamma = 0.0;
  double delta = 0.0;
  double beta = 1.0;  // Hoffman constant; exactly 1 when m = 1
  double L = 0.0;     // gradient-norm bound over the certified ball
  double R = 0.0;
  bool asymptotic = false;            // gamma / (4 m beta) > L
  bool full_inequality_checked = false;
  double lhs = 0.0;                   // mu/2 |x*-xg|^2 + mu/2 |x*-pg|^2 + (gamma/(4 m beta) - L) dist(xg, X)
  double rhs = 0.0;                   // gamma * delta / (4 alpha_min)
  double margin = 0.0;
  double consequence_lhs = 0.0;       // |x* - xg|^2
  double consequence_rhs = 0.0;       // gamma * delta / (2 mu alpha_min)
  double consequence_margin = 0.0;
  bool passed = false;
  std::string note;
};

/// Optimality-gap inequality for the penalized minimizer. With m = 1 the
/// Hoffman constant is exactly 1 and the full three-term inequality is
/// asserted (when gamma/4 > L; otherwise the report says the pair is not in
/// the asymptotic regime and only the beta-free consequence is checked).
/// For m > 1 only the beta-free consequence |x* - xg|^2 <= gamma*delta/(2 mu alpha_min)
/// is asserted; the Hoffman ratio is estimated and reported.
GapCheckReport check_optimality_gap(const ConstrainedProblem& p, double gamma, double delta,
                                    double tol);

/// Sampled lower estimate of the Hoffman ratio dist(x, X) / sum_i dist(x, X_i).
/// Reported only; never asserted against for m > 1.
double estimate_hoffman_ratio(const ConstrainedProblem& p, int samples, std::uint64_t seed);

/// JSON: {"x_star", "f_star", "active_set", "multipliers", "tolerance"}.
std::string oracle_to_json(const OracleSolution& sol);
OracleSolution oracle_from_json(const std::string& text);
void save_oracle(const OracleSolution& sol, const std::string& path);
OracleSolution load_oracle(const std::string& path);

}  // namespace huberpen
