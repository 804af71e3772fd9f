#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "huberpen/penalty.hpp"

namespace huberpen {

/// Extension point for objectives; only the quadratic model below is
/// implemented. Everything downstream needs exact strong-convexity and
/// gradient-Lipschitz constants, which quadratics provide for free.
class ConvexObjective {
 public:
  virtual ~ConvexObjective() = default;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& x) const = 0;
  virtual double strong_convexity() const = 0;   // mu
  virtual double gradient_lipschitz() const = 0; // L_f
};

/// f(x) = 1/2 x'Qx + c'x with Q symmetric positive definite. The extremal
/// eigenvalues (mu, L_f) are computed at construction.
class QuadraticObjective final : public ConvexObjective {
 public:
  /// Validates symmetry (1e-12 relative) and positive definiteness.
  QuadraticObjective(Eigen::MatrixXd Q, Eigen::VectorXd c);

  double value(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const override;
  double strong_convexity() const override { return mu_; }
  double gradient_lipschitz() const override { return lf_; }

  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::VectorXd& c() const { return c_; }
  Eigen::Index dim() const { return c_.size(); }

 private:
  Eigen::MatrixXd Q_;
  Eigen::VectorXd c_;
  double mu_ = 0.0;
  double lf_ = 0.0;
};

struct ProblemMeta {
  std::uint64_t seed = 0;
  std::string generator;
};

/// Strongly convex quadratic objective subject to m >= 1 halfspaces, plus a
/// feasible witness point. alpha_min = min_i |a_i| is cached.
class ConstrainedProblem {
 public:
  ConstrainedProblem(QuadraticObjective objective, std::vector<Halfspace> constraints,
                     Eigen::VectorXd witness, std::optional<ProblemMeta> meta = std::nullopt);

  Eigen::Index n() const { return objective_.dim(); }
  int m() const { return static_cast<int>(constraints_.size()); }
  const QuadraticObjective& objective() const { return objective_; }
  const std::vector<Halfspace>& constraints() const { return constraints_; }
  const Halfspace& constraint(int i) const { return constraints_.at(static_cast<std::size_t>(i)); }
  const Eigen::VectorXd& witness() const { return witness_; }
  double alpha_min() const { return alpha_min_; }
  const std::optional<ProblemMeta>& meta() const { return meta_; }

  /// True when every constraint residual at x is <= tol.
  bool feasible(const Eigen::VectorXd& x, double tol = 0.0) const;

 private:
  QuadraticObjective objective_;
  std::vector<Halfspace> constraints_;
  Eigen::VectorXd witness_;
  double alpha_min_ = 0.0;
  std::optional<ProblemMeta> meta_;
};

double f_value(const ConstrainedProblem& p, const Eigen::VectorXd& x);
Eigen::VectorXd grad_f(const ConstrainedProblem& p, const Eigen::VectorXd& x);

/// Penalized objective F(x) = f(x) + (gamma/m) * sum_i h_delta(x; a_i, b_i).
double F_value(const ConstrainedProblem& p, const Eigen::VectorXd& x, double gamma, double delta);
double F_value(const ConstrainedProblem& p, const Eigen::VectorXd& x, const PenaltyParams& params);

/// Full gradient of F; equals the average over i of the single-constraint
/// stochastic direction grad f(x) + gamma * grad h_delta(x; a_i, b_i).
Eigen::VectorXd grad_F(const ConstrainedProblem& p, const Eigen::VectorXd& x, double gamma,
                       double delta);

/// Euclidean distance to the feasible polyhedron, via the exact projector
/// (KKT certificate at tolerance tol). Returns 0 for feasible x.
double dist_feasible_set(const ConstrainedProblem& p, const Eigen::VectorXd& x, double tol);

struct GeneratorSpec {
  double eig_min = 1.0;   // smallest eigenvalue of Q
  double eig_max = 2.0;   // largest eigenvalue of Q
  double margin = 1e-2;   // strict-feasibility margin of the witness
  double slack = 0.5;     // extra uniform slack added per constraint offset
  double push = 0.25;     // how far past the boundary the unconstrained minimizer lands
  bool active_optimum = false;
};

/// Deterministic random instance: SPD Q with eigenvalue range from the spec,
/// unit-norm constraint normals, offsets placing the witness strictly inside
/// each halfspace. With active_optimum the linear term is chosen so the
/// unconstrained minimizer violates constraint 0 by `push`, putting the
/// constrained optimum on the boundary.
ConstrainedProblem generate_problem(int n, int m, std::uint64_t seed,
                                    const GeneratorSpec& spec = {});

/// JSON problem file: {"n", "m", "Q" (row-major rows), "linear_term",
/// "constraints" [{"a", "b"}], "witness", "meta" {"seed", "generator"}}.
std::string problem_to_json(const ConstrainedProblem& p);
ConstrainedProblem problem_from_json(const std::string& text);
void save_problem(const ConstrainedProblem& p, const std::string& path);
ConstrainedProblem load_problem(const std::string& path);

}  // namespace huberpen
