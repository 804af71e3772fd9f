#include "huberpen/problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "huberpen/io_util.hpp"
#include "huberpen/oracle.hpp"
#include "huberpen/rng.hpp"

namespace huberpen {

using nlohmann::json;

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd Q, Eigen::VectorXd c)
    : Q_(std::move(Q)), c_(std::move(c)) {
  if (Q_.rows() != Q_.cols()) throw std::invalid_argument("QuadraticObjective: Q must be square");
  if (Q_.rows() != c_.size())
    throw std::invalid_argument("QuadraticObjective: Q and c dimensions differ");
  if (!Q_.allFinite() || !c_.allFinite())
    throw std::invalid_argument("QuadraticObjective: non-finite data");

  const double scale = std::max(1.0, Q_.cwiseAbs().maxCoeff());
  const double asym = (Q_ - Q_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw std::invalid_argument("QuadraticObjective: Q is not symmetric (1e-12 relative)");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q_, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::invalid_argument("QuadraticObjective: eigenvalue computation failed");
  mu_ = es.eigenvalues().minCoeff();
  lf_ = es.eigenvalues().maxCoeff();
  if (!(mu_ > 0.0)) throw std::invalid_argument("QuadraticObjective: Q is not positive definite");
}

double QuadraticObjective::value(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("QuadraticObjective::value: dimension mismatch");
  return 0.5 * x.dot(Q_ * x) + c_.dot(x);
}

Eigen::VectorXd QuadraticObjective::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != dim())
    throw std::invalid_argument("QuadraticObjective::gradient: dimension mismatch");
  return Q_ * x + c_;
}

ConstrainedProblem::ConstrainedProblem(QuadraticObjective objective,
                                       std::vector<Halfspace> constraints, Eigen::VectorXd witness,
                                       std::optional<ProblemMeta> meta)
    : objective_(std::move(objective)),
      constraints_(std::move(constraints)),
      witness_(std::move(witness)),
      meta_(std::move(meta)) {
  if (constraints_.empty()) throw std::invalid_argument("ConstrainedProblem: needs m >= 1 constraints");
  if (witness_.size() != objective_.dim())
    throw std::invalid_argument("ConstrainedProblem: witness dimension mismatch");
  alpha_min_ = std::numeric_limits<double>::infinity();
  for (const Halfspace& hs : constraints_) {
    if (hs.dim() != objective_.dim())
      throw std::invalid_argument("ConstrainedProblem: constraint dimension mismatch");
    alpha_min_ = std::min(alpha_min_, hs.a_norm);
  }
  if (!feasible(witness_, 1e-12))
    throw std::invalid_argument("ConstrainedProblem: witness is not feasible");
}

bool ConstrainedProblem::feasible(const Eigen::VectorXd& x, double tol) const {
  for (const Halfspace& hs : constraints_)
    if (hs.residual(x) > tol) return false;
  return true;
}

double f_value(const ConstrainedProblem& p, const Eigen::VectorXd& x) {
  return p.objective().value(x);
}

Eigen::VectorXd grad_f(const ConstrainedProblem& p, const Eigen::VectorXd& x) {
  return p.objective().gradient(x);
}

double F_value(const ConstrainedProblem& p, const Eigen::VectorXd& x, double gamma, double delta) {
  if (!(gamma > 0.0)) throw std::invalid_argument("F_value: gamma must be positive");
  if (delta < 0.0) throw std::invalid_argument("F_value: delta must be nonnegative");
  double penalty = 0.0;
  for (const Halfspace& hs : p.constraints()) penalty += penalty_value(x, hs, delta);
  return f_value(p, x) + gamma / static_cast<double>(p.m()) * penalty;
}

double F_value(const ConstrainedProblem& p, const Eigen::VectorXd& x, const PenaltyParams& params) {
  return F_value(p, x, params.gamma, params.delta);
}

Eigen::VectorXd grad_F(const ConstrainedProblem& p, const Eigen::VectorXd& x, double gamma,
                       double delta) {
  if (!(gamma > 0.0)) throw std::invalid_argument("grad_F: gamma must be positive");
  if (!(delta > 0.0)) throw std::invalid_argument("grad_F: delta must be positive");
  Eigen::VectorXd g = grad_f(p, x);
  const double w = gamma / static_cast<double>(p.m());
  for (const Halfspace& hs : p.constraints()) g += w * penalty_gradient(x, hs, delta);
  return g;
}

double dist_feasible_set(const ConstrainedProblem& p, const Eigen::VectorXd& x, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("dist_feasible_set: tol must be positive");
  if (x.size() != p.n()) throw std::invalid_argument("dist_feasible_set: dimension mismatch");
  if (p.feasible(x)) return 0.0;
  if (p.m() == 1) return halfspace_distance(x, p.constraint(0));
  return (x - project_polyhedron(p, x, tol)).norm();
}

ConstrainedProblem generate_problem(int n, int m, std::uint64_t seed, const GeneratorSpec& spec) {
  if (n < 1) throw std::invalid_argument("generate_problem: n must be >= 1");
  if (m < 1) throw std::invalid_argument("generate_problem: m must be >= 1");
  if (!(spec.eig_min > 0.0) || spec.eig_max < spec.eig_min)
    throw std::invalid_argument("generate_problem: need 0 < eig_min <= eig_max");
  if (!(spec.margin > 0.0)) throw std::invalid_argument("generate_problem: margin must be positive");
  if (spec.slack < 0.0) throw std::invalid_argument("generate_problem: slack must be nonnegative");
  if (!(spec.push > 0.0)) throw std::invalid_argument("generate_problem: push must be positive");

  SplitMix64 rng(seed);
  // Draw order is fixed: witness, Q basis, eigenvalues, normals+slacks, linear term.
  Eigen::VectorXd witness(n);
  for (int j = 0; j < n; ++j) witness[j] = rng.next_normal();

  Eigen::MatrixXd G(n, n);
  for (int r = 0; r < n; ++r)
    for (int col = 0; col < n; ++col) G(r, col) = rng.next_normal();
  const Eigen::MatrixXd V = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();

  Eigen::VectorXd evals(n);
  evals[0] = spec.eig_min;
  if (n > 1) evals[n - 1] = spec.eig_max;
  for (int j = 1; j + 1 < n; ++j) evals[j] = rng.next_uniform(spec.eig_min, spec.eig_max);
  Eigen::MatrixXd Q = V * evals.asDiagonal() * V.transpose();
  Q = 0.5 * (Q + Q.transpose()).eval();  // kill round-off asymmetry

  std::vector<Halfspace> constraints;
  constraints.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd dir(n);
    double norm = 0.0;
    do {
      for (int j = 0; j < n; ++j) dir[j] = rng.next_normal();
      norm = dir.norm();
    } while (norm < 1e-8);
    dir /= norm;
    const double slack = spec.slack * rng.next_double();
    constraints.emplace_back(dir, dir.dot(witness) + spec.margin + slack);
  }

  // Place the unconstrained minimizer: either pushed past constraint 0 so the
  // optimum sits on the boundary, or near the witness.
  Eigen::VectorXd target(n);
  if (spec.active_optimum) {
    const Halfspace& h0 = constraints.front();
    const Eigen::VectorXd boundary = witness + (h0.b - h0.a.dot(witness)) * h0.a;
    target = boundary + spec.push * h0.a;
  } else {
    for (int j = 0; j < n; ++j) target[j] = witness[j] + 0.3 * rng.next_normal();
  }
  Eigen::VectorXd c = -(Q * target);

  ProblemMeta meta{seed, "huberpen-gen-v1"};
  return ConstrainedProblem(QuadraticObjective(std::move(Q), std::move(c)), std::move(constraints),
                            std::move(witness), std::move(meta));
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  if (!arr.is_array()) throw std::invalid_argument("problem json: expected array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

std::string problem_to_json(const ConstrainedProblem& p) {
  json j;
  j["n"] = p.n();
  j["m"] = p.m();
  json rows = json::array();
  const Eigen::MatrixXd& Q = p.objective().Q();
  for (Eigen::Index r = 0; r < Q.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index col = 0; col < Q.cols(); ++col) row.push_back(Q(r, col));
    rows.push_back(std::move(row));
  }
  j["Q"] = std::move(rows);
  j["linear_term"] = vector_to_json(p.objective().c());
  json cons = json::array();
  for (const Halfspace& hs : p.constraints())
    cons.push_back(json{{"a", vector_to_json(hs.a)}, {"b", hs.b}});
  j["constraints"] = std::move(cons);
  j["witness"] = vector_to_json(p.witness());
  json meta;
  if (p.meta()) {
    meta["seed"] = p.meta()->seed;
    meta["generator"] = p.meta()->generator;
  } else {
    meta["seed"] = 0;
    meta["generator"] = "unspecified";
  }
  j["meta"] = std::move(meta);
  return j.dump(2) + "\n";
}

ConstrainedProblem problem_from_json(const std::string& text) {
  const json j = json::parse(text);
  const auto n = j.at("n").get<Eigen::Index>();
  const auto m = j.at("m").get<int>();
  const json& qrows = j.at("Q");
  if (static_cast<Eigen::Index>(qrows.size()) != n)
    throw std::invalid_argument("problem json: Q row count != n");
  Eigen::MatrixXd Q(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = qrows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != n)
      throw std::invalid_argument("problem json: Q is not n x n");
    for (Eigen::Index col = 0; col < n; ++col)
      Q(r, col) = row[static_cast<std::size_t>(col)].get<double>();
  }
  Eigen::VectorXd c = vector_from_json(j.at("linear_term"));
  const json& cons = j.at("constraints");
  if (static_cast<int>(cons.size()) != m)
    throw std::invalid_argument("problem json: constraint count != m");
  std::vector<Halfspace> constraints;
  constraints.reserve(cons.size());
  for (const json& cj : cons)
    constraints.emplace_back(vector_from_json(cj.at("a")), cj.at("b").get<double>());
  Eigen::VectorXd witness = vector_from_json(j.at("witness"));

  std::optional<ProblemMeta> meta;
  if (j.contains("meta")) {
    meta = ProblemMeta{j["meta"].value("seed", std::uint64_t{0}),
                       j["meta"].value("generator", std::string{})};
  }
  return ConstrainedProblem(QuadraticObjective(std::move(Q), std::move(c)), std::move(constraints),
                            std::move(witness), std::move(meta));
}

void save_problem(const ConstrainedProblem& p, const std::string& path) {
  write_file(path, problem_to_json(p));
}

ConstrainedProblem load_problem(const std::string& path) {
  return problem_from_json(read_file(path));
}

}  // namespace huberpen
