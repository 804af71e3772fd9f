#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "huberpen/checks.hpp"
#include "huberpen/oracle.hpp"
#include "huberpen/problem.hpp"
#include "huberpen/schedule.hpp"
#include "huberpen/solver.hpp"
#include "huberpen/version.hpp"

namespace py = pybind11;
using namespace huberpen;

namespace {

SolverConfig make_config(const Schedule& sch, std::int64_t iterations, std::uint64_t seed,
                         bool store_iterates) {
  SolverConfig cfg;
  cfg.schedule = sch;
  cfg.iterations = iterations;
  cfg.seed = seed;
  cfg.store_iterates = store_iterates;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(huberpen, m) {
  m.doc() = "Incremental penalty solver for strongly convex programs under linear inequalities";
  m.attr("__version__") = kVersion;

  py::register_exception<OracleError>(m, "OracleError");
  py::register_exception<DivergenceError>(m, "DivergenceError");

  py::class_<Halfspace>(m, "Halfspace")
      .def(py::init<Eigen::VectorXd, double>(), py::arg("a"), py::arg("b"))
      .def_readonly("a", &Halfspace::a)
      .def_readonly("b", &Halfspace::b)
      .def_readonly("a_norm", &Halfspace::a_norm)
      .def("residual", &Halfspace::residual);

  m.def("one_sided_huber", &one_sided_huber, py::arg("s"), py::arg("delta"));
  m.def("one_sided_huber_deriv", &one_sided_huber_deriv, py::arg("s"), py::arg("delta"));
  m.def("penalty_value", &penalty_value, py::arg("x"), py::arg("hs"), py::arg("delta"));
  m.def("penalty_gradient", &penalty_gradient, py::arg("x"), py::arg("hs"), py::arg("delta"));
  m.def("gradient_delta_shift_bound", &gradient_delta_shift_bound, py::arg("delta1"),
        py::arg("delta2"));
  m.def("halfspace_distance", &halfspace_distance, py::arg("x"), py::arg("hs"));

  py::class_<QuadraticObjective>(m, "QuadraticObjective")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), py::arg("Q"), py::arg("c"))
      .def_property_readonly("Q", &QuadraticObjective::Q)
      .def_property_readonly("c", &QuadraticObjective::c)
      .def_property_readonly("mu", &QuadraticObjective::strong_convexity)
      .def_property_readonly("grad_lipschitz", &QuadraticObjective::gradient_lipschitz);

  py::class_<ConstrainedProblem>(m, "ConstrainedProblem")
      .def(py::init<QuadraticObjective, std::vector<Halfspace>, Eigen::VectorXd,
                    std::optional<ProblemMeta>>(),
           py::arg("objective"), py::arg("constraints"), py::arg("witness"),
           py::arg("meta") = std::nullopt)
      .def_property_readonly("n", &ConstrainedProblem::n)
      .def_property_readonly("m", &ConstrainedProblem::m)
      .def_property_readonly("objective", &ConstrainedProblem::objective)
      .def_property_readonly("constraints", &ConstrainedProblem::constraints)
      .def_property_readonly("witness", &ConstrainedProblem::witness)
      .def_property_readonly("alpha_min", &ConstrainedProblem::alpha_min)
      .def("feasible", &ConstrainedProblem::feasible, py::arg("x"), py::arg("tol") = 0.0);

  py::class_<ProblemMeta>(m, "ProblemMeta")
      .def_readonly("seed", &ProblemMeta::seed)
      .def_readonly("generator", &ProblemMeta::generator);

  py::class_<GeneratorSpec>(m, "GeneratorSpec")
      .def(py::init<>())
      .def_readwrite("eig_min", &GeneratorSpec::eig_min)
      .def_readwrite("eig_max", &GeneratorSpec::eig_max)
      .def_readwrite("margin", &GeneratorSpec::margin)
      .def_readwrite("slack", &GeneratorSpec::slack)
      .def_readwrite("push", &GeneratorSpec::push)
      .def_readwrite("active_optimum", &GeneratorSpec::active_optimum);

  m.def("generate_problem", &generate_problem, py::arg("n"), py::arg("m"), py::arg("seed"),
        py::arg("spec") = GeneratorSpec{});
  m.def("f_value", &f_value);
  m.def("grad_f", &grad_f);
  m.def("F_value", py::overload_cast<const ConstrainedProblem&, const Eigen::VectorXd&, double,
                                     double>(&F_value),
        py::arg("p"), py::arg("x"), py::arg("gamma"), py::arg("delta"));
  m.def("grad_F", &grad_F, py::arg("p"), py::arg("x"), py::arg("gamma"), py::arg("delta"));
  m.def("dist_feasible_set", &dist_feasible_set, py::arg("p"), py::arg("x"),
        py::arg("tol") = 1e-10);
  m.def("problem_to_json", &problem_to_json);
  m.def("problem_from_json", &problem_from_json);
  m.def("save_problem", &save_problem);
  m.def("load_problem", &load_problem);

  py::class_<Schedule>(m, "Schedule")
      .def(py::init([](double g, double d, double s, double gamma0, double delta0, double step0) {
             return Schedule{g, d, s, gamma0, delta0, step0};
           }),
           py::arg("g") = 0.25, py::arg("d") = 0.75, py::arg("s") = 1.0, py::arg("gamma0") = 1.0,
           py::arg("delta0") = 1.0, py::arg("step0") = 1.0)
      .def_readwrite("g", &Schedule::g)
      .def_readwrite("d", &Schedule::d)
      .def_readwrite("s", &Schedule::s)
      .def_readwrite("gamma0", &Schedule::gamma0)
      .def_readwrite("delta0", &Schedule::delta0)
      .def_readwrite("step0", &Schedule::step0)
      .def("gamma", &Schedule::gamma)
      .def("delta", &Schedule::delta)
      .def("step", &Schedule::step)
      .def("product_bound", &Schedule::product_bound)
      .def("drift_bound", &Schedule::drift_bound, py::arg("mu"), py::arg("k"));

  m.def("rate_exponent", &rate_exponent);
  m.def("validate", [](const Schedule& sch) {
    std::vector<std::string> out;
    for (const Diagnostic& d : validate(sch)) out.push_back(to_string(d));
    return out;
  });
  m.def("schedule_is_valid", [](const Schedule& sch) { return is_valid(validate(sch)); });

  py::class_<Snapshot>(m, "Snapshot")
      .def_readonly("k", &Snapshot::k)
      .def_readonly("f_value", &Snapshot::f_value)
      .def_readonly("dist_feasible", &Snapshot::dist_feasible)
      .def_readonly("sq_err_to_opt", &Snapshot::sq_err_to_opt)
      .def_readonly("gamma", &Snapshot::gamma)
      .def_readonly("delta", &Snapshot::delta)
      .def_readonly("step", &Snapshot::step)
      .def_readonly("index_sampled", &Snapshot::index_sampled);

  py::class_<SolverTrace>(m, "SolverTrace")
      .def_readonly("snapshots", &SolverTrace::snapshots)
      .def_readonly("final_point", &SolverTrace::final_point)
      .def_readonly("diverged", &SolverTrace::diverged)
      .def_readonly("diverged_at", &SolverTrace::diverged_at)
      .def("to_csv", [](const SolverTrace& t) {
        std::ostringstream ss;
        write_trace_csv(t, ss);
        return ss.str();
      });

  m.def(
      "solve",
      [](const ConstrainedProblem& p, const Schedule& sch, std::int64_t iterations,
         std::uint64_t seed, std::optional<Eigen::VectorXd> x_star, bool store_iterates) {
        return run(p, make_config(sch, iterations, seed, store_iterates), x_star);
      },
      py::arg("p"), py::arg("schedule"), py::arg("iterations"), py::arg("seed") = 0,
      py::arg("x_star") = std::nullopt, py::arg("store_iterates") = false);

  py::class_<EnsembleAggregate>(m, "EnsembleAggregate")
      .def_readonly("ks", &EnsembleAggregate::ks)
      .def_readonly("mean_sq_err", &EnsembleAggregate::mean_sq_err)
      .def_readonly("stderr_sq_err", &EnsembleAggregate::stderr_sq_err)
      .def_readonly("mean_dist_feasible", &EnsembleAggregate::mean_dist_feasible)
      .def_readonly("failed_seeds", &EnsembleAggregate::failed_seeds)
      .def_readonly("seeds_used", &EnsembleAggregate::seeds_used);

  m.def(
      "solve_ensemble",
      [](const ConstrainedProblem& p, const Schedule& sch, std::int64_t iterations, int num_seeds,
         std::uint64_t seed, const Eigen::VectorXd& x_star, int max_threads) {
        return run_ensemble(p, make_config(sch, iterations, seed, false), num_seeds, x_star,
                            max_threads)
            .aggregate;
      },
      py::arg("p"), py::arg("schedule"), py::arg("iterations"), py::arg("num_seeds"),
      py::arg("seed"), py::arg("x_star"), py::arg("max_threads") = 0);

  py::class_<OracleSolution>(m, "OracleSolution")
      .def_readonly("x_star", &OracleSolution::x_star)
      .def_readonly("f_star", &OracleSolution::f_star)
      .def_readonly("active_set", &OracleSolution::active_set)
      .def_readonly("multipliers", &OracleSolution::multipliers)
      .def_readonly("tolerance", &OracleSolution::tolerance)
      .def_readonly("kkt_residual", &OracleSolution::kkt_residual);

  m.def("solve_constrained_exact", &solve_constrained_exact, py::arg("p"), py::arg("tol") = 1e-10);
  m.def("minimize_penalized", &minimize_penalized, py::arg("p"), py::arg("gamma"), py::arg("delta"),
        py::arg("tol"));
  m.def("project_polyhedron", &project_polyhedron, py::arg("p"), py::arg("x"),
        py::arg("tol") = 1e-10);
  m.def("subgradient_bound", &subgradient_bound, py::arg("p"), py::arg("R"));
  m.def("iterate_radius_bound", &iterate_radius_bound, py::arg("p"), py::arg("product_bound"),
        py::arg("tol") = 1e-9);
  m.def("estimate_hoffman_ratio", &estimate_hoffman_ratio, py::arg("p"), py::arg("samples"),
        py::arg("seed"));

  py::class_<RateFit>(m, "RateFit")
      .def_readonly("slope", &RateFit::slope)
      .def_readonly("intercept", &RateFit::intercept)
      .def_readonly("r_squared", &RateFit::r_squared)
      .def_readonly("slope_stderr", &RateFit::slope_stderr)
      .def_readonly("points_used", &RateFit::points_used)
      .def_readonly("excluded_ks", &RateFit::excluded_ks);

  m.def("rate_fit", &rate_fit, py::arg("ks"), py::arg("mse"), py::arg("k_min"), py::arg("k_max"));
  m.def("oracle_to_json", &oracle_to_json);
  m.def("oracle_from_json", &oracle_from_json);
}
