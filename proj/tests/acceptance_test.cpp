// Acceptance suite: one test case per exit criterion, each printing a
// PASS/FAIL line with its key measurements.

#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "huberpen/checks.hpp"
#include "huberpen/io_util.hpp"
#include "huberpen/oracle.hpp"
#include "huberpen/problem.hpp"
#include "huberpen/solver.hpp"

using namespace huberpen;
namespace fs = std::filesystem;

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %d (%s): %s  [%s]\n", criterion, name.c_str(), ok ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

GeneratorSpec active_spec() {
  GeneratorSpec s;
  s.active_optimum = true;
  return s;
}

// Frozen acceptance instance for the rate experiment. Its boundary-active
// optimum has a single active constraint with multiplier ~0.42, so the
// per-constraint penalty weight gamma_k/m overtakes the multiplier well
// before the fit window opens at k = 1e3.
constexpr std::uint64_t kRateSeed = 45;

struct RateExperiment {
  EnsembleAggregate aggregate;
  RateFit fit;
  double seconds = 0.0;
};

// Criteria 6 and 7 share one ensemble run: n=5, m=8, active optimum,
// schedule s=1, g=1/4, d=3/4, step0 = 1/(2 L_f), 1e5 iterations, 30 seeds.
const RateExperiment& rate_experiment() {
  static const RateExperiment experiment = [] {
    RateExperiment out;
    Stopwatch timer;
    const ConstrainedProblem p = generate_problem(5, 8, kRateSeed, active_spec());
    const OracleSolution sol = solve_constrained_exact(p, 1e-10);
    SolverConfig cfg;
    cfg.schedule = Schedule{0.25, 0.75, 1.0, 1.0, 1.0,
                            1.0 / (2.0 * p.objective().gradient_lipschitz())};
    cfg.iterations = 100000;
    cfg.seed = 1;
    const EnsembleResult res = run_ensemble(p, cfg, 30, sol.x_star, 0);
    out.aggregate = res.aggregate;
    out.fit = rate_fit(out.aggregate.ks, out.aggregate.mean_sq_err, 1000, 100000);
    out.seconds = timer.seconds();
    return out;
  }();
  return experiment;
}

}  // namespace

TEST_CASE("criterion 1: penalty invariant suite") {
  Stopwatch timer;
  const CheckSuiteResult suite = check_penalty_invariants(/*seed=*/20250801, /*samples=*/10000);
  const double elapsed = timer.seconds();
  double min_margin = 1e300;
  for (const CheckItem& item : suite.items) min_margin = std::min(min_margin, item.min_margin);
  const bool ok = suite.passed && elapsed < 5.0;
  report(1, "penalty invariants", ok,
         "min margin " + shortest(min_margin) + ", " + shortest(elapsed) + " s");
  for (const CheckItem& item : suite.items) {
    INFO(item.name, " margin ", item.min_margin);
    CHECK(item.passed);
  }
  CHECK(elapsed < 5.0);
}

TEST_CASE("criterion 2: gradient width-shift bound, 100 pairs") {
  Stopwatch timer;
  const CheckSuiteResult suite =
      check_gradient_shift_bound(/*seed=*/20250802, /*pairs=*/100, /*points_per_pair=*/10000);
  const double elapsed = timer.seconds();
  const bool ok = suite.passed && elapsed < 10.0;
  report(2, "gradient width-shift bound", ok,
         "bound margin " + shortest(suite.items[0].min_margin) + ", attainment margin " +
             shortest(suite.items[1].min_margin) + ", " + shortest(elapsed) + " s");
  CHECK(suite.items[0].passed);
  CHECK(suite.items[1].passed);
  CHECK(elapsed < 10.0);
}

TEST_CASE("criterion 3: minimizer drift bound on 5 instances") {
  Stopwatch timer;
  const Schedule recommended;
  const CheckSuiteResult suite = check_drift_suite({501, 502, 503, 504, 505}, recommended,
                                                   /*k_max=*/256, /*tol=*/1e-6,
                                                   /*oracle_tol=*/1e-9);
  const double elapsed = timer.seconds();
  double min_margin = 1e300;
  for (const CheckItem& item : suite.items) min_margin = std::min(min_margin, item.min_margin);
  const bool ok = suite.passed && elapsed < 60.0;
  report(3, "minimizer drift bound", ok,
         "min margin " + shortest(min_margin) + ", " + shortest(elapsed) + " s");
  for (const CheckItem& item : suite.items) {
    INFO(item.name, " margin ", item.min_margin);
    CHECK(item.passed);
  }
  CHECK(elapsed < 60.0);
}

TEST_CASE("criterion 4: level-set containment of the drift-check minimizers") {
  // same instances and k values as criterion 3, plus the k+1 companions
  std::vector<std::int64_t> ks;
  for (std::int64_t k = 1; k <= 256; k *= 2) {
    ks.push_back(k);
    ks.push_back(k + 1);
  }
  const CheckSuiteResult suite = check_level_set_suite({501, 502, 503, 504, 505}, Schedule{}, ks,
                                                       /*tol=*/1e-8, /*oracle_tol=*/1e-9);
  double min_margin = 1e300;
  for (const CheckItem& item : suite.items) min_margin = std::min(min_margin, item.min_margin);
  report(4, "level-set containment", suite.passed, "min margin " + shortest(min_margin));
  for (const CheckItem& item : suite.items) {
    INFO(item.name, " margin ", item.min_margin);
    CHECK(item.passed);
  }
}

TEST_CASE("criterion 5: optimality-gap inequality") {
  Stopwatch timer;
  const CheckSuiteResult suite = check_gap_suite({601, 602, 603, 604, 605},
                                                 {611, 612, 613, 614, 615}, /*tol=*/1e-8);
  const double elapsed = timer.seconds();
  double min_margin = 1e300;
  for (const CheckItem& item : suite.items) min_margin = std::min(min_margin, item.min_margin);
  const bool ok = suite.passed && elapsed < 60.0;
  report(5, "optimality-gap inequality", ok,
         "min margin " + shortest(min_margin) + ", " + shortest(elapsed) + " s");
  for (const CheckItem& item : suite.items) {
    INFO(item.name, " ", item.detail, " margin ", item.min_margin);
    CHECK(item.passed);
  }
  CHECK(elapsed < 60.0);
}

TEST_CASE("criterion 6: mean-square-error decay rate") {
  const RateExperiment& exp = rate_experiment();
  const bool slope_ok = exp.fit.slope >= -0.9 && exp.fit.slope <= -0.25;
  const bool r2_ok = exp.fit.r_squared >= 0.9;
  const bool time_ok = exp.seconds < 120.0;
  report(6, "rate of mean squared error", slope_ok && r2_ok && time_ok,
         "slope " + shortest(exp.fit.slope) + " +- " + shortest(exp.fit.slope_stderr) +
             ", r^2 " + shortest(exp.fit.r_squared) + ", " + shortest(exp.seconds) + " s");
  CHECK(exp.aggregate.seeds_used == 30);
  CHECK(exp.fit.slope >= -0.9);
  CHECK(exp.fit.slope <= -0.25);
  CHECK(exp.fit.r_squared >= 0.9);
  CHECK(exp.seconds < 120.0);
}

TEST_CASE("criterion 7: feasibility distance decay") {
  const RateExperiment& exp = rate_experiment();
  double dist_1e3 = -1.0;
  for (std::size_t i = 0; i < exp.aggregate.ks.size(); ++i) {
    if (exp.aggregate.ks[i] >= 1000) {
      dist_1e3 = exp.aggregate.mean_dist_feasible[i];
      break;
    }
  }
  const double dist_1e5 = exp.aggregate.mean_dist_feasible.back();
  const bool ok = dist_1e3 > 0.0 && dist_1e5 <= 0.05 * dist_1e3;
  report(7, "feasibility distance decay", ok,
         "mean dist " + shortest(dist_1e3) + " at k~1e3 vs " + shortest(dist_1e5) +
             " at k=1e5 (ratio " + shortest(dist_1e5 / dist_1e3) + ")");
  CHECK(dist_1e3 > 0.0);
  CHECK(dist_1e5 <= 0.05 * dist_1e3);
}

TEST_CASE("criterion 8: oracle cross-validation") {
  Stopwatch timer;
  double worst_gap = 0.0;
  bool all_ok = true;
  for (std::uint64_t seed = 701; seed <= 710; ++seed) {
    SplitMix64 dims(seed);
    const int n = 2 + static_cast<int>(dims.next_below(3));  // 2..4
    const int m = 2 + static_cast<int>(dims.next_below(5));  // 2..6
    const ConstrainedProblem p = generate_problem(n, m, seed, active_spec());
    const OracleSolution sol = solve_constrained_exact(p, 1e-10);
    // tol sits an order above the gradient's round-off floor at
    // gamma/delta = 1e10 and an order below the 1e-3 budget.
    const Eigen::VectorXd xg = minimize_penalized(p, /*gamma=*/1e4, /*delta=*/1e-6, /*tol=*/1e-4);
    const double gap = (xg - sol.x_star).norm();
    worst_gap = std::max(worst_gap, gap);
    all_ok = all_ok && gap <= 1e-3;
    CHECK(gap <= 1e-3);
  }

  // 2-D grid cross-checks at 1e-3 resolution: a box-corner optimum and an
  // interior optimum, both grid-localizable.
  const double h = 1e-3;
  auto grid_argmin = [&](const ConstrainedProblem& p, double lo, double hi) {
    double best = 1e300;
    Eigen::VectorXd arg(2);
    Eigen::VectorXd cand(2);
    for (double x = lo; x <= hi + 1e-12; x += h)
      for (double y = lo; y <= hi + 1e-12; y += h) {
        cand[0] = x;
        cand[1] = y;
        if (!p.feasible(cand, 1e-12)) continue;
        const double v = f_value(p, cand);
        if (v < best) {
          best = v;
          arg = cand;
        }
      }
    return arg;
  };

  Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd w(2);
  w << 0.0, 0.0;
  std::vector<Halfspace> box;
  {
    Eigen::VectorXd e1(2), e2(2);
    e1 << 1.0, 0.0;
    e2 << 0.0, 1.0;
    box.emplace_back(e1, 1.0);
    box.emplace_back(e2, 1.0);
  }
  Eigen::VectorXd c_corner(2);
  c_corner << -2.0, -3.0;  // unconstrained minimizer (2, 3): corner (1, 1) is optimal
  const ConstrainedProblem corner(QuadraticObjective(I2, c_corner), box, w);
  const Eigen::VectorXd g_corner = grid_argmin(corner, -0.5, 1.0);
  const OracleSolution s_corner = solve_constrained_exact(corner, 1e-10);
  const double corner_gap = (g_corner - s_corner.x_star).norm();
  CHECK(corner_gap <= 2.0 * h);

  Eigen::VectorXd c_int(2);
  c_int << -0.3004, 0.20037;  // interior optimum off the grid
  const ConstrainedProblem interior(QuadraticObjective(I2, c_int), box, w);
  const Eigen::VectorXd g_int = grid_argmin(interior, -0.5, 1.0);
  const OracleSolution s_int = solve_constrained_exact(interior, 1e-10);
  const double interior_gap = (g_int - s_int.x_star).norm();
  CHECK(interior_gap <= 2.0 * h);

  const double elapsed = timer.seconds();
  const bool ok = all_ok && corner_gap <= 2.0 * h && interior_gap <= 2.0 * h && elapsed < 60.0;
  report(8, "oracle cross-validation", ok,
         "worst penalized-vs-exact gap " + shortest(worst_gap) + ", grid gaps " +
             shortest(corner_gap) + " / " + shortest(interior_gap) + ", " + shortest(elapsed) +
             " s");
  CHECK(elapsed < 60.0);
}

TEST_CASE("criterion 9: solve determinism through the CLI") {
  const char* cli = std::getenv("HUBERPEN_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "HUBERPEN_CLI must point at the built binary");
  const fs::path dir = fs::temp_directory_path() / "huberpen_acceptance_c9";
  fs::create_directories(dir);
  const std::string problem = (dir / "p.json").string();
  const std::string t1 = (dir / "t1.csv").string();
  const std::string t2 = (dir / "t2.csv").string();

  auto sh = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
  };
  bool ok = sh("gen --n 4 --m 5 --seed 90 --active-optimum --out " + problem) == 0;
  ok = ok && sh("solve --problem " + problem + " --out " + t1 + " --iters 20000 --seed 17") == 0;
  ok = ok && sh("solve --problem " + problem + " --out " + t2 + " --iters 20000 --seed 17") == 0;
  std::string bytes1, bytes2;
  if (ok) {
    bytes1 = read_file(t1);
    bytes2 = read_file(t2);
    ok = !bytes1.empty() && bytes1 == bytes2;
  }
  report(9, "solve determinism", ok,
         ok ? "byte-identical traces (" + std::to_string(bytes1.size()) + " bytes)"
            : "traces differ or a command failed");
  CHECK(ok);
  std::error_code ec;
  fs::remove_all(dir, ec);
}
