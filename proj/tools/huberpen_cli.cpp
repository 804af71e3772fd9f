// Command-line harness: problem generation, solving, oracle runs, ensemble
// sweeps with rate reports, and the inequality check suites.
//
// Exit codes: 0 success, 1 check/assertion failure, 2 usage or validation
// error, 3 numerical failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "huberpen/checks.hpp"
#include "huberpen/io_util.hpp"
#include "huberpen/oracle.hpp"
#include "huberpen/problem.hpp"
#include "huberpen/schedule.hpp"
#include "huberpen/solver.hpp"
#include "huberpen/version.hpp"

namespace {

using nlohmann::json;
using namespace huberpen;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct ScheduleFlags {
  double g = 0.25;
  double d = 0.75;
  double s = 1.0;
  double gamma0 = 1.0;
  double delta0 = 1.0;
  double step0 = 0.0;  // 0 means auto: 1 / (2 L_f)
};

void add_schedule_flags(CLI::App* cmd, ScheduleFlags& fl) {
  cmd->add_option("--g", fl.g, "gamma exponent: gamma_k = gamma0 * k^g")->capture_default_str();
  cmd->add_option("--d", fl.d, "delta exponent: delta_k = delta0 * k^-d")->capture_default_str();
  cmd->add_option("--s", fl.s, "step exponent: step_k = step0 * k^-s")->capture_default_str();
  cmd->add_option("--gamma0", fl.gamma0, "gamma scale")->capture_default_str();
  cmd->add_option("--delta0", fl.delta0, "delta scale")->capture_default_str();
  cmd->add_option("--step0", fl.step0, "step scale; 0 selects 1/(2 L_f)")->capture_default_str();
}

Schedule make_schedule(const ScheduleFlags& fl, const ConstrainedProblem& p) {
  Schedule sch;
  sch.g = fl.g;
  sch.d = fl.d;
  sch.s = fl.s;
  sch.gamma0 = fl.gamma0;
  sch.delta0 = fl.delta0;
  sch.step0 = fl.step0 > 0.0 ? fl.step0 : 1.0 / (2.0 * p.objective().gradient_lipschitz());
  return sch;
}

json schedule_to_json(const Schedule& sch) {
  return json{{"g", sch.g},           {"d", sch.d},           {"s", sch.s},
              {"gamma0", sch.gamma0}, {"delta0", sch.delta0}, {"step0", sch.step0}};
}

Schedule schedule_from_json(const json& j) {
  Schedule sch;
  sch.g = j.at("g").get<double>();
  sch.d = j.at("d").get<double>();
  sch.s = j.at("s").get<double>();
  sch.gamma0 = j.at("gamma0").get<double>();
  sch.delta0 = j.at("delta0").get<double>();
  sch.step0 = j.at("step0").get<double>();
  return sch;
}

int report_schedule_diagnostics(const std::vector<Diagnostic>& diags) {
  for (const Diagnostic& d : diags) {
    (d.severity == Severity::error ? std::cerr : std::cout) << to_string(d) << "\n";
  }
  return is_valid(diags) ? kExitOk : kExitUsage;
}

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::is_regular_file(path))
    throw UsageError(std::string(what) + " not found: " + path);
}

// ---------------------------------------------------------------- gen

int cmd_gen(const std::string& out, int n, int m, std::uint64_t seed, const GeneratorSpec& spec,
            bool figure1) {
  if (figure1) {
    // Penalty profile samples h_delta(x; 1, 1) for the constraint x - 1 <= 0,
    // delta in {1/4, 1/2, 1}, x in [-0.5, 2].
    std::ostringstream csv;
    csv << "x,h_delta_0.25,h_delta_0.5,h_delta_1\n";
    const Halfspace hs(Eigen::VectorXd::Ones(1), 1.0);
    for (int i = 0; i <= 1000; ++i) {
      const double x = static_cast<double>(i - 200) / 400.0;
      Eigen::VectorXd xv(1);
      xv[0] = x;
      csv << shortest(x) << ',' << shortest(penalty_value(xv, hs, 0.25)) << ','
          << shortest(penalty_value(xv, hs, 0.5)) << ',' << shortest(penalty_value(xv, hs, 1.0))
          << '\n';
    }
    write_file(out, csv.str());
    std::cout << "wrote penalty profile to " << out << "\n";
    return kExitOk;
  }
  if (n < 1 || m < 1) {
    std::cerr << "gen: --n and --m must be >= 1\n";
    return kExitUsage;
  }
  const ConstrainedProblem p = generate_problem(n, m, seed, spec);
  save_problem(p, out);
  std::cout << "wrote problem (n=" << n << ", m=" << m << ", seed=" << seed << ") to " << out
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- solve

struct SolveFlags {
  std::string problem_path;
  std::string out;
  std::string manifest_path;
  std::string oracle_path;
  std::string replay_path;
  std::string init = "witness";
  ScheduleFlags schedule;
  std::int64_t iterations = 100000;
  std::uint64_t seed = 0;
  std::int64_t record_every = 1;
  std::string grid = "geometric";
};

std::optional<Eigen::VectorXd> parse_initial_point(const std::string& text) {
  if (text == "witness") return std::nullopt;
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

std::string g_command_echo;  // full invocation, recorded in manifests

json manifest_json(const std::string& command, const SolveFlags& fl, const Schedule& sch,
                   const std::string& problem_hash, const std::vector<std::uint64_t>& seeds,
                   double duration_s) {
  json j;
  j["command"] = command;
  j["command_echo"] = g_command_echo;
  j["version"] = kVersion;
  j["problem"] = json{{"path", fl.problem_path}, {"fnv1a64", problem_hash}};
  j["oracle_path"] = fl.oracle_path.empty() ? json() : json(fl.oracle_path);
  j["schedule"] = schedule_to_json(sch);
  j["iterations"] = fl.iterations;
  j["seeds"] = seeds;
  j["record_every"] = fl.record_every;
  j["grid"] = fl.grid;
  j["initial_point"] = fl.init;
  j["trace"] = fl.out;
  j["duration_seconds"] = duration_s;
  return j;
}

int cmd_solve(SolveFlags fl) {
  Schedule sch;
  bool schedule_fixed = false;
  if (!fl.replay_path.empty()) {
    require_file(fl.replay_path, "manifest");
    const json man = json::parse(read_file(fl.replay_path));
    fl.problem_path = man.at("problem").at("path").get<std::string>();
    const std::string recorded_hash = man.at("problem").at("fnv1a64").get<std::string>();
    const std::string actual_hash = fnv1a64_hex(read_file(fl.problem_path));
    if (recorded_hash != actual_hash) {
      std::cerr << "solve --replay: problem file hash mismatch (recorded " << recorded_hash
                << ", actual " << actual_hash << ")\n";
      return kExitUsage;
    }
    sch = schedule_from_json(man.at("schedule"));
    schedule_fixed = true;
    fl.iterations = man.at("iterations").get<std::int64_t>();
    fl.seed = man.at("seeds")[0].get<std::uint64_t>();
    fl.record_every = man.at("record_every").get<std::int64_t>();
    fl.grid = man.at("grid").get<std::string>();
    fl.init = man.at("initial_point").get<std::string>();
    if (!man.at("oracle_path").is_null()) fl.oracle_path = man["oracle_path"].get<std::string>();
    if (fl.out.empty()) fl.out = man.at("trace").get<std::string>();
  }
  if (fl.problem_path.empty() || fl.out.empty()) {
    std::cerr << "solve: --problem and --out are required\n";
    return kExitUsage;
  }
  require_file(fl.problem_path, "problem file");
  if (!fl.oracle_path.empty()) require_file(fl.oracle_path, "oracle file");

  const std::string problem_bytes = read_file(fl.problem_path);
  const ConstrainedProblem p = problem_from_json(problem_bytes);
  if (!schedule_fixed) sch = make_schedule(fl.schedule, p);

  const auto diags = validate(sch);
  if (const int rc = report_schedule_diagnostics(diags); rc != kExitOk) return rc;

  SolverConfig cfg;
  cfg.schedule = sch;
  cfg.iterations = fl.iterations;
  cfg.seed = fl.seed;
  cfg.record_every = fl.record_every;
  cfg.grid = fl.grid == "arithmetic" ? SnapshotGrid::arithmetic : SnapshotGrid::geometric;
  cfg.initial_point = parse_initial_point(fl.init);

  std::optional<Eigen::VectorXd> x_star;
  if (!fl.oracle_path.empty()) x_star = load_oracle(fl.oracle_path).x_star;

  const auto t0 = std::chrono::steady_clock::now();
  const SolverTrace trace = run(p, cfg, x_star);
  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream csv;
  write_trace_csv(trace, csv);
  write_file(fl.out, csv.str());

  const std::string manifest_path =
      fl.manifest_path.empty() ? fl.out + ".manifest.json" : fl.manifest_path;
  write_file(manifest_path,
             manifest_json("solve", fl, sch, fnv1a64_hex(problem_bytes), {fl.seed}, duration)
                     .dump(2) +
                 "\n");

  const Snapshot& last = trace.snapshots.back();
  std::cout << "trace: " << fl.out << " (" << trace.snapshots.size() << " snapshots)\n"
            << "manifest: " << manifest_path << "\n"
            << "final snapshot k=" << last.k << " f=" << shortest(last.f_value)
            << " dist_feasible=" << shortest(last.dist_feasible) << "\n";
  if (trace.diverged) {
    std::cerr << "solve: diverged at k = " << trace.diverged_at << "; partial trace retained\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- oracle

int cmd_oracle(const std::string& problem_path, const std::string& out, double tol) {
  require_file(problem_path, "problem file");
  const ConstrainedProblem p = load_problem(problem_path);
  if (p.m() > 20) {
    std::cerr << "oracle: m = " << p.m()
              << " exceeds the active-set enumeration cap (20); refusing\n";
    return kExitUsage;
  }
  const OracleSolution sol = solve_constrained_exact(p, tol);
  save_oracle(sol, out);
  std::cout << "x_star = [";
  for (Eigen::Index i = 0; i < sol.x_star.size(); ++i)
    std::cout << (i ? ", " : "") << shortest(sol.x_star[i]);
  std::cout << "]\nf_star = " << shortest(sol.f_star) << "\nactive set = {";
  for (std::size_t i = 0; i < sol.active_set.size(); ++i)
    std::cout << (i ? ", " : "") << sol.active_set[i];
  std::cout << "}\nkkt residual = " << shortest(sol.kkt_residual) << "\nwrote " << out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const std::string& problem_path, const std::string& oracle_path,
              const std::string& out, const std::string& report_path, int seeds,
              std::uint64_t seed_base, std::int64_t iterations, const ScheduleFlags& sfl,
              std::int64_t k_min, std::int64_t k_max, int threads) {
  require_file(problem_path, "problem file");
  require_file(oracle_path, "oracle file");
  const ConstrainedProblem p = load_problem(problem_path);
  const OracleSolution sol = load_oracle(oracle_path);
  const Schedule sch = make_schedule(sfl, p);
  const auto diags = validate(sch);
  if (const int rc = report_schedule_diagnostics(diags); rc != kExitOk) return rc;

  SolverConfig cfg;
  cfg.schedule = sch;
  cfg.iterations = iterations;
  cfg.seed = seed_base;

  const auto t0 = std::chrono::steady_clock::now();
  const EnsembleResult res = run_ensemble(p, cfg, seeds, sol.x_star, threads);
  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!res.aggregate.failed_seeds.empty()) {
    std::cerr << "sweep: " << res.aggregate.failed_seeds.size()
              << " seed(s) diverged; aggregate uses the surviving " << res.aggregate.seeds_used
              << "\n";
  }
  if (res.aggregate.seeds_used == 0) {
    std::cerr << "sweep: every seed diverged\n";
    return kExitNumerical;
  }

  std::ostringstream csv;
  write_aggregate_csv(res.aggregate, csv);
  write_file(out, csv.str());

  if (k_max <= 0) k_max = iterations;
  const RateFit fit = rate_fit(res.aggregate.ks, res.aggregate.mean_sq_err, k_min, k_max);
  std::cout << "aggregate: " << out << " (" << res.aggregate.seeds_used << " seeds, "
            << shortest(duration) << " s)\n"
            << "rate fit over k in [" << k_min << ", " << k_max << "]: slope = "
            << shortest(fit.slope) << " +- " << shortest(fit.slope_stderr)
            << ", r^2 = " << shortest(fit.r_squared) << ", intercept = " << shortest(fit.intercept)
            << " (" << fit.points_used << " points)\n";

  if (!report_path.empty()) {
    json rep;
    rep["slope"] = fit.slope;
    rep["slope_stderr"] = fit.slope_stderr;
    rep["intercept"] = fit.intercept;
    rep["r_squared"] = fit.r_squared;
    rep["points_used"] = fit.points_used;
    rep["k_min"] = k_min;
    rep["k_max"] = k_max;
    rep["seeds"] = seeds;
    rep["seeds_used"] = res.aggregate.seeds_used;
    rep["failed_seeds"] = res.aggregate.failed_seeds;
    rep["duration_seconds"] = duration;
    write_file(report_path, rep.dump(2) + "\n");
    std::cout << "report: " << report_path << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- check

json item_to_json(const CheckItem& it) {
  return json{{"name", it.name},
              {"passed", it.passed},
              {"min_margin", it.min_margin},
              {"samples", it.samples},
              {"detail", it.detail}};
}

int cmd_check(std::vector<std::string> only, const std::string& out, std::uint64_t seed) {
  const std::vector<std::string> all = {"penalty", "shift", "drift", "gap", "levelset"};
  if (only.empty()) only = all;

  Schedule recommended;  // g=1/4, d=3/4, s=1, unit scales
  std::vector<CheckSuiteResult> suites;
  for (const std::string& name : only) {
    if (name == "penalty") {
      suites.push_back(check_penalty_invariants(seed ^ 0x1ULL, 10000));
    } else if (name == "shift") {
      suites.push_back(check_gradient_shift_bound(seed ^ 0x2ULL, 100, 2000));
    } else if (name == "drift") {
      suites.push_back(check_drift_suite({seed + 101, seed + 102}, recommended, 64, 1e-6, 1e-9));
    } else if (name == "gap") {
      suites.push_back(check_gap_suite({seed + 201, seed + 202}, {seed + 203, seed + 204}, 1e-8));
    } else if (name == "levelset") {
      suites.push_back(check_level_set_suite({seed + 101}, recommended, {1, 4, 16, 64, 256}, 1e-8,
                                             1e-9));
    } else {
      std::cerr << "check: unknown suite '" << name << "' (known: penalty, shift, drift, gap, "
                << "levelset)\n";
      return kExitUsage;
    }
  }

  bool all_passed = true;
  json report;
  report["suites"] = json::array();
  for (const CheckSuiteResult& suite : suites) {
    all_passed = all_passed && suite.passed;
    json js;
    js["name"] = suite.name;
    js["passed"] = suite.passed;
    js["items"] = json::array();
    for (const CheckItem& it : suite.items) {
      js["items"].push_back(item_to_json(it));
      std::cout << (it.passed ? "  ok   " : "  FAIL ") << suite.name << ": " << it.name
                << " (margin " << shortest(it.min_margin) << ", " << it.samples << " samples)\n";
    }
    report["suites"].push_back(std::move(js));
  }
  report["passed"] = all_passed;
  if (!out.empty()) {
    write_file(out, report.dump(2) + "\n");
    std::cout << "report: " << out << "\n";
  }
  std::cout << (all_passed ? "all checks passed" : "CHECK FAILURES PRESENT") << "\n";
  return all_passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) {
    if (i) g_command_echo += ' ';
    g_command_echo += argv[i];
  }
  CLI::App app{"huberpen: incremental penalty solver for strongly convex programs under linear "
               "inequalities"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random problem file (or penalty profile data)");
  int gen_n = 0, gen_m = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  GeneratorSpec spec;
  bool figure1 = false;
  gen->add_option("--n", gen_n, "dimension");
  gen->add_option("--m", gen_m, "number of constraints");
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "output path")->required();
  gen->add_option("--eig-min", spec.eig_min, "smallest eigenvalue of Q")->capture_default_str();
  gen->add_option("--eig-max", spec.eig_max, "largest eigenvalue of Q")->capture_default_str();
  gen->add_option("--margin", spec.margin, "witness feasibility margin")->capture_default_str();
  gen->add_option("--slack", spec.slack, "max extra constraint slack")->capture_default_str();
  gen->add_option("--push", spec.push, "boundary push for the active optimum")
      ->capture_default_str();
  gen->add_flag("--active-optimum", spec.active_optimum,
                "place the unconstrained minimizer outside the feasible set");
  gen->add_flag("--figure1", figure1, "emit penalty profile samples instead of a problem");

  // solve
  auto* solve = app.add_subcommand("solve", "run the incremental solver, write trace + manifest");
  SolveFlags sf;
  solve->add_option("--problem", sf.problem_path, "problem json path");
  solve->add_option("--out", sf.out, "trace csv path");
  solve->add_option("--manifest", sf.manifest_path, "manifest path (default: <out>.manifest.json)");
  solve->add_option("--oracle", sf.oracle_path, "oracle json providing x* for the error column");
  solve->add_option("--replay", sf.replay_path, "rerun the configuration recorded in a manifest");
  solve->add_option("--iters", sf.iterations, "iteration count")->capture_default_str();
  solve->add_option("--seed", sf.seed, "sampling seed")->capture_default_str();
  solve->add_option("--record-every", sf.record_every, "period of the arithmetic snapshot grid")
      ->capture_default_str();
  solve->add_option("--grid", sf.grid, "snapshot grid: geometric | arithmetic")
      ->capture_default_str();
  solve->add_option("--init", sf.init, "initial point: 'witness' or comma-separated coordinates")
      ->capture_default_str();
  add_schedule_flags(solve, sf.schedule);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact constrained optimum via active-set search");
  std::string or_problem, or_out;
  double or_tol = 1e-10;
  oracle->add_option("--problem", or_problem, "problem json path")->required();
  oracle->add_option("--out", or_out, "oracle json path")->required();
  oracle->add_option("--tol", or_tol, "KKT certificate tolerance")->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "seed ensemble + mean-square-error rate fit");
  std::string sw_problem, sw_oracle, sw_out, sw_report;
  int sw_seeds = 30, sw_threads = 0;
  std::uint64_t sw_seed_base = 0;
  std::int64_t sw_iters = 100000, sw_kmin = 1000, sw_kmax = 0;
  ScheduleFlags sw_schedule;
  sweep->add_option("--problem", sw_problem, "problem json path")->required();
  sweep->add_option("--oracle", sw_oracle, "oracle json path (x* reference)")->required();
  sweep->add_option("--out", sw_out, "aggregate csv path")->required();
  sweep->add_option("--report", sw_report, "rate report json path");
  sweep->add_option("--seeds", sw_seeds, "number of seeds")->capture_default_str();
  sweep->add_option("--seed", sw_seed_base, "base seed")->capture_default_str();
  sweep->add_option("--iters", sw_iters, "iterations per run")->capture_default_str();
  sweep->add_option("--k-min", sw_kmin, "rate-fit window lower end")->capture_default_str();
  sweep->add_option("--k-max", sw_kmax, "rate-fit window upper end (0: iterations)")
      ->capture_default_str();
  sweep->add_option("--threads", sw_threads, "parallel runs cap (0: HUBER_THREADS or cores)")
      ->capture_default_str();
  add_schedule_flags(sweep, sw_schedule);

  // check
  auto* check = app.add_subcommand("check", "run the inequality check suites");
  std::vector<std::string> ck_only;
  std::string ck_out;
  std::uint64_t ck_seed = 7;
  check->add_option("--only", ck_only, "subset of suites: penalty shift drift gap levelset");
  check->add_option("--out", ck_out, "machine-readable report path");
  check->add_option("--seed", ck_seed, "base seed for self-generated instances")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      if (!figure1 && (gen->count("--n") == 0 || gen->count("--m") == 0)) {
        std::cerr << "gen: --n and --m are required (unless --figure1)\n";
        return kExitUsage;
      }
      return cmd_gen(gen_out, gen_n, gen_m, gen_seed, spec, figure1);
    }
    if (*solve) return cmd_solve(sf);
    if (*oracle) return cmd_oracle(or_problem, or_out, or_tol);
    if (*sweep)
      return cmd_sweep(sw_problem, sw_oracle, sw_out, sw_report, sw_seeds, sw_seed_base, sw_iters,
                       sw_schedule, sw_kmin, sw_kmax, sw_threads);
    if (*check) return cmd_check(ck_only, ck_out, ck_seed);
  } catch (const DivergenceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const OracleError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid input file: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
