#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "huberpen/io_util.hpp"
#include "huberpen/problem.hpp"

using namespace huberpen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* env = std::getenv("HUBERPEN_CLI");
  REQUIRE_MESSAGE(env != nullptr, "HUBERPEN_CLI must point at the built binary");
  return env;
}

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() /
          ("huberpen_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = cli_path() + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli gen: deterministic files and usage errors") {
  TempDir tmp;
  CHECK(run_cli("gen --n 2 --m 3 --seed 1 --out " + tmp.path("a.json")) == 0);
  CHECK(run_cli("gen --n 2 --m 3 --seed 1 --out " + tmp.path("b.json")) == 0);
  CHECK(read_file(tmp.path("a.json")) == read_file(tmp.path("b.json")));

  CHECK(run_cli("gen --n 2 --m 0 --seed 1 --out " + tmp.path("c.json")) == 2);
  CHECK(run_cli("gen --out " + tmp.path("d.json")) == 2);  // missing --n/--m
  CHECK(run_cli("bogus-subcommand") == 2);

  // active optimum: reload and verify the unconstrained minimizer is infeasible
  CHECK(run_cli("gen --n 5 --m 8 --seed 42 --active-optimum --out " + tmp.path("act.json")) == 0);
  const ConstrainedProblem p = load_problem(tmp.path("act.json"));
  const Eigen::VectorXd x_u = p.objective().Q().llt().solve(-p.objective().c());
  CHECK(!p.feasible(x_u));
  CHECK(p.feasible(p.witness()));
}

TEST_CASE("cli gen --figure1 emits the penalty profile") {
  TempDir tmp;
  CHECK(run_cli("gen --figure1 --out " + tmp.path("profile.csv")) == 0);
  std::istringstream in(read_file(tmp.path("profile.csv")));
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,h_delta_0.25,h_delta_0.5,h_delta_1");
  // find x = 1 (the boundary): values delta/4 = 0.0625, 0.125, 0.25
  std::string line;
  bool seen = false;
  while (std::getline(in, line)) {
    if (line.rfind("1,", 0) == 0) {
      CHECK(line == "1,0.0625,0.125,0.25");
      seen = true;
    }
  }
  CHECK(seen);
}

TEST_CASE("cli solve: trace, manifest, replay, exit codes") {
  TempDir tmp;
  const std::string problem = tmp.path("p.json");
  REQUIRE(run_cli("gen --n 3 --m 4 --seed 9 --active-optimum --out " + problem) == 0);

  const std::string trace = tmp.path("trace.csv");
  const std::string args = "solve --problem " + problem + " --out " + trace +
                           " --iters 2000 --seed 3";
  CHECK(run_cli(args) == 0);
  const std::string csv_a = read_file(trace);
  CHECK(csv_a.rfind("k,f_value,dist_feasible,sq_err_to_opt,gamma,delta,step,index_sampled\n", 0) ==
        0);

  SUBCASE("rerunning the same flags is byte-identical") {
    const std::string trace2 = tmp.path("trace2.csv");
    CHECK(run_cli("solve --problem " + problem + " --out " + trace2 + " --iters 2000 --seed 3") ==
          0);
    CHECK(read_file(trace2) == csv_a);
  }
  SUBCASE("manifest records the problem hash and replays byte-identically") {
    const json man = json::parse(read_file(trace + ".manifest.json"));
    CHECK(man.at("problem").at("fnv1a64").get<std::string>() == fnv1a64_hex(read_file(problem)));
    CHECK(man.at("iterations").get<long>() == 2000);

    const std::string trace3 = tmp.path("trace3.csv");
    CHECK(run_cli("solve --replay " + trace + ".manifest.json --out " + trace3) == 0);
    CHECK(read_file(trace3) == csv_a);
  }
  SUBCASE("feasibility distance shrinks when started infeasible") {
    const ConstrainedProblem p = load_problem(problem);
    Eigen::VectorXd start = p.witness() + 3.0 * p.constraint(0).a;
    REQUIRE(!p.feasible(start));
    std::string init;
    for (Eigen::Index j = 0; j < start.size(); ++j)
      init += (j ? "," : "") + shortest(start[j]);
    const std::string t5 = tmp.path("t5.csv");
    REQUIRE(run_cli("solve --problem " + problem + " --out " + t5 +
                    " --iters 2000 --seed 3 --init " + init) == 0);
    std::istringstream in(read_file(t5));
    std::string line;
    std::getline(in, line);  // header
    double first_dist = -1.0, last_dist = -1.0;
    while (std::getline(in, line)) {
      std::stringstream row(line);
      std::string cell;
      std::getline(row, cell, ',');  // k
      std::getline(row, cell, ',');  // f
      std::getline(row, cell, ',');  // dist
      const double dist = std::stod(cell);
      if (first_dist < 0.0) first_dist = dist;
      last_dist = dist;
    }
    CHECK(first_dist > 1.0);
    CHECK(last_dist <= 0.01 * first_dist);
  }
  SUBCASE("one iteration gives a header plus one row") {
    const std::string t1 = tmp.path("t1.csv");
    CHECK(run_cli("solve --problem " + problem + " --out " + t1 + " --iters 1") == 0);
    std::istringstream in(read_file(t1));
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 2);
  }
  SUBCASE("inconsistent schedule exponents exit with a validation error") {
    CHECK(run_cli("solve --problem " + problem + " --out " + tmp.path("bad.csv") +
                  " --g 0.9 --d 0.5 --iters 10") == 2);
  }
  SUBCASE("tampered problem file fails the replay hash check") {
    std::ofstream(problem, std::ios::app) << "\n";
    CHECK(run_cli("solve --replay " + trace + ".manifest.json --out " + tmp.path("t4.csv")) == 2);
  }
}

TEST_CASE("cli solve: divergence exits 3 and keeps the partial trace") {
  TempDir tmp;
  const std::string problem = tmp.path("p.json");
  REQUIRE(run_cli("gen --n 2 --m 2 --seed 4 --eig-min 4 --eig-max 4 --out " + problem) == 0);
  const std::string trace = tmp.path("t.csv");
  // near-constant enormous steps on a stiff quadratic
  CHECK(run_cli("solve --problem " + problem + " --out " + trace +
                " --iters 4000 --s 0.01 --step0 10") == 3);
  std::istringstream in(read_file(trace));
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines >= 2);  // header plus at least the k = 1 snapshot
}

TEST_CASE("cli oracle: hand-checkable instance and the enumeration cap") {
  TempDir tmp;
  // f = 1/2 x^2 subject to -x <= -1 (x >= 1): optimum x* = 1
  Eigen::MatrixXd Q(1, 1);
  Q << 1.0;
  Eigen::VectorXd c(1), w(1), a(1);
  c << 0.0;
  w << 2.0;
  a << -1.0;
  const ConstrainedProblem p(QuadraticObjective(Q, c), {Halfspace(a, -1.0)}, w);
  save_problem(p, tmp.path("p.json"));

  CHECK(run_cli("oracle --problem " + tmp.path("p.json") + " --out " + tmp.path("o.json")) == 0);
  const json sol = json::parse(read_file(tmp.path("o.json")));
  CHECK(sol.at("x_star")[0].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.at("multipliers")[0].get<double>() == doctest::Approx(1.0).epsilon(1e-10));

  REQUIRE(run_cli("gen --n 2 --m 21 --seed 6 --out " + tmp.path("big.json")) == 0);
  CHECK(run_cli("oracle --problem " + tmp.path("big.json") + " --out " + tmp.path("o2.json")) ==
        2);
}

TEST_CASE("cli sweep: aggregate csv and rate report") {
  TempDir tmp;
  const std::string problem = tmp.path("p.json");
  REQUIRE(run_cli("gen --n 3 --m 4 --seed 12 --active-optimum --out " + problem) == 0);
  REQUIRE(run_cli("oracle --problem " + problem + " --out " + tmp.path("o.json")) == 0);

  CHECK(run_cli("sweep --problem " + problem + " --oracle " + tmp.path("o.json") + " --out " +
                tmp.path("agg.csv") + " --report " + tmp.path("rep.json") +
                " --seeds 3 --iters 3000 --k-min 10 --k-max 3000") == 0);
  CHECK(read_file(tmp.path("agg.csv")).rfind("k,mean_sq_err,stderr,mean_dist_feasible\n", 0) == 0);
  const json rep = json::parse(read_file(tmp.path("rep.json")));
  CHECK(rep.at("seeds_used").get<int>() == 3);
  CHECK(rep.at("slope").get<double>() < 0.0);  // error decays
  CHECK(rep.contains("r_squared"));

  SUBCASE("HUBER_THREADS caps the pool without changing the aggregate") {
    const std::string cmd = "HUBER_THREADS=1 " + cli_path() + " sweep --problem " + problem +
                            " --oracle " + tmp.path("o.json") + " --out " + tmp.path("agg1.csv") +
                            " --seeds 3 --iters 3000 --k-min 10 --k-max 3000 > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) != -1);
    CHECK(read_file(tmp.path("agg1.csv")) == read_file(tmp.path("agg.csv")));
  }
}

TEST_CASE("cli input validation: missing and malformed files exit 2") {
  TempDir tmp;
  CHECK(run_cli("solve --problem " + tmp.path("absent.json") + " --out " + tmp.path("t.csv") +
                " --iters 5") == 2);
  CHECK(run_cli("oracle --problem " + tmp.path("absent.json") + " --out " + tmp.path("o.json")) ==
        2);
  std::ofstream(tmp.path("garbage.json")) << "{not json";
  CHECK(run_cli("solve --problem " + tmp.path("garbage.json") + " --out " + tmp.path("t.csv") +
                " --iters 5") == 2);
  std::ofstream(tmp.path("wrong.json")) << "{\"n\": 2}";
  CHECK(run_cli("oracle --problem " + tmp.path("wrong.json") + " --out " + tmp.path("o.json")) ==
        2);
}

TEST_CASE("cli check: full run passes, subsets filter, unknown suites are rejected") {
  TempDir tmp;
  CHECK(run_cli("check --out " + tmp.path("full.json"), tmp.path("log.txt")) == 0);
  const json full = json::parse(read_file(tmp.path("full.json")));
  CHECK(full.at("passed").get<bool>());
  CHECK(full.at("suites").size() == 5);
  for (const auto& suite : full.at("suites")) {
    CHECK(suite.at("passed").get<bool>());
    for (const auto& item : suite.at("items")) CHECK(item.at("passed").get<bool>());
  }

  CHECK(run_cli("check --only penalty --out " + tmp.path("sub.json"), tmp.path("log2.txt")) == 0);
  const json sub = json::parse(read_file(tmp.path("sub.json")));
  CHECK(sub.at("suites").size() == 1);
  CHECK(sub.at("suites")[0].at("name").get<std::string>() == "penalty");

  CHECK(run_cli("check --only nonsense") == 2);
}
