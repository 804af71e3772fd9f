#include "huberpen/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "huberpen/io_util.hpp"
#include "huberpen/oracle.hpp"

namespace huberpen {

DivergenceError::DivergenceError(std::int64_t k_in, double x_norm_in, double dir_norm_in)
    : std::runtime_error("divergence at k = " + std::to_string(k_in) +
                         " (|x| = " + shortest(x_norm_in) + ", |dir| = " + shortest(dir_norm_in) +
                         ")"),
      k(k_in),
      x_norm(x_norm_in),
      dir_norm(dir_norm_in) {}

int sample_index(SplitMix64& rng, int m) {
  if (m < 1) throw std::invalid_argument("sample_index: m must be >= 1");
  return static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m)));
}

std::vector<std::int64_t> snapshot_grid(const SolverConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("snapshot_grid: iterations must be >= 1");
  if (cfg.record_every < 1) throw std::invalid_argument("snapshot_grid: record_every must be >= 1");
  std::vector<std::int64_t> ks;
  if (cfg.grid == SnapshotGrid::geometric) {
    double v = 1.0;
    std::int64_t k = 1;
    while (k < cfg.iterations) {
      if (ks.empty() || ks.back() != k) ks.push_back(k);
      v *= 1.2;
      k = static_cast<std::int64_t>(std::ceil(v));
    }
  } else {
    for (std::int64_t k = 1; k < cfg.iterations; k += cfg.record_every) ks.push_back(k);
  }
  ks.push_back(cfg.iterations);
  return ks;
}

Eigen::VectorXd step(const Eigen::VectorXd& x, std::int64_t k, int i, const ConstrainedProblem& p,
                     const Schedule& sch) {
  if (i < 0 || i >= p.m()) throw std::invalid_argument("step: constraint index out of range");
  const double delta_k = sch.delta(k);
  const Eigen::VectorXd dir =
      grad_f(p, x) + sch.gamma(k) * penalty_gradient(x, p.constraint(i), delta_k);
  Eigen::VectorXd next = x - sch.step(k) * dir;
  if (!next.allFinite()) throw DivergenceError(k, x.norm(), dir.norm());
  return next;
}

namespace {

// Exact distance for the desk-scale regime. Beyond the projector's
// enumeration cap, or when its certificate fails (diverging iterates reach
// magnitudes where the KKT residuals drown in round-off), fall back to the
// largest single-constraint distance, a lower bound on the true distance.
double trace_distance(const ConstrainedProblem& p, const Eigen::VectorXd& x) {
  if (p.m() <= 20) {
    try {
      return dist_feasible_set(p, x, 1e-10);
    } catch (const OracleError&) {
    }
  }
  double worst = 0.0;
  for (const Halfspace& hs : p.constraints()) worst = std::max(worst, halfspace_distance(x, hs));
  return worst;
}

int resolve_threads(int max_threads) {
  if (max_threads > 0) return max_threads;
  if (const char* env = std::getenv("HUBER_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

SolverTrace run(const ConstrainedProblem& p, const SolverConfig& cfg,
                const std::optional<Eigen::VectorXd>& x_star) {
  const auto diags = validate(cfg.schedule);
  if (!is_valid(diags)) throw std::invalid_argument("run: invalid schedule");
  if (cfg.iterations < 1) throw std::invalid_argument("run: iterations must be >= 1");
  if (x_star && x_star->size() != p.n())
    throw std::invalid_argument("run: x_star dimension mismatch");

  SolverTrace trace;
  trace.config = cfg;
  Eigen::VectorXd x = cfg.initial_point ? *cfg.initial_point : p.witness();
  if (x.size() != p.n()) throw std::invalid_argument("run: initial point dimension mismatch");

  const std::vector<std::int64_t> grid = snapshot_grid(cfg);
  trace.snapshots.reserve(grid.size());
  SplitMix64 rng(cfg.seed);
  std::size_t gi = 0;

  for (std::int64_t k = 1; k <= cfg.iterations; ++k) {
    const int i = sample_index(rng, p.m());
    if (gi < grid.size() && grid[gi] == k) {
      Snapshot snap;
      snap.k = k;
      snap.f_value = f_value(p, x);
      snap.dist_feasible = trace_distance(p, x);
      if (x_star) snap.sq_err_to_opt = (x - *x_star).squaredNorm();
      snap.gamma = cfg.schedule.gamma(k);
      snap.delta = cfg.schedule.delta(k);
      snap.step = cfg.schedule.step(k);
      snap.index_sampled = i;
      trace.snapshots.push_back(std::move(snap));
      if (cfg.store_iterates) trace.iterates.push_back(x);
      ++gi;
    }
    try {
      x = step(x, k, i, p, cfg.schedule);
    } catch (const DivergenceError& e) {
      trace.diverged = true;
      trace.diverged_at = e.k;
      break;
    }
  }
  trace.final_point = std::move(x);
  return trace;
}

EnsembleResult run_ensemble(const ConstrainedProblem& p, const SolverConfig& cfg, int num_seeds,
                            const Eigen::VectorXd& x_star, int max_threads) {
  if (num_seeds < 1) throw std::invalid_argument("run_ensemble: num_seeds must be >= 1");
  EnsembleResult result;
  result.traces.resize(static_cast<std::size_t>(num_seeds));

  const int workers = std::min(resolve_threads(max_threads), num_seeds);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= num_seeds) return;
      SolverConfig run_cfg = cfg;
      run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(j);
      result.traces[static_cast<std::size_t>(j)] = run(p, run_cfg, x_star);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }

  // Aggregate over surviving seeds in fixed seed order so the result does not
  // depend on thread scheduling.
  EnsembleAggregate& agg = result.aggregate;
  agg.ks = snapshot_grid(cfg);
  const std::size_t S = agg.ks.size();
  agg.mean_sq_err.assign(S, 0.0);
  agg.stderr_sq_err.assign(S, 0.0);
  agg.mean_dist_feasible.assign(S, 0.0);

  std::vector<const SolverTrace*> ok;
  for (int j = 0; j < num_seeds; ++j) {
    const SolverTrace& t = result.traces[static_cast<std::size_t>(j)];
    if (t.diverged)
      agg.failed_seeds.push_back(cfg.seed + static_cast<std::uint64_t>(j));
    else
      ok.push_back(&t);
  }
  agg.seeds_used = static_cast<int>(ok.size());
  if (ok.empty()) return result;

  for (std::size_t si = 0; si < S; ++si) {
    double sum = 0.0, sum_sq = 0.0, sum_dist = 0.0;
    for (const SolverTrace* t : ok) {
      const Snapshot& snap = t->snapshots[si];
      const double e = snap.sq_err_to_opt.value();
      sum += e;
      sum_sq += e * e;
      sum_dist += snap.dist_feasible;
    }
    const double N = static_cast<double>(ok.size());
    agg.mean_sq_err[si] = sum / N;
    agg.mean_dist_feasible[si] = sum_dist / N;
    if (ok.size() > 1) {
      const double var = std::max(0.0, (sum_sq - sum * sum / N) / (N - 1.0));
      agg.stderr_sq_err[si] = std::sqrt(var / N);
    }
  }
  return result;
}

void write_trace_csv(const SolverTrace& trace, std::ostream& out) {
  out << "k,f_value,dist_feasible,sq_err_to_opt,gamma,delta,step,index_sampled\n";
  for (const Snapshot& s : trace.snapshots) {
    out << s.k << ',' << shortest(s.f_value) << ',' << shortest(s.dist_feasible) << ',';
    if (s.sq_err_to_opt) out << shortest(*s.sq_err_to_opt);
    out << ',' << shortest(s.gamma) << ',' << shortest(s.delta) << ',' << shortest(s.step) << ','
        << (s.index_sampled + 1) << '\n';
  }
}

void write_aggregate_csv(const EnsembleAggregate& agg, std::ostream& out) {
  out << "k,mean_sq_err,stderr,mean_dist_feasible\n";
  for (std::size_t i = 0; i < agg.ks.size(); ++i) {
    out << agg.ks[i] << ',' << shortest(agg.mean_sq_err[i]) << ',' << shortest(agg.stderr_sq_err[i])
        << ',' << shortest(agg.mean_dist_feasible[i]) << '\n';
  }
}

}  // namespace huberpen
