#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "huberpen/problem.hpp"
#include "huberpen/rng.hpp"
#include "huberpen/schedule.hpp"

namespace huberpen {

/// Raised when an iterate stops being finite; carries the failing step.
struct DivergenceError : std::runtime_error {
  DivergenceError(std::int64_t k_in, double x_norm_in, double dir_norm_in);
  std::int64_t k;
  double x_norm;
  double dir_norm;
};

enum class SnapshotGrid { geometric, arithmetic };

struct SolverConfig {
  Schedule schedule;
  std::int64_t iterations = 1000;
  std::uint64_t seed = 0;
  /// Snapshot period for the arithmetic grid; the geometric grid uses the
  /// deduplicated ceil(1.2^j) sequence so log-log fits weight decades evenly.
  std::int64_t record_every = 1;
  SnapshotGrid grid = SnapshotGrid::geometric;
  bool store_iterates = false;
  /// Start point; when absent the run starts at the problem witness.
  std::optional<Eigen::VectorXd> initial_point;
};

struct Snapshot {
  std::int64_t k = 0;
  double f_value = 0.0;
  double dist_feasible = 0.0;
  std::optional<double> sq_err_to_opt;
  double gamma = 0.0;
  double delta = 0.0;
  double step = 0.0;
  int index_sampled = 0;  // 0-based; serialized 1-based
};

struct SolverTrace {
  std::vector<Snapshot> snapshots;
  std::vector<Eigen::VectorXd> iterates;  // aligned with snapshots when stored
  Eigen::VectorXd final_point;
  SolverConfig config;
  bool diverged = false;
  std::int64_t diverged_at = -1;
};

/// Uniform constraint index in [0, m) from the shared SplitMix64 stream.
int sample_index(SplitMix64& rng, int m);

/// Snapshot iterations for a config: strictly increasing, first = 1,
/// last = iterations.
std::vector<std::int64_t> snapshot_grid(const SolverConfig& cfg);

/// One incremental update x - step_k [grad f(x) + gamma_k grad h_{delta_k}(x; a_i, b_i)].
Eigen::VectorXd step(const Eigen::VectorXd& x, std::int64_t k, int i, const ConstrainedProblem& p,
                     const Schedule& sch);

/// Runs iterations k = 1..K; the snapshot at k describes the iterate x_k
/// before its update together with the index sampled for that update.
/// sq_err_to_opt is filled when x_star is supplied. Divergence stops the run
/// and returns the partial trace with the `diverged` flag set.
SolverTrace run(const ConstrainedProblem& p, const SolverConfig& cfg,
                const std::optional<Eigen::VectorXd>& x_star = std::nullopt);

struct EnsembleAggregate {
  std::vector<std::int64_t> ks;
  std::vector<double> mean_sq_err;
  std::vector<double> stderr_sq_err;  // standard error of the seed mean
  std::vector<double> mean_dist_feasible;
  std::vector<std::uint64_t> failed_seeds;
  int seeds_used = 0;
};

struct EnsembleResult {
  std::vector<SolverTrace> traces;
  EnsembleAggregate aggregate;
};

/// Independent runs with seeds cfg.seed + 0 .. + num_seeds-1, executed in
/// parallel (cap: max_threads, else HUBER_THREADS, else hardware cores), then
/// aggregated over the shared snapshot grid in fixed seed order. Diverged
/// seeds are excluded from the aggregate and listed in failed_seeds.
EnsembleResult run_ensemble(const ConstrainedProblem& p, const SolverConfig& cfg, int num_seeds,
                            const Eigen::VectorXd& x_star, int max_threads = 0);

/// CSV with header k,f_value,dist_feasible,sq_err_to_opt,gamma,delta,step,index_sampled.
/// Doubles are shortest round-trip decimals; sq_err_to_opt is empty when
/// no optimum was supplied.
void write_trace_csv(const SolverTrace& trace, std::ostream& out);

/// CSV with header k,mean_sq_err,stderr,mean_dist_feasible.
void write_aggregate_csv(const EnsembleAggregate& agg, std::ostream& out);

}  // namespace huberpen
