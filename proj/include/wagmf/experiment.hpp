#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wagmf/analysis.hpp"
#include "wagmf/optimizers.hpp"
#include "wagmf/problems.hpp"

namespace wagmf {

/// Result of driving one optimizer over one oracle for T rounds.
struct RunResult {
  RunTrace trace;
  VectorXd final_x;                        // x_{T+1}
  std::int64_t schedule_violations = 0;    // check_nonincrease failures (weighted engines)
  std::int64_t preconditioner_drops = 0;   // rounds where some alpha_t / V_t grew
};

struct RunOptions {
  std::int64_t rounds = 1;
  std::uint64_t seed = 0;
  bool record = true;
  // When set, the recorded loss of round t is monitor(x_t) instead of f_t(x_t).
  std::function<double(const VectorXd&)> monitor;
};

/// Round t: g_t = oracle(t, x_t), then x_{t+1} from the preset's engine.
RunResult run_optimizer(const Preset<double>& preset, const LossOracle& oracle, const FeasibleSet<double>& set,
                        const VectorXd& x1, const RunOptions& options);

struct OptimizerSpec {
  std::string name;
  std::vector<double> alphas;
  Overrides overrides;
};

struct ProblemSpec {
  std::string kind = "reddi_stochastic";  // reddi_stochastic | reddi_online | quadratic | softmax
  // quadratic
  std::vector<double> a_diag;
  std::vector<double> x_star;
  // softmax
  std::string dataset_path;  // empty: synthetic blobs
  std::string labels_path;
  std::string dataset_format = "csv";
  Eigen::Index synthetic_n = 2000;
  Eigen::Index synthetic_d = 20;
  int synthetic_classes = 5;
  double synthetic_separation = 1.0;
  std::uint64_t synthetic_seed = 7;
  std::optional<double> reg;
  Eigen::Index batch_size = 128;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::vector<OptimizerSpec> optimizers;
  std::int64_t rounds = 1000;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::pair<std::vector<double>, std::vector<double>>> box;  // unset: unconstrained
  std::vector<double> x0;  // empty: zero vector projected onto F
  bool bound_eval = false;
  double lambda = 1.0;
  bool significance = false;

  /// Throws Error(InvalidConfig / InsufficientSeeds / UnknownPreset / InvalidOverride).
  void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);

/// Problems whose summary metric is the final average regret; the rest use the
/// final loss. Softmax traces record the full-batch objective as their loss.
bool is_online_problem(const std::string& kind);

struct Problem {
  std::shared_ptr<const LossOracle> oracle;
  FeasibleSet<double> set;
  VectorXd x1;
  std::shared_ptr<const Dataset> data;  // softmax only
  double reg = 0.0;
};

Problem build_problem(const ExperimentConfig& config);

/// Comparator used for regret columns; nullopt when the problem has none.
std::optional<VectorXd> comparator(const ExperimentConfig& config, const Problem& problem, const RunTrace& trace);

struct RunSummary {
  std::string optimizer;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  std::optional<double> final_avg_regret;
  VectorXd final_x;
  std::filesystem::path trace_path;
  std::optional<BoundReport> bound;
  std::optional<double> corollary1;
  std::optional<double> final_regret;
};

struct GridCandidate {
  double alpha = 0.0;
  double score = 0.0;  // mean metric over seeds
};

struct GridResult {
  std::string optimizer;
  double best_alpha = 0.0;
  double best_score = 0.0;
  std::vector<GridCandidate> candidates;
};

struct SignificanceRow {
  std::string a;
  std::string b;
  TTestResult test;
  bool significant = false;
};

inline constexpr double kSignificanceThreshold = 0.05;

double summary_metric(const RunSummary& s);

/// Per optimizer, the alpha whose mean metric over seeds is smallest; ties go
/// to the smaller alpha.
std::vector<GridResult> select_best(const std::vector<RunSummary>& runs);

/// Pairwise t-tests over per-seed metrics at each optimizer's selected alpha.
std::vector<SignificanceRow> significance(const std::vector<RunSummary>& runs, const std::vector<GridResult>& best);

struct ExperimentReport {
  std::vector<RunSummary> runs;
  std::vector<GridResult> grid;
  std::vector<SignificanceRow> pairs;
};

/// Runs every (optimizer, alpha, seed) triple, writing traces and reports
/// under out_dir. Worker count is capped by WAGMF_THREADS.
ExperimentReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// grid_search without writing files.
std::vector<GridResult> grid_search(const ExperimentConfig& config);

// Trace files.
inline constexpr std::int64_t kMaxLoggedRows = 100000;
inline constexpr Eigen::Index kMaxSidecarDim = 16;

std::int64_t log_stride(std::int64_t rounds);

void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace,
                     const std::vector<RegretPoint>* regret_series);
void write_trace_jsonl(const std::filesystem::path& path, const RunTrace& trace);

/// Rebuilds a summary row from a saved trace: final loss and final average
/// regret come from the last CSV row.
RunSummary summarize_trace_file(const std::filesystem::path& path, const std::string& optimizer, double alpha,
                                std::uint64_t seed);

}  // namespace wagmf
