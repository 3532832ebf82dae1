#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oimfb/environment.hpp"
#include "oimfb/imfb.hpp"
#include "oimfb/oracle.hpp"
#include "oimfb/policy.hpp"

namespace oimfb {

struct GraphSource {
  std::string source = "synthetic";  // synthetic | file
  std::string path;
  std::string model = "gnm";  // gnm | skewed (synthetic only)
  std::size_t nodes = 200;
  std::size_t edges = 2000;
  double exponent = 1.0;  // skewed model only
  std::uint64_t seed = 1;
  bool symmetrize = false;
};

enum class PolicyKind { imfb, cucb, eps_greedy, imlinucb };

struct PolicyConfig {
  PolicyKind kind = PolicyKind::imfb;
  ImfbHyperparams imfb;
  double epsilon = 0.1;
  double linucb_lambda = 1.0;
  double c_explore = 1.0;
};

struct ExperimentConfig {
  GraphSource graph;
  GenerationSpec generation;
  std::string truth_path;  // load ground truth JSON instead of generating
  PerturbationSpec perturbation;
  PolicyConfig policy;
  OracleSpec oracle;
  int K = 10;
  int T = 100;
  int runs = 5;
  std::uint64_t master_seed = 0;
  std::string output_dir = "results";
};

struct RoundMetrics {
  int round = 0;
  std::size_t reward = 0;
  std::size_t cumulative_reward = 0;
  std::optional<double> est_error;
  std::optional<double> theta_err;
  std::optional<double> beta_err;
  std::optional<double> regret_proxy;
};

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> std;  // sample standard deviation; 0 for one value
};

struct AggregateRow {
  int round = 0;
  MetricSummary reward, cumulative_reward, est_error, theta_err, beta_err, regret_proxy,
      cumulative_regret_proxy;
};

struct ExperimentResult {
  std::vector<std::vector<RoundMetrics>> runs;
  std::vector<AggregateRow> aggregate;
  std::optional<double> optimal_spread;
  double alpha_gamma = 1.0;
};

// Error from inside the round loop, tagged with where it happened.
class RunError : public std::runtime_error {
 public:
  RunError(int run, int round, const std::string& what)
      : std::runtime_error("run " + std::to_string(run) + ", round " + std::to_string(round) + ": " + what),
        run_(run), round_(round) {}
  int run() const { return run_; }
  int round() const { return round_; }

 private:
  int run_, round_;
};

// Graph and ground truth built from the config (fixed across runs).
struct ExperimentWorld {
  DirectedGraph graph;
  GroundTruthModel truth;
};
ExperimentWorld build_world(const ExperimentConfig& config);

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const DirectedGraph& graph,
                                    const GroundTruthModel& truth, std::uint64_t init_seed);

// f(S_opt) - reward / (alpha gamma).
double regret_proxy(double round_reward, double optimal_spread, double alpha_gamma);

// Mean |p_hat - p*| over the observed edges; absent when none were observed.
std::optional<double> estimation_error(std::span<const double> estimates, std::span<const double> p_star,
                                       std::span<const EdgeId> observed_edges);

// Exact optimal spread under p*, or absent when the graph exceeds the caps.
std::optional<double> optimal_spread(const DirectedGraph& graph, std::span<const double> p_star, int k,
                                     const OracleSpec& oracle);

// Runs are independent and execute in parallel; every random draw is keyed by
// (master_seed, run, round), so results do not depend on scheduling.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentWorld& world);

std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<RoundMetrics>>& runs);

// run_<r>.csv per run plus aggregate.csv in `dir`.
void write_run_csv(std::ostream& out, const std::vector<RoundMetrics>& rows);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_results(const ExperimentResult& result, const std::string& dir);

inline constexpr const char* kRunCsvHeader =
    "round,reward,cum_reward,est_error,theta_err,beta_err,regret_proxy";

}  // namespace oimfb
