#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "oimfb/environment.hpp"
#include "oimfb/graph.hpp"
#include "oimfb/oracle.hpp"
#include "oimfb/rng.hpp"

namespace oimfb {

// Independent per-edge Bernoulli counts shared by CUCB and epsilon-greedy.
struct EdgeStatsState {
  std::vector<std::uint32_t> trials;
  std::vector<std::uint32_t> successes;

  explicit EdgeStatsState(std::size_t edge_count = 0)
      : trials(edge_count, 0), successes(edge_count, 0) {}

  void observe(const CascadeResult& cascade);
  // success / trials, or `prior` for never-observed edges.
  std::vector<double> empirical_means(double prior) const;
};

// clamp(mean + sqrt(3 ln t / (2 T_e)), 0, 1); never-observed edges get 1.
std::vector<double> cucb_ucb(const EdgeStatsState& state, std::size_t t);

// With probability epsilon, k distinct nodes uniformly at random; otherwise
// the oracle on empirical means (0.5 for never-observed edges).
std::vector<NodeId> eps_greedy_select(const EdgeStatsState& state, const DirectedGraph& graph,
                                      const Oracle& oracle, int k, double epsilon, Rng& rng);

// k distinct nodes of [0, n) uniformly at random, sorted.
std::vector<NodeId> sample_distinct_nodes(std::size_t n, int k, Rng& rng);

// Row e is the row-major flattening of theta*[g_e] beta*[r_e]^T.
FactorMatrix imlinucb_features(const DirectedGraph& graph, const GroundTruthModel& truth);

struct LinUcbState {
  double lambda = 1.0;
  FactorMatrix features;  // one d^2 feature row per edge
  Eigen::MatrixXd gram;   // lambda I + sum x x^T
  Eigen::VectorXd moment;
  Eigen::VectorXd weight_hat;
  Eigen::LLT<Eigen::MatrixXd> gram_chol;

  Eigen::Index feature_dim() const { return features.cols(); }
};

LinUcbState init_linucb(FactorMatrix features, double lambda);

// clamp(x^T w + c |x|_{M^-1}, 0, 1) per edge. Parallel over edges; the serial
// version is the reference.
std::vector<double> imlinucb_ucb(const LinUcbState& state, double c_explore);
std::vector<double> imlinucb_ucb_serial(const LinUcbState& state, double c_explore);

// x^T w per edge.
std::vector<double> imlinucb_estimates(const LinUcbState& state);

// Adds every observed edge's rank-one term, then refactors once.
void imlinucb_update(LinUcbState& state, const CascadeResult& cascade);

}  // namespace oimfb
