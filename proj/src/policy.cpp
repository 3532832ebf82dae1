#include "oimfb/policy.hpp"

namespace oimfb {

ImfbPolicy::ImfbPolicy(const DirectedGraph& graph, const ImfbHyperparams& hp, std::uint64_t init_seed)
    : graph_(&graph), state_(init_state(graph, hp, init_seed)) {}

std::vector<NodeId> ImfbPolicy::select(const Oracle& oracle, int k, Rng&) {
  ucb_ = ucb_matrix(state_, *graph_);
  oracle_input_ = ucb_.p_bar;
  return oracle.select(*graph_, oracle_input_, k);
}

void ImfbPolicy::observe(const CascadeResult& cascade) { update(state_, cascade, *graph_); }

std::vector<double> ImfbPolicy::point_estimates() const { return oimfb::point_estimates(state_, *graph_); }

CucbPolicy::CucbPolicy(const DirectedGraph& graph) : graph_(&graph), stats_(graph.edge_count()) {}

std::vector<NodeId> CucbPolicy::select(const Oracle& oracle, int k, Rng&) {
  oracle_input_ = cucb_ucb(stats_, round_);
  return oracle.select(*graph_, oracle_input_, k);
}

void CucbPolicy::observe(const CascadeResult& cascade) {
  stats_.observe(cascade);
  ++round_;
}

EpsGreedyPolicy::EpsGreedyPolicy(const DirectedGraph& graph, double epsilon)
    : graph_(&graph), stats_(graph.edge_count()), epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
}

std::vector<NodeId> EpsGreedyPolicy::select(const Oracle& oracle, int k, Rng& rng) {
  oracle_input_ = stats_.empirical_means(0.5);
  return eps_greedy_select(stats_, *graph_, oracle, k, epsilon_, rng);
}

ImLinUcbPolicy::ImLinUcbPolicy(const DirectedGraph& graph, const GroundTruthModel& truth,
                               double lambda, double c_explore)
    : graph_(&graph), state_(init_linucb(imlinucb_features(graph, truth), lambda)), c_explore_(c_explore) {
  if (!(c_explore >= 0.0)) throw std::invalid_argument("c_explore must be >= 0");
}

std::vector<NodeId> ImLinUcbPolicy::select(const Oracle& oracle, int k, Rng&) {
  oracle_input_ = imlinucb_ucb(state_, c_explore_);
  return oracle.select(*graph_, oracle_input_, k);
}

}  // namespace oimfb
