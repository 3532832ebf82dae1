#include "oimfb/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oimfb {

void EdgeStatsState::observe(const CascadeResult& cascade) {
  for (std::size_t i = 0; i < cascade.observed_edges.size(); ++i) {
    EdgeId e = cascade.observed_edges[i];
    if (e >= trials.size()) throw std::invalid_argument("cascade references unknown edge");
    ++trials[e];
    successes[e] += cascade.outcomes[i];
  }
}

std::vector<double> EdgeStatsState::empirical_means(double prior) const {
  std::vector<double> m(trials.size(), prior);
  for (std::size_t e = 0; e < trials.size(); ++e)
    if (trials[e] > 0) m[e] = static_cast<double>(successes[e]) / trials[e];
  return m;
}

std::vector<double> cucb_ucb(const EdgeStatsState& state, std::size_t t) {
  const double log_t = std::log(static_cast<double>(std::max<std::size_t>(t, 1)));
  std::vector<double> p(state.trials.size(), 1.0);
  for (std::size_t e = 0; e < p.size(); ++e) {
    const double n = state.trials[e];
    if (n == 0) continue;
    const double mean = state.successes[e] / n;
    p[e] = std::clamp(mean + std::sqrt(3.0 * log_t / (2.0 * n)), 0.0, 1.0);
  }
  return p;
}

std::vector<NodeId> sample_distinct_nodes(std::size_t n, int k, Rng& rng) {
  const std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(k, 0)));
  std::vector<NodeId> pool(n);
  std::iota(pool.begin(), pool.end(), NodeId{0});
  for (std::size_t i = 0; i < take; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<NodeId> eps_greedy_select(const EdgeStatsState& state, const DirectedGraph& graph,
                                      const Oracle& oracle, int k, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (rng.uniform() < epsilon) return sample_distinct_nodes(graph.node_count(), k, rng);
  return oracle.select(graph, state.empirical_means(0.5), k);
}

FactorMatrix imlinucb_features(const DirectedGraph& graph, const GroundTruthModel& truth) {
  const int d = truth.dim;
  FactorMatrix x(static_cast<Eigen::Index>(graph.edge_count()), d * d);
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    const Edge& ed = graph.edge(e);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        x(e, i * d + j) = truth.theta_star(ed.giving, i) * truth.beta_star(ed.receiving, j);
  }
  return x;
}

LinUcbState init_linucb(FactorMatrix features, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("IMLinUCB lambda must be > 0");
  LinUcbState s;
  s.lambda = lambda;
  s.features = std::move(features);
  const Eigen::Index k = s.features.cols();
  s.gram = lambda * Eigen::MatrixXd::Identity(k, k);
  s.moment = Eigen::VectorXd::Zero(k);
  s.weight_hat = Eigen::VectorXd::Zero(k);
  s.gram_chol.compute(s.gram);
  return s;
}

namespace {

double linucb_entry(const LinUcbState& s, Eigen::Index e, double c_explore) {
  const Eigen::VectorXd x = s.features.row(e).transpose();
  const double width = s.gram_chol.matrixL().solve(x).norm();
  return std::clamp(x.dot(s.weight_hat) + c_explore * width, 0.0, 1.0);
}

}  // namespace

std::vector<double> imlinucb_ucb_serial(const LinUcbState& s, double c_explore) {
  std::vector<double> p(static_cast<std::size_t>(s.features.rows()));
  for (Eigen::Index e = 0; e < s.features.rows(); ++e)
    p[static_cast<std::size_t>(e)] = linucb_entry(s, e, c_explore);
  return p;
}

std::vector<double> imlinucb_ucb(const LinUcbState& s, double c_explore) {
  std::vector<double> p(static_cast<std::size_t>(s.features.rows()));
  const auto m = static_cast<std::int64_t>(s.features.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t e = 0; e < m; ++e) p[static_cast<std::size_t>(e)] = linucb_entry(s, e, c_explore);
  return p;
}

std::vector<double> imlinucb_estimates(const LinUcbState& s) {
  Eigen::VectorXd est = s.features * s.weight_hat;
  return {est.data(), est.data() + est.size()};
}

void imlinucb_update(LinUcbState& s, const CascadeResult& cascade) {
  if (cascade.observed_edges.empty()) return;
  for (std::size_t i = 0; i < cascade.observed_edges.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(cascade.observed_edges[i]);
    if (e >= s.features.rows()) throw std::invalid_argument("cascade references unknown edge");
    const Eigen::VectorXd x = s.features.row(e).transpose();
    s.gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    s.moment += static_cast<double>(cascade.outcomes[i]) * x;
  }
  s.gram.triangularView<Eigen::StrictlyUpper>() = s.gram.transpose().eval();
  s.gram_chol.compute(s.gram);
  if (s.gram_chol.info() != Eigen::Success) throw std::logic_error("IMLinUCB gram lost positive definiteness");
  s.weight_hat = s.gram_chol.solve(s.moment);
}

}  // namespace oimfb
