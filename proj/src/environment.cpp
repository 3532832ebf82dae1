#include "oimfb/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oimfb {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

void fill_uniform(FactorMatrix& m, Eigen::Index row, double lo, double hi, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) m(row, j) = rng.uniform(lo, hi);
}

void normalize_rows(FactorMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
}

std::vector<double> raw_products(const DirectedGraph& graph, const FactorMatrix& theta,
                                 const FactorMatrix& beta) {
  std::vector<double> raw(graph.edge_count());
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    const Edge& ed = graph.edge(e);
    raw[e] = theta.row(ed.giving).dot(beta.row(ed.receiving));
  }
  return raw;
}

// Node ids sorted by descending out-degree, ties by ascending id.
std::vector<NodeId> by_descending_out_degree(const DirectedGraph& graph) {
  std::vector<NodeId> order(graph.node_count());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return graph.out_degree(a) > graph.out_degree(b);
  });
  return order;
}

}  // namespace

GroundTruthModel GroundTruthModel::from_factors(const DirectedGraph& graph, FactorMatrix theta,
                                                FactorMatrix beta) {
  if (theta.rows() != static_cast<Eigen::Index>(graph.node_count()) ||
      beta.rows() != theta.rows() || beta.cols() != theta.cols())
    throw GenerationError("factor matrices do not match the graph");
  GroundTruthModel m;
  m.dim = static_cast<int>(theta.cols());
  m.p_star = raw_products(graph, theta, beta);
  for (double& p : m.p_star) p = clamp01(p);
  m.theta_star = std::move(theta);
  m.beta_star = std::move(beta);
  return m;
}

double solve_mean_scale(std::span<const double> raw, double target) {
  if (raw.empty()) return 1.0;
  const double n = static_cast<double>(raw.size());
  double mean_raw = std::accumulate(raw.begin(), raw.end(), 0.0) / n;
  if (mean_raw <= 0.0) throw GenerationError("all raw activation probabilities are zero");

  auto clamped_mean = [&](double m) {
    double s = 0.0;
    for (double r : raw) s += clamp01(m * r);
    return s / n;
  };
  double m = target / mean_raw;
  double max_raw = *std::max_element(raw.begin(), raw.end());
  if (m * max_raw <= 1.0) return m;

  // Clamping bites; the clamped mean is continuous and non-decreasing in m.
  double positive = static_cast<double>(std::count_if(raw.begin(), raw.end(),
                                                      [](double r) { return r > 0.0; }));
  if (target >= positive / n)
    throw GenerationError("target mean activation probability is unreachable; use a smaller target");
  double lo = m, hi = m;
  while (clamped_mean(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (clamped_mean(mid) < target ? lo : hi) = mid;
  }
  return hi;
}

GeneratedEnvironment generate_ground_truth(const DirectedGraph& graph, const GenerationSpec& spec) {
  if (spec.dim < 1) throw GenerationError("dim must be >= 1");
  if (spec.target_mean_p && !(*spec.target_mean_p > 0.0 && *spec.target_mean_p <= 1.0))
    throw GenerationError("target_mean_p must lie in (0, 1]");

  const auto n = static_cast<Eigen::Index>(graph.node_count());
  FactorMatrix theta(n, spec.dim);
  FactorMatrix beta(n, spec.dim);
  Rng rng(spec.rng_seed);
  DirectedGraph out_graph = graph;

  switch (spec.mode) {
    case GenerationMode::uniform:
      for (Eigen::Index v = 0; v < n; ++v) {
        fill_uniform(theta, v, 0.0, 0.1, rng);
        fill_uniform(beta, v, 0.0, 0.1, rng);
      }
      normalize_rows(theta);
      normalize_rows(beta);
      break;

    case GenerationMode::stratified: {
      if (spec.group_count < 1) throw GenerationError("group_count must be >= 1");
      const auto g = static_cast<std::size_t>(spec.group_count);
      auto order = by_descending_out_degree(graph);
      // Groups of equal size (the first n % g groups take one extra node);
      // group k, holding the k-th highest degrees, draws from U(k/g, (k+1)/g).
      std::vector<std::size_t> group_of(graph.node_count());
      const std::size_t base = graph.node_count() / g, extra = graph.node_count() % g;
      std::size_t pos = 0;
      for (std::size_t k = 0; k < g; ++k) {
        std::size_t size = base + (k < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) group_of[order[pos++]] = k;
      }
      for (Eigen::Index v = 0; v < n; ++v) {
        double lo = static_cast<double>(group_of[v]) / static_cast<double>(g);
        double hi = static_cast<double>(group_of[v] + 1) / static_cast<double>(g);
        fill_uniform(theta, v, lo, hi, rng);
        fill_uniform(beta, v, lo, hi, rng);
      }
      normalize_rows(theta);
      normalize_rows(beta);
      break;
    }

    case GenerationMode::two_type: {
      if (!(spec.high_degree_fraction >= 0.0 && spec.high_degree_fraction <= 1.0))
        throw GenerationError("high_degree_fraction must lie in [0, 1]");
      if (!(spec.cross_edge_removal >= 0.0 && spec.cross_edge_removal <= 1.0))
        throw GenerationError("cross_edge_removal must lie in [0, 1]");
      auto order = by_descending_out_degree(graph);
      auto high_count = static_cast<std::size_t>(
          std::ceil(spec.high_degree_fraction * static_cast<double>(graph.node_count())));
      std::vector<bool> type1(graph.node_count(), false);
      for (std::size_t i = 0; i < high_count; ++i) type1[order[i]] = true;
      // Raw ranges, no per-vector normalization, so the contrast between types
      // survives into the edge probabilities.
      for (Eigen::Index v = 0; v < n; ++v) {
        auto [lo, hi] = type1[v] ? spec.low_range : spec.high_range;
        fill_uniform(theta, v, lo, hi, rng);
        fill_uniform(beta, v, lo, hi, rng);
      }
      if (spec.cross_edge_removal > 0.0) {
        std::vector<Edge> kept;
        kept.reserve(graph.edge_count());
        for (const Edge& e : graph.edges()) {
          bool cross = type1[e.giving] != type1[e.receiving];
          if (cross && rng.bernoulli(spec.cross_edge_removal)) continue;
          kept.push_back(e);
        }
        std::vector<std::uint64_t> ids(graph.original_ids().begin(), graph.original_ids().end());
        out_graph = DirectedGraph(graph.node_count(), std::move(kept), std::move(ids));
      }
      break;
    }
  }

  if (spec.target_mean_p && out_graph.edge_count() > 0) {
    auto raw = raw_products(out_graph, theta, beta);
    double m = solve_mean_scale(raw, *spec.target_mean_p);
    std::size_t clamped = std::count_if(raw.begin(), raw.end(), [&](double r) { return m * r > 1.0; });
    if (2 * clamped > raw.size())
      throw GenerationError("target mean activation probability would clamp more than half of the "
                            "edges; use a smaller target");
    double s = std::sqrt(m);
    theta *= s;
    beta *= s;
  }
  auto model = GroundTruthModel::from_factors(out_graph, std::move(theta), std::move(beta));
  return {std::move(out_graph), std::move(model)};
}

double apply_perturbation(double p, const PerturbationSpec& spec, Rng& rng) {
  double eta = spec.noise_halfwidth > 0.0 ? rng.uniform(-spec.noise_halfwidth, spec.noise_halfwidth)
                                          : 0.0;
  return clamp01(spec.scale * p + eta);
}

CascadeResult simulate_cascade(const DirectedGraph& graph, std::span<const double> probabilities,
                               std::span<const NodeId> seeds, Rng& rng) {
  if (probabilities.size() != graph.edge_count())
    throw std::invalid_argument("probability vector does not match edge count");
  CascadeResult result;
  std::vector<std::uint8_t> active(graph.node_count(), 0);
  for (NodeId s : seeds) {
    if (s >= graph.node_count()) throw std::out_of_range("seed id " + std::to_string(s) + " out of range");
    if (!active[s]) {
      active[s] = 1;
      result.activated_nodes.push_back(s);
    }
  }
  // activated_nodes doubles as the BFS queue.
  for (std::size_t head = 0; head < result.activated_nodes.size(); ++head) {
    NodeId u = result.activated_nodes[head];
    for (EdgeId e : graph.out_edges(u)) {
      bool live = rng.uniform() < probabilities[e];
      result.observed_edges.push_back(e);
      result.outcomes.push_back(live ? 1 : 0);
      NodeId r = graph.edge(e).receiving;
      if (live && !active[r]) {
        active[r] = 1;
        result.activated_nodes.push_back(r);
      }
    }
  }
  return result;
}

Environment::Environment(const DirectedGraph& graph, GroundTruthModel model,
                         PerturbationSpec perturbation)
    : graph_(&graph), model_(std::move(model)), perturbation_(perturbation) {
  if (model_.p_star.size() != graph.edge_count())
    throw GenerationError("ground truth does not match graph");
  if (perturbation_.noise_halfwidth < 0.0 || !(perturbation_.scale > 0.0))
    throw GenerationError("perturbation needs noise_halfwidth >= 0 and scale > 0");
}

std::vector<double> Environment::effective_probabilities(Rng& rng) const {
  std::vector<double> p(model_.p_star);
  const auto& pert = perturbation_;
  if (pert.noise_halfwidth == 0.0 && pert.scale == 1.0) return p;
  if (pert.per_round_global_noise) {
    PerturbationSpec scale_only{0.0, pert.scale, false};
    double eta = pert.noise_halfwidth > 0.0 ? rng.uniform(-pert.noise_halfwidth, pert.noise_halfwidth) : 0.0;
    for (double& x : p) x = clamp01(apply_perturbation(x, scale_only, rng) + eta);
  } else {
    for (double& x : p) x = apply_perturbation(x, pert, rng);
  }
  return p;
}

CascadeResult Environment::play(std::span<const NodeId> seeds, Rng& rng) const {
  auto p = effective_probabilities(rng);
  return simulate_cascade(*graph_, p, seeds, rng);
}

nlohmann::json ground_truth_to_json(const GroundTruthModel& model) {
  auto rows = [](const FactorMatrix& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      arr.push_back(std::move(row));
    }
    return arr;
  };
  return {{"dim", model.dim}, {"theta_star", rows(model.theta_star)}, {"beta_star", rows(model.beta_star)}};
}

GroundTruthModel ground_truth_from_json(const nlohmann::json& doc, const DirectedGraph& graph) {
  const int dim = doc.at("dim").get<int>();
  auto read = [&](const char* key) {
    const auto& arr = doc.at(key);
    if (arr.size() != graph.node_count())
      throw GenerationError(std::string(key) + ": expected one row per node");
    FactorMatrix m(static_cast<Eigen::Index>(arr.size()), dim);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (arr[i].size() != static_cast<std::size_t>(dim))
        throw GenerationError(std::string(key) + ": row length differs from dim");
      for (int j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), j) = arr[i][j].get<double>();
    }
    return m;
  };
  return GroundTruthModel::from_factors(graph, read("theta_star"), read("beta_star"));
}

std::vector<double> soft_out_degrees(const DirectedGraph& graph, std::span<const double> p) {
  std::vector<double> soft(graph.node_count(), 0.0);
  for (EdgeId e = 0; e < graph.edge_count(); ++e) soft[graph.edge(e).giving] += p[e];
  return soft;
}

double coefficient_of_variation(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return mean == 0.0 ? 0.0 : std::sqrt(ss / n) / mean;
}

}  // namespace oimfb
