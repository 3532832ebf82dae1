#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oimfb/graph.hpp"
#include "oimfb/rng.hpp"

namespace oimfb {

// One node factor per row.
using FactorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ground-truth influence (theta) and susceptibility (beta) factors per node and
// the per-edge activation probabilities they induce. Environment-only secret.
struct GroundTruthModel {
  int dim = 0;
  FactorMatrix theta_star;
  FactorMatrix beta_star;
  std::vector<double> p_star;

  // clamp(theta_g . beta_r, 0, 1) for every edge of the graph.
  static GroundTruthModel from_factors(const DirectedGraph& graph, FactorMatrix theta,
                                       FactorMatrix beta);
};

enum class GenerationMode { uniform, stratified, two_type };

struct GenerationSpec {
  GenerationMode mode = GenerationMode::uniform;
  int dim = 20;
  std::optional<double> target_mean_p;
  int group_count = 10;
  std::uint64_t rng_seed = 0;

  // two-type mode: the top `high_degree_fraction` of nodes by out-degree get
  // factors from `low_range`, everyone else from `high_range`. Cross-type
  // edges are then removed independently with `cross_edge_removal`.
  double high_degree_fraction = 0.1;
  double cross_edge_removal = 0.0;
  std::pair<double, double> low_range{0.0, 0.1};
  std::pair<double, double> high_range{0.9, 1.0};
};

struct GeneratedEnvironment {
  DirectedGraph graph;  // the input graph, minus any removed cross-type edges
  GroundTruthModel model;
};

// Throws GenerationError when the target mean cannot be met with at most half
// of the edges clamped at 1.
GeneratedEnvironment generate_ground_truth(const DirectedGraph& graph, const GenerationSpec& spec);

// Multiplier m such that mean(clamp(m * raw)) == target; exposed for tests.
double solve_mean_scale(std::span<const double> raw, double target);

struct PerturbationSpec {
  double noise_halfwidth = 0.0;  // eta ~ U(-a, a)
  double scale = 1.0;            // c
  bool per_round_global_noise = false;
};

// clamp(c * p + eta, 0, 1) with a fresh eta drawn from rng (none drawn if a == 0).
double apply_perturbation(double p, const PerturbationSpec& spec, Rng& rng);

// One round of edge-level feedback. observed_edges[i] has outcome outcomes[i].
struct CascadeResult {
  std::vector<NodeId> activated_nodes;  // seeds first, then by activation wave
  std::vector<EdgeId> observed_edges;
  std::vector<std::uint8_t> outcomes;

  std::size_t reward() const { return activated_nodes.size(); }
  friend bool operator==(const CascadeResult&, const CascadeResult&) = default;
};

// Breadth-first independent cascade. Every out-edge of an activated node is
// observed and sampled exactly once, including edges into already-active nodes.
// Duplicate seeds are ignored; an out-of-range seed throws std::out_of_range.
CascadeResult simulate_cascade(const DirectedGraph& graph, std::span<const double> probabilities,
                               std::span<const NodeId> seeds, Rng& rng);

// Ground truth plus perturbation knobs; produces cascades against the true model.
class Environment {
 public:
  Environment(const DirectedGraph& graph, GroundTruthModel model, PerturbationSpec perturbation = {});

  const DirectedGraph& graph() const { return *graph_; }
  const GroundTruthModel& truth() const { return model_; }
  const PerturbationSpec& perturbation() const { return perturbation_; }

  std::vector<double> effective_probabilities(Rng& rng) const;
  CascadeResult play(std::span<const NodeId> seeds, Rng& rng) const;

 private:
  const DirectedGraph* graph_;
  GroundTruthModel model_;
  PerturbationSpec perturbation_;
};

// {dim, theta_star, beta_star}; p_star is recomputed from the graph on load.
nlohmann::json ground_truth_to_json(const GroundTruthModel& model);
GroundTruthModel ground_truth_from_json(const nlohmann::json& doc, const DirectedGraph& graph);

// Sum of true activation probabilities on each node's out-edges.
std::vector<double> soft_out_degrees(const DirectedGraph& graph, std::span<const double> p);

double coefficient_of_variation(std::span<const double> values);

}  // namespace oimfb
