#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "oimfb/environment.hpp"
#include "oimfb/graph.hpp"
#include "oimfb/oracle.hpp"

namespace oimfb {

enum class UpdateMode { incremental, exact_recompute };

// Which factor each confidence-width norm is evaluated at.
//  partner:   a_beta[g] * |beta_hat[r]|_{A[g]^-1} + a_theta[r] * |theta_hat[g]|_{C[r]^-1}
//  same_node: a_beta[g] * |beta_hat[g]|_{A[g]^-1} + a_theta[r] * |theta_hat[r]|_{C[r]^-1}
enum class NormPairing { partner, same_node };

struct ImfbHyperparams {
  int dim = 20;
  double lambda1 = 1.0;  // regularizes C (susceptibility side)
  double lambda2 = 1.0;  // regularizes A (influence side)
  double q = 0.9;
  double delta = 0.1;
  UpdateMode update_mode = UpdateMode::incremental;
  NormPairing pairing = NormPairing::partner;
  // Multiplies the whole confidence width; 1 is the width of the bound itself.
  double exploration_scale = 1.0;
  // Fixed-point loop of exact-recompute mode.
  double recompute_tolerance = 1e-8;
  int recompute_max_sweeps = 50;

  // Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

struct Observation {
  std::size_t round;
  EdgeId edge;
  std::uint8_t outcome;
};

// Per-node factor statistics and estimates.
//   A[v] = lambda2 I + sum beta_hat beta_hat^T over observed edges v gives on
//   b[v] = sum y beta_hat over the same edges
//   C[v] = lambda1 I + sum theta_hat theta_hat^T over observed edges v receives
//   d[v] = sum y theta_hat over the same edges
// Cholesky factors and confidence multipliers are cached per node and kept in
// sync by every mutating function below.
struct ImfbState {
  ImfbHyperparams hp;
  std::size_t round = 1;
  std::vector<Eigen::MatrixXd> A, C;
  std::vector<Eigen::VectorXd> b, d;
  FactorMatrix theta_hat, beta_hat;
  std::vector<Observation> history;  // exact-recompute mode only

  std::vector<Eigen::LLT<Eigen::MatrixXd>> A_chol, C_chol;
  std::vector<double> alpha_beta;   // from det(A[v])
  std::vector<double> alpha_theta;  // from det(C[v])

  std::size_t node_count() const { return A.size(); }
  // Two d-vectors per node; independent of the edge count.
  std::size_t learned_parameter_count() const {
    return 2 * static_cast<std::size_t>(hp.dim) * node_count();
  }
};

class ImfbError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

ImfbState init_state(const DirectedGraph& graph, const ImfbHyperparams& hp, std::uint64_t seed);

// Recomputes the Cholesky factors and confidence multipliers of node v from
// the current A[v] and C[v]. Throws ImfbError if either is not SPD.
void refresh_node(ImfbState& state, NodeId v);

// sqrt(max(0, log det(M) - dim log(lambda) - 2 log delta)) + the q-dependent offset.
double confidence_multiplier(double log_det, int dim, double lambda, double q, double delta);

double confidence_width(const ImfbState& state, const DirectedGraph& graph, EdgeId e);

struct UcbMatrix {
  std::vector<double> p_bar;
  std::vector<double> cb;
};

// p_bar[e] = clamp(theta_hat[g] . beta_hat[r] + CB[e], 0, 1). The parallel
// version fans out over edges; the serial one is the reference.
UcbMatrix ucb_matrix(const ImfbState& state, const DirectedGraph& graph);
UcbMatrix ucb_matrix_serial(const ImfbState& state, const DirectedGraph& graph);

// theta_hat[g] . beta_hat[r] for every edge.
std::vector<double> point_estimates(const ImfbState& state, const DirectedGraph& graph);

// Folds one round of edge feedback into the statistics and advances the round.
void update(ImfbState& state, const CascadeResult& cascade, const DirectedGraph& graph);

// One half-step of coordinate descent over the full history: rebuilds A, b
// (or C, d) from the current partner estimates and re-solves every node that
// appears in the history on that side. Returns the max entry change.
double refit_influence(ImfbState& state, const DirectedGraph& graph);
double refit_susceptibility(ImfbState& state, const DirectedGraph& graph);

struct RoundOutcome {
  std::vector<NodeId> seeds;
  CascadeResult cascade;
  UcbMatrix ucb;
};

// ucb_matrix -> oracle -> environment cascade -> update.
RoundOutcome play_round(ImfbState& state, const DirectedGraph& graph, const Oracle& oracle, int k,
                        const Environment& environment, Rng& rng);

// State snapshot: round, hyperparameters, per-node matrices row-major, history.
nlohmann::json state_to_json(const ImfbState& state);
ImfbState state_from_json(const nlohmann::json& doc);

}  // namespace oimfb
