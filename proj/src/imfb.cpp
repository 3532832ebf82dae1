#include "oimfb/imfb.hpp"

#include <algorithm>
#include <cmath>

namespace oimfb {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// |x|_{M^-1} = |L^-1 x| for M = L L^T.
double inverse_norm(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& x) {
  return llt.matrixL().solve(x).norm();
}

Eigen::VectorXd row(const FactorMatrix& m, NodeId v) { return m.row(v).transpose(); }

void factor_or_throw(Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& m, const char* which,
                     NodeId v) {
  llt.compute(m);
  if (llt.info() != Eigen::Success)
    throw ImfbError(std::string(which) + " statistics of node " + std::to_string(v) +
                    " lost positive definiteness");
}

}  // namespace

void ImfbHyperparams::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (!(lambda1 > 0.0)) throw std::invalid_argument("lambda1 must be > 0");
  if (!(lambda2 > 0.0)) throw std::invalid_argument("lambda2 must be > 0");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("q must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(recompute_tolerance > 0.0)) throw std::invalid_argument("recompute_tolerance must be > 0");
  if (!(exploration_scale >= 0.0)) throw std::invalid_argument("exploration_scale must be >= 0");
  if (recompute_max_sweeps < 1) throw std::invalid_argument("recompute_max_sweeps must be >= 1");
}

double confidence_multiplier(double log_det_m, int dim, double lambda, double q, double delta) {
  const double log_ratio = log_det_m - dim * std::log(lambda) - 2.0 * std::log(delta);
  return std::sqrt(std::max(0.0, log_ratio)) +
         (lambda * (1.0 - q) + 2.0 * q) / (std::sqrt(lambda) * (1.0 - q));
}

void refresh_node(ImfbState& state, NodeId v) {
  const auto& hp = state.hp;
  factor_or_throw(state.A_chol[v], state.A[v], "influence", v);
  factor_or_throw(state.C_chol[v], state.C[v], "susceptibility", v);
  // alpha^beta pairs det(A) with lambda1, alpha^theta pairs det(C) with lambda2.
  state.alpha_beta[v] = confidence_multiplier(log_det(state.A_chol[v]), hp.dim, hp.lambda1, hp.q, hp.delta);
  state.alpha_theta[v] = confidence_multiplier(log_det(state.C_chol[v]), hp.dim, hp.lambda2, hp.q, hp.delta);
}

ImfbState init_state(const DirectedGraph& graph, const ImfbHyperparams& hp, std::uint64_t seed) {
  hp.validate();
  const std::size_t n = graph.node_count();
  const int d = hp.dim;
  ImfbState s;
  s.hp = hp;
  s.A.assign(n, hp.lambda2 * Eigen::MatrixXd::Identity(d, d));
  s.C.assign(n, hp.lambda1 * Eigen::MatrixXd::Identity(d, d));
  s.b.assign(n, Eigen::VectorXd::Zero(d));
  s.d.assign(n, Eigen::VectorXd::Zero(d));
  s.theta_hat.resize(static_cast<Eigen::Index>(n), d);
  s.beta_hat.resize(static_cast<Eigen::Index>(n), d);
  Rng rng(seed);
  for (Eigen::Index v = 0; v < static_cast<Eigen::Index>(n); ++v) {
    for (int j = 0; j < d; ++j) s.theta_hat(v, j) = rng.uniform();
    for (int j = 0; j < d; ++j) s.beta_hat(v, j) = rng.uniform();
    s.theta_hat.row(v).normalize();
    s.beta_hat.row(v).normalize();
  }
  s.A_chol.resize(n);
  s.C_chol.resize(n);
  s.alpha_beta.assign(n, 0.0);
  s.alpha_theta.assign(n, 0.0);
  for (NodeId v = 0; v < n; ++v) refresh_node(s, v);
  return s;
}

double confidence_width(const ImfbState& state, const DirectedGraph& graph, EdgeId e) {
  const Edge& ed = graph.edge(e);
  const NodeId g = ed.giving, r = ed.receiving;
  const bool partner = state.hp.pairing == NormPairing::partner;
  const Eigen::VectorXd beta_arg = row(state.beta_hat, partner ? r : g);
  const Eigen::VectorXd theta_arg = row(state.theta_hat, partner ? g : r);
  const double decay = 2.0 * std::pow(state.hp.q, 2.0 * static_cast<double>(state.round));
  return state.hp.exploration_scale * (state.alpha_beta[g] * inverse_norm(state.A_chol[g], beta_arg) +
                                       state.alpha_theta[r] * inverse_norm(state.C_chol[r], theta_arg) + decay);
}

namespace {

void fill_ucb_entry(const ImfbState& state, const DirectedGraph& graph, EdgeId e, UcbMatrix& out) {
  const Edge& ed = graph.edge(e);
  const double cb = confidence_width(state, graph, e);
  out.cb[e] = cb;
  out.p_bar[e] = clamp01(state.theta_hat.row(ed.giving).dot(state.beta_hat.row(ed.receiving)) + cb);
}

}  // namespace

UcbMatrix ucb_matrix_serial(const ImfbState& state, const DirectedGraph& graph) {
  UcbMatrix out{std::vector<double>(graph.edge_count()), std::vector<double>(graph.edge_count())};
  for (EdgeId e = 0; e < graph.edge_count(); ++e) fill_ucb_entry(state, graph, e, out);
  return out;
}

UcbMatrix ucb_matrix(const ImfbState& state, const DirectedGraph& graph) {
  UcbMatrix out{std::vector<double>(graph.edge_count()), std::vector<double>(graph.edge_count())};
  const auto m = static_cast<std::int64_t>(graph.edge_count());
#pragma omp parallel for schedule(static)
  for (std::int64_t e = 0; e < m; ++e) fill_ucb_entry(state, graph, static_cast<EdgeId>(e), out);
  return out;
}

std::vector<double> point_estimates(const ImfbState& state, const DirectedGraph& graph) {
  std::vector<double> p(graph.edge_count());
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    const Edge& ed = graph.edge(e);
    p[e] = state.theta_hat.row(ed.giving).dot(state.beta_hat.row(ed.receiving));
  }
  return p;
}

namespace {

void check_cascade(const CascadeResult& cascade, const DirectedGraph& graph) {
  if (cascade.outcomes.size() != cascade.observed_edges.size())
    throw std::invalid_argument("cascade outcomes do not match observed edges");
  for (EdgeId e : cascade.observed_edges)
    if (e >= graph.edge_count())
      throw std::invalid_argument("cascade references unknown edge " + std::to_string(e));
}

void solve_influence(ImfbState& s, NodeId v) {
  refresh_node(s, v);
  s.theta_hat.row(v) = s.A_chol[v].solve(s.b[v]).transpose();
}

void solve_susceptibility(ImfbState& s, NodeId v) {
  refresh_node(s, v);
  s.beta_hat.row(v) = s.C_chol[v].solve(s.d[v]).transpose();
}

void update_incremental(ImfbState& s, const CascadeResult& cascade, const DirectedGraph& graph) {
  const std::size_t n = s.node_count();
  std::vector<std::uint8_t> giver_touched(n, 0), receiver_touched(n, 0);
  // The rank-one terms all use the estimates that entered this round: no
  // estimate changes until every statistic has been accumulated.
  for (std::size_t i = 0; i < cascade.observed_edges.size(); ++i) {
    const Edge& ed = graph.edge(cascade.observed_edges[i]);
    const double y = cascade.outcomes[i];
    const Eigen::VectorXd beta_r = row(s.beta_hat, ed.receiving);
    const Eigen::VectorXd theta_g = row(s.theta_hat, ed.giving);
    s.A[ed.giving].noalias() += beta_r * beta_r.transpose();
    s.b[ed.giving] += y * beta_r;
    s.C[ed.receiving].noalias() += theta_g * theta_g.transpose();
    s.d[ed.receiving] += y * theta_g;
    giver_touched[ed.giving] = 1;
    receiver_touched[ed.receiving] = 1;
  }
  for (NodeId v = 0; v < n; ++v) {
    if (giver_touched[v]) solve_influence(s, v);
  }
  for (NodeId v = 0; v < n; ++v) {
    if (receiver_touched[v]) solve_susceptibility(s, v);
  }
}

}  // namespace

double refit_influence(ImfbState& s, const DirectedGraph& graph) {
  const std::size_t n = s.node_count();
  const int dim = s.hp.dim;
  std::vector<std::uint8_t> present(n, 0);
  for (const auto& obs : s.history) present[graph.edge(obs.edge).giving] = 1;
  for (NodeId v = 0; v < n; ++v) {
    if (!present[v]) continue;
    s.A[v] = s.hp.lambda2 * Eigen::MatrixXd::Identity(dim, dim);
    s.b[v].setZero();
  }
  for (const auto& obs : s.history) {
    const Edge& ed = graph.edge(obs.edge);
    const Eigen::VectorXd beta_r = row(s.beta_hat, ed.receiving);
    s.A[ed.giving].noalias() += beta_r * beta_r.transpose();
    s.b[ed.giving] += static_cast<double>(obs.outcome) * beta_r;
  }
  double change = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    if (!present[v]) continue;
    const Eigen::VectorXd before = row(s.theta_hat, v);
    solve_influence(s, v);
    change = std::max(change, (row(s.theta_hat, v) - before).cwiseAbs().maxCoeff());
  }
  return change;
}

double refit_susceptibility(ImfbState& s, const DirectedGraph& graph) {
  const std::size_t n = s.node_count();
  const int dim = s.hp.dim;
  std::vector<std::uint8_t> present(n, 0);
  for (const auto& obs : s.history) present[graph.edge(obs.edge).receiving] = 1;
  for (NodeId v = 0; v < n; ++v) {
    if (!present[v]) continue;
    s.C[v] = s.hp.lambda1 * Eigen::MatrixXd::Identity(dim, dim);
    s.d[v].setZero();
  }
  for (const auto& obs : s.history) {
    const Edge& ed = graph.edge(obs.edge);
    const Eigen::VectorXd theta_g = row(s.theta_hat, ed.giving);
    s.C[ed.receiving].noalias() += theta_g * theta_g.transpose();
    s.d[ed.receiving] += static_cast<double>(obs.outcome) * theta_g;
  }
  double change = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    if (!present[v]) continue;
    const Eigen::VectorXd before = row(s.beta_hat, v);
    solve_susceptibility(s, v);
    change = std::max(change, (row(s.beta_hat, v) - before).cwiseAbs().maxCoeff());
  }
  return change;
}

void update(ImfbState& state, const CascadeResult& cascade, const DirectedGraph& graph) {
  check_cascade(cascade, graph);
  if (state.hp.update_mode == UpdateMode::incremental) {
    update_incremental(state, cascade, graph);
  } else {
    for (std::size_t i = 0; i < cascade.observed_edges.size(); ++i)
      state.history.push_back({state.round, cascade.observed_edges[i], cascade.outcomes[i]});
    if (!cascade.observed_edges.empty()) {
      for (int sweep = 0; sweep < state.hp.recompute_max_sweeps; ++sweep) {
        double change = refit_influence(state, graph);
        change = std::max(change, refit_susceptibility(state, graph));
        if (change < state.hp.recompute_tolerance) break;
      }
    }
  }
  ++state.round;
}

RoundOutcome play_round(ImfbState& state, const DirectedGraph& graph, const Oracle& oracle, int k,
                        const Environment& environment, Rng& rng) {
  RoundOutcome out;
  out.ucb = ucb_matrix(state, graph);
  out.seeds = oracle.select(graph, out.ucb.p_bar, k);
  out.cascade = environment.play(out.seeds, rng);
  update(state, out.cascade, graph);
  return out;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j, int rows, int cols) {
  auto flat = j.get<std::vector<double>>();
  if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw std::invalid_argument("snapshot matrix has wrong size");
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = flat[static_cast<std::size_t>(i * cols + k)];
  return m;
}

}  // namespace

nlohmann::json state_to_json(const ImfbState& s) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t v = 0; v < s.node_count(); ++v) {
    nodes.push_back({{"A", matrix_json(s.A[v])},
                     {"b", matrix_json(s.b[v])},
                     {"C", matrix_json(s.C[v])},
                     {"d", matrix_json(s.d[v])},
                     {"theta_hat", matrix_json(s.theta_hat.row(static_cast<Eigen::Index>(v)))},
                     {"beta_hat", matrix_json(s.beta_hat.row(static_cast<Eigen::Index>(v)))}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& o : s.history) history.push_back({o.round, o.edge, o.outcome});
  const auto& hp = s.hp;
  return {{"round", s.round},
          {"hyperparams",
           {{"dim", hp.dim},
            {"lambda1", hp.lambda1},
            {"lambda2", hp.lambda2},
            {"q", hp.q},
            {"delta", hp.delta},
            {"update_mode", hp.update_mode == UpdateMode::incremental ? "incremental" : "exact-recompute"},
            {"pairing", hp.pairing == NormPairing::partner ? "partner" : "same-node"},
            {"exploration_scale", hp.exploration_scale},
            {"recompute_tolerance", hp.recompute_tolerance},
            {"recompute_max_sweeps", hp.recompute_max_sweeps}}},
          {"nodes", std::move(nodes)},
          {"history", std::move(history)}};
}

ImfbState state_from_json(const nlohmann::json& doc) {
  ImfbState s;
  const auto& h = doc.at("hyperparams");
  auto& hp = s.hp;
  hp.dim = h.at("dim").get<int>();
  hp.lambda1 = h.at("lambda1").get<double>();
  hp.lambda2 = h.at("lambda2").get<double>();
  hp.q = h.at("q").get<double>();
  hp.delta = h.at("delta").get<double>();
  hp.update_mode = h.at("update_mode").get<std::string>() == "incremental" ? UpdateMode::incremental
                                                                           : UpdateMode::exact_recompute;
  hp.pairing = h.at("pairing").get<std::string>() == "partner" ? NormPairing::partner : NormPairing::same_node;
  hp.exploration_scale = h.value("exploration_scale", 1.0);
  hp.recompute_tolerance = h.at("recompute_tolerance").get<double>();
  hp.recompute_max_sweeps = h.at("recompute_max_sweeps").get<int>();
  hp.validate();
  s.round = doc.at("round").get<std::size_t>();
  const auto& nodes = doc.at("nodes");
  const std::size_t n = nodes.size();
  const int d = hp.dim;
  s.theta_hat.resize(static_cast<Eigen::Index>(n), d);
  s.beta_hat.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& node = nodes[v];
    s.A.push_back(matrix_from(node.at("A"), d, d));
    s.b.push_back(matrix_from(node.at("b"), d, 1));
    s.C.push_back(matrix_from(node.at("C"), d, d));
    s.d.push_back(matrix_from(node.at("d"), d, 1));
    s.theta_hat.row(static_cast<Eigen::Index>(v)) = matrix_from(node.at("theta_hat"), 1, d);
    s.beta_hat.row(static_cast<Eigen::Index>(v)) = matrix_from(node.at("beta_hat"), 1, d);
  }
  for (const auto& o : doc.at("history"))
    s.history.push_back({o.at(0).get<std::size_t>(), o.at(1).get<EdgeId>(), o.at(2).get<std::uint8_t>()});
  s.A_chol.resize(n);
  s.C_chol.resize(n);
  s.alpha_beta.assign(n, 0.0);
  s.alpha_theta.assign(n, 0.0);
  for (NodeId v = 0; v < n; ++v) refresh_node(s, v);
  return s;
}

}  // namespace oimfb
