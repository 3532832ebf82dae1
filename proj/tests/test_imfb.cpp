#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

#include "helpers.hpp"
#include "oimfb/environment.hpp"
#include "oimfb/imfb.hpp"
#include "oimfb/oracle.hpp"

using namespace oimfb;

namespace {

ImfbHyperparams hp_dim(int d) {
  ImfbHyperparams hp;
  hp.dim = d;
  return hp;
}

CascadeResult feedback(std::vector<EdgeId> edges, std::vector<std::uint8_t> y) {
  CascadeResult c;
  c.observed_edges = std::move(edges);
  c.outcomes = std::move(y);
  return c;
}

struct Bench {
  DirectedGraph graph;
  GroundTruthModel truth;
};

Bench small_bench(std::size_t n, std::size_t m, int dim, double target, std::uint64_t seed) {
  auto g = erdos_renyi_gnm(n, m, seed);
  GenerationSpec spec;
  spec.dim = dim;
  spec.target_mean_p = target;
  spec.rng_seed = seed + 1;
  auto env = generate_ground_truth(g, spec);
  return {env.graph, env.model};
}

}  // namespace

TEST_CASE("init_state: regularized identities, unit-norm factors, seeded") {
  auto g = erdos_renyi_gnm(10, 30, 1);
  ImfbHyperparams hp = hp_dim(3);
  hp.lambda1 = 2.0;
  auto s = init_state(g, hp, 7);
  CHECK(s.A[0].isApprox(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(s.A[0].determinant() == doctest::Approx(1.0));
  CHECK(s.C[0].isApprox(2.0 * Eigen::MatrixXd::Identity(3, 3)));
  for (Eigen::Index v = 0; v < 10; ++v) {
    CHECK(s.theta_hat.row(v).norm() == doctest::Approx(1.0));
    CHECK(s.beta_hat.row(v).norm() == doctest::Approx(1.0));
    CHECK(s.b[v].isZero());
    CHECK(s.d[v].isZero());
  }
  auto t = init_state(g, hp, 7);
  CHECK(t.theta_hat == s.theta_hat);
  CHECK(t.beta_hat == s.beta_hat);
  CHECK(s.round == 1);
  CHECK(s.learned_parameter_count() == 2 * 3 * 10);
}

TEST_CASE("hyperparameter validation") {
  auto g = testing::path3();
  ImfbHyperparams bad;
  bad.q = 1.0;
  CHECK_THROWS_AS(init_state(g, bad, 1), std::invalid_argument);
  bad = {};
  bad.lambda2 = 0.0;
  CHECK_THROWS_AS(init_state(g, bad, 1), std::invalid_argument);
  bad = {};
  bad.dim = 0;
  CHECK_THROWS_AS(init_state(g, bad, 1), std::invalid_argument);
}

TEST_CASE("confidence width: hand-evaluated fresh one-dimensional state") {
  DirectedGraph g(2, {{0, 1}});
  ImfbHyperparams hp = hp_dim(1);
  hp.q = 0.5;
  hp.delta = 0.1;
  auto s = init_state(g, hp, 1);
  s.theta_hat.setOnes();
  s.beta_hat.setOnes();
  // Both norms are 1 under identity matrices; both multipliers are
  // sqrt(ln(1 / 0.01)) + (0.5 + 1) / 0.5.
  const double alpha = std::sqrt(std::log(100.0)) + 3.0;
  const double expected = 2.0 * alpha + 2.0 * 0.25;
  CHECK(std::abs(confidence_width(s, g, 0) - expected) < 1e-12);
}

TEST_CASE("confidence width: zero factors leave only the decay term") {
  DirectedGraph g(2, {{0, 1}});
  ImfbHyperparams hp = hp_dim(4);
  hp.q = 0.5;
  auto s = init_state(g, hp, 1);
  s.theta_hat.setZero();
  s.beta_hat.setZero();
  s.round = 2;
  CHECK(confidence_width(s, g, 0) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("confidence width: partner and same-node pairings use different factors") {
  DirectedGraph g(2, {{0, 1}});
  ImfbHyperparams hp = hp_dim(2);
  auto s = init_state(g, hp, 3);
  s.A[0] = Eigen::Matrix2d{{4.0, 0.0}, {0.0, 1.0}};
  s.C[1] = Eigen::Matrix2d{{1.0, 0.0}, {0.0, 9.0}};
  refresh_node(s, 0);
  refresh_node(s, 1);
  s.theta_hat.row(0) << 1.0, 0.0;
  s.theta_hat.row(1) << 0.0, 1.0;
  s.beta_hat.row(0) << 0.0, 2.0;
  s.beta_hat.row(1) << 2.0, 0.0;
  const double decay = 2.0 * std::pow(hp.q, 2.0);
  const double ab = s.alpha_beta[0], at = s.alpha_theta[1];
  // partner: |beta_1|_{A_0^-1} = 2 / 2 = 1, |theta_0|_{C_1^-1} = 1.
  CHECK(confidence_width(s, g, 0) == doctest::Approx(ab * 1.0 + at * 1.0 + decay));
  s.hp.pairing = NormPairing::same_node;
  // same node: |beta_0|_{A_0^-1} = 2, |theta_1|_{C_1^-1} = 1 / 3.
  CHECK(confidence_width(s, g, 0) == doctest::Approx(ab * 2.0 + at / 3.0 + decay));
}

TEST_CASE("multipliers use log det of the matching statistic") {
  const double ld = std::log(5.0);
  const double expected = std::sqrt(ld - 2.0 * std::log(0.5) - 3.0 * std::log(2.0)) +
                          (2.0 * 0.8 + 2.0 * 0.2) / (std::sqrt(2.0) * 0.8);
  CHECK(confidence_multiplier(ld, 3, 2.0, 0.2, 0.5) == doctest::Approx(expected).epsilon(1e-14));
  // The log term is floored at zero.
  CHECK(confidence_multiplier(-50.0, 1, 1.0, 0.5, 0.9) == doctest::Approx(3.0));
}

TEST_CASE("ucb matrix clamps and passes through") {
  DirectedGraph g(2, {{0, 1}});
  ImfbHyperparams hp = hp_dim(1);
  auto s = init_state(g, hp, 1);
  s.theta_hat(0, 0) = 1.3;
  s.beta_hat(1, 0) = 1.0;
  CHECK(ucb_matrix(s, g).p_bar[0] == 1.0);

  s.hp.exploration_scale = 0.0;
  s.theta_hat(0, 0) = -0.2;
  CHECK(ucb_matrix(s, g).p_bar[0] == 0.0);
  CHECK(ucb_matrix(s, g).cb[0] == 0.0);

  s.theta_hat(0, 0) = 0.3;
  s.hp.exploration_scale = 1.0;
  const double cb1 = confidence_width(s, g, 0);
  s.hp.exploration_scale = 0.25 / cb1;
  auto u = ucb_matrix(s, g);
  CHECK(u.cb[0] == doctest::Approx(0.25));
  CHECK(u.p_bar[0] == doctest::Approx(0.55));
}

TEST_CASE("property: ucb is non-negative and serial equals parallel") {
  auto b = small_bench(40, 300, 3, 0.1, 5);
  auto s = init_state(b.graph, hp_dim(4), 3);
  Environment env(b.graph, b.truth);
  auto oracle = make_oracle({});
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    auto par = ucb_matrix(s, b.graph);
    auto ser = ucb_matrix_serial(s, b.graph);
    CHECK(par.p_bar == ser.p_bar);
    CHECK(par.cb == ser.cb);
    for (double c : par.cb) CHECK(c >= 0.0);
    for (double p : par.p_bar) CHECK((p >= 0.0 && p <= 1.0));
    play_round(s, b.graph, *oracle, 4, env, rng);
  }
}

TEST_CASE("update: empty feedback only advances the round") {
  auto g = erdos_renyi_gnm(8, 20, 2);
  for (auto mode : {UpdateMode::incremental, UpdateMode::exact_recompute}) {
    ImfbHyperparams hp = hp_dim(3);
    hp.update_mode = mode;
    auto s = init_state(g, hp, 4);
    auto before = s;
    update(s, {}, g);
    CHECK(s.round == 2);
    CHECK(s.theta_hat == before.theta_hat);
    CHECK(s.beta_hat == before.beta_hat);
    for (std::size_t v = 0; v < 8; ++v) {
      CHECK(s.A[v] == before.A[v]);
      CHECK(s.C[v] == before.C[v]);
    }
  }
}

TEST_CASE("update: single observation matches Sherman-Morrison") {
  DirectedGraph g(2, {{0, 1}});
  ImfbHyperparams hp = hp_dim(3);
  auto s = init_state(g, hp, 9);
  Eigen::VectorXd b(3);
  b << 0.3, -0.2, 0.5;
  s.beta_hat.row(1) = b.transpose();
  update(s, feedback({0}, {1}), g);
  Eigen::VectorXd expect = b / (1.0 + b.squaredNorm());
  CHECK((s.theta_hat.row(0).transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("update: rejects unknown edges") {
  DirectedGraph g(2, {{0, 1}});
  auto s = init_state(g, hp_dim(2), 1);
  CHECK_THROWS_AS(update(s, feedback({3}, {1}), g), std::invalid_argument);
  CHECK_THROWS_AS(update(s, feedback({0}, {}), g), std::invalid_argument);
}

TEST_CASE("property: closed-form residuals and SPD after every round") {
  auto b = small_bench(60, 400, 3, 0.1, 11);
  auto s = init_state(b.graph, hp_dim(3), 2);
  Environment env(b.graph, b.truth);
  auto oracle = make_oracle({});
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    auto out = play_round(s, b.graph, *oracle, 5, env, rng);
    std::vector<char> giver(60, 0), receiver(60, 0);
    for (EdgeId e : out.cascade.observed_edges) {
      giver[b.graph.edge(e).giving] = 1;
      receiver[b.graph.edge(e).receiving] = 1;
    }
    for (NodeId v = 0; v < 60; ++v) {
      if (giver[v]) {
        Eigen::VectorXd th = s.theta_hat.row(v).transpose();
        CHECK((s.A[v] * th - s.b[v]).cwiseAbs().maxCoeff() < 1e-9);
      }
      if (receiver[v]) {
        Eigen::VectorXd be = s.beta_hat.row(v).transpose();
        CHECK((s.C[v] * be - s.d[v]).cwiseAbs().maxCoeff() < 1e-9);
      }
      CHECK(s.A[v].isApprox(s.A[v].transpose()));
      CHECK(Eigen::LLT<Eigen::MatrixXd>(s.A[v]).info() == Eigen::Success);
      CHECK(Eigen::LLT<Eigen::MatrixXd>(s.C[v]).info() == Eigen::Success);
    }
  }
}

TEST_CASE("exact recompute matches a direct regularized least-squares solve") {
  auto b = small_bench(12, 40, 2, 0.3, 21);
  ImfbHyperparams hp = hp_dim(3);
  hp.update_mode = UpdateMode::exact_recompute;
  hp.lambda1 = 0.7;
  hp.lambda2 = 1.3;
  auto s = init_state(b.graph, hp, 5);
  Rng rng(8);
  for (int i = 0; i < 30; ++i) {
    const auto e = static_cast<EdgeId>(rng.below(b.graph.edge_count()));
    s.history.push_back({1, e, static_cast<std::uint8_t>(rng.bernoulli(0.4))});
  }
  const FactorMatrix beta_frozen = s.beta_hat;
  refit_influence(s, b.graph);

  // Independent oracle: stack [X; sqrt(lambda2) I] and solve by QR.
  for (NodeId v = 0; v < 12; ++v) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < s.history.size(); ++i)
      if (b.graph.edge(s.history[i].edge).giving == v) rows.push_back(i);
    if (rows.empty()) continue;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()) + 3, 3);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(X.rows());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& o = s.history[rows[k]];
      X.row(static_cast<Eigen::Index>(k)) = beta_frozen.row(b.graph.edge(o.edge).receiving);
      y(static_cast<Eigen::Index>(k)) = o.outcome;
    }
    X.bottomRows(3) = std::sqrt(hp.lambda2) * Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd direct = X.colPivHouseholderQr().solve(y);
    CHECK((s.theta_hat.row(v).transpose() - direct).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("exact recompute converges to a coordinate-wise fixed point") {
  auto b = small_bench(15, 60, 2, 0.3, 4);
  ImfbHyperparams hp = hp_dim(2);
  hp.update_mode = UpdateMode::exact_recompute;
  hp.recompute_max_sweeps = 2000;
  hp.recompute_tolerance = 1e-12;
  auto s = init_state(b.graph, hp, 5);
  Environment env(b.graph, b.truth);
  auto oracle = make_oracle({});
  Rng rng(2);
  for (int t = 0; t < 5; ++t) play_round(s, b.graph, *oracle, 3, env, rng);
  CHECK(refit_influence(s, b.graph) < 1e-9);
  CHECK(refit_susceptibility(s, b.graph) < 1e-9);
}

TEST_CASE("property: |x|_{A^-1} never grows under rank-one updates") {
  DirectedGraph g(2, {{0, 1}});
  auto s = init_state(g, hp_dim(4), 1);
  Rng rng(6);
  Eigen::VectorXd x = Eigen::VectorXd::Random(4);
  double prev = std::sqrt(x.dot(s.A[0].ldlt().solve(x)));
  for (int k = 0; k < 50; ++k) {
    for (int j = 0; j < 4; ++j) s.beta_hat(1, j) = rng.uniform(-1, 1);
    update(s, feedback({0}, {static_cast<std::uint8_t>(k % 2)}), g);
    const double now = std::sqrt(x.dot(s.A_chol[0].solve(x)));
    CHECK(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("state JSON snapshot round trip") {
  auto b = small_bench(20, 80, 2, 0.2, 3);
  ImfbHyperparams hp = hp_dim(2);
  hp.update_mode = UpdateMode::exact_recompute;
  auto s = init_state(b.graph, hp, 1);
  Environment env(b.graph, b.truth);
  auto oracle = make_oracle({});
  Rng rng(1);
  for (int t = 0; t < 3; ++t) play_round(s, b.graph, *oracle, 2, env, rng);
  auto back = state_from_json(nlohmann::json::parse(state_to_json(s).dump()));
  CHECK(back.round == s.round);
  CHECK(back.theta_hat == s.theta_hat);
  CHECK(back.beta_hat == s.beta_hat);
  CHECK(back.history.size() == s.history.size());
  for (std::size_t v = 0; v < b.graph.node_count(); ++v) {
    CHECK(back.A[v] == s.A[v]);
    CHECK(back.d[v] == s.d[v]);
  }
  CHECK(ucb_matrix(back, b.graph).p_bar == ucb_matrix(s, b.graph).p_bar);
}

TEST_CASE("play_round: K = 0 and deterministic replay") {
  auto b = small_bench(20, 80, 2, 0.2, 3);
  Environment env(b.graph, b.truth);
  auto oracle = make_oracle({});
  auto s = init_state(b.graph, hp_dim(2), 1);
  Rng rng(1);
  auto out = play_round(s, b.graph, *oracle, 0, env, rng);
  CHECK(out.seeds.empty());
  CHECK(out.cascade.activated_nodes.empty());
  CHECK(s.round == 2);

  auto s1 = init_state(b.graph, hp_dim(2), 1), s2 = s1;
  Rng r1(4), r2(4);
  for (int t = 0; t < 5; ++t) {
    auto a = play_round(s1, b.graph, *oracle, 3, env, r1);
    auto c = play_round(s2, b.graph, *oracle, 3, env, r2);
    CHECK(a.seeds == c.seeds);
    CHECK(a.cascade == c.cascade);
    CHECK(a.ucb.p_bar == c.ucb.p_bar);
  }
}

TEST_CASE("path fixture: the optimal seed dominates late rounds") {
  auto g = testing::path3();
  FactorMatrix th(3, 1), be(3, 1);
  th << 1.0, 0.5, 0.0;
  be << 0.0, 1.0, 1.0;
  auto truth = GroundTruthModel::from_factors(g, th, be);
  REQUIRE(truth.p_star == std::vector<double>{1.0, 0.5});
  Environment env(g, truth);
  OracleSpec spec;
  spec.kind = OracleKind::exact;
  auto oracle = make_oracle(spec);
  for (int run = 0; run < 5; ++run) {
    auto s = init_state(g, hp_dim(1), 100 + run);
    Rng rng(derive_seed(1, {static_cast<std::uint64_t>(run)}));
    int hits = 0;
    for (int t = 1; t <= 100; ++t) {
      auto out = play_round(s, g, *oracle, 1, env, rng);
      if (t > 50 && out.seeds == std::vector<NodeId>{0}) ++hits;
    }
    CHECK(hits >= 45);
  }
}
