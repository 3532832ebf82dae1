#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "oimfb/config.hpp"
#include "oimfb/experiment.hpp"

using namespace oimfb;

namespace {

ExperimentConfig small_config(PolicyKind kind) {
  ExperimentConfig c;
  c.graph.nodes = 30;
  c.graph.edges = 120;
  c.generation.dim = 3;
  c.generation.target_mean_p = 0.1;
  c.generation.rng_seed = 3;
  c.policy.kind = kind;
  c.policy.imfb.dim = 3;
  c.K = 3;
  c.T = 12;
  c.runs = 3;
  c.master_seed = 42;
  return c;
}

std::string run_csv(const ExperimentResult& r) {
  std::ostringstream s;
  for (const auto& run : r.runs) write_run_csv(s, run);
  write_aggregate_csv(s, r.aggregate);
  return s.str();
}

}  // namespace

TEST_CASE("regret proxy examples") {
  CHECK(regret_proxy(5.0, 10.0, 0.5) == 0.0);
  auto g = testing::path3();
  const std::vector<double> p{1.0, 0.5};
  OracleSpec exact;
  exact.kind = OracleKind::exact;
  const auto opt = optimal_spread(g, p, 1, exact);
  REQUIRE(opt);
  CHECK(*opt == doctest::Approx(2.5));
  CHECK(regret_proxy(1.0, *opt, 1.0) == doctest::Approx(1.5));
  CHECK(optimal_spread(g, p, 0, exact) == 0.0);
  exact.edge_cap = 1;
  CHECK_FALSE(optimal_spread(g, p, 1, exact).has_value());
}

TEST_CASE("estimation error examples") {
  const std::vector<double> est{0.2, 0.9, 0.4}, truth{0.2, 0.4, 0.4};
  CHECK(estimation_error(est, truth, std::vector<EdgeId>{0, 2}) == 0.0);
  CHECK(estimation_error(est, truth, std::vector<EdgeId>{1}) == doctest::Approx(0.5));
  CHECK_FALSE(estimation_error(est, truth, std::vector<EdgeId>{}).has_value());
}

TEST_CASE("T = 1, K = 0: one row with zero reward") {
  auto c = small_config(PolicyKind::imfb);
  c.T = 1;
  c.K = 0;
  c.runs = 2;
  auto r = run_experiment(c);
  REQUIRE(r.runs.size() == 2);
  for (const auto& run : r.runs) {
    REQUIRE(run.size() == 1);
    CHECK(run[0].reward == 0);
    CHECK_FALSE(run[0].est_error.has_value());
  }
  REQUIRE(r.aggregate.size() == 1);
  CHECK(*r.aggregate[0].reward.mean == 0.0);
}

TEST_CASE("row counts, reward bounds and cumulative sums for every policy") {
  for (auto kind : {PolicyKind::imfb, PolicyKind::cucb, PolicyKind::eps_greedy, PolicyKind::imlinucb}) {
    auto c = small_config(kind);
    auto r = run_experiment(c);
    CHECK(r.runs.size() == 3);
    CHECK(r.aggregate.size() == 12);
    for (const auto& run : r.runs) {
      REQUIRE(run.size() == 12);
      std::size_t cum = 0;
      for (const auto& m : run) {
        CHECK(m.reward >= 3);
        CHECK(m.reward <= 30);
        cum += m.reward;
        CHECK(m.cumulative_reward == cum);
        if (m.est_error) CHECK((*m.est_error >= 0.0 && *m.est_error <= 1.0));
      }
    }
  }
}

TEST_CASE("est_error matches a naive replay of the same run") {
  auto c = small_config(PolicyKind::cucb);
  c.runs = 1;
  const auto world = build_world(c);
  const auto res = run_experiment(c, world);

  Environment env(world.graph, world.truth);
  auto oracle = make_oracle(c.oracle);
  auto policy = make_policy(c.policy, world.graph, world.truth, 0);
  for (int t = 1; t <= c.T; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    Rng prng(derive_seed(c.master_seed, {static_cast<std::uint64_t>(Stream::policy), 0, tt}));
    Rng erng(derive_seed(c.master_seed, {static_cast<std::uint64_t>(Stream::environment), 0, tt}));
    auto cascade = env.play(policy->select(*oracle, c.K, prng), erng);
    policy->observe(cascade);
    const auto est = policy->point_estimates();
    double sum = 0.0;
    for (EdgeId e : cascade.observed_edges) sum += std::abs(est[e] - world.truth.p_star[e]);
    const auto& m = res.runs[0][static_cast<std::size_t>(t - 1)];
    CHECK(m.reward == cascade.reward());
    if (cascade.observed_edges.empty()) {
      CHECK_FALSE(m.est_error.has_value());
    } else {
      CHECK(*m.est_error == doctest::Approx(sum / static_cast<double>(cascade.observed_edges.size())));
    }
  }
}

TEST_CASE("regret proxy is reported when the optimum is computable") {
  auto c = small_config(PolicyKind::cucb);
  c.graph.nodes = 8;
  c.graph.edges = 12;
  c.K = 2;
  auto r = run_experiment(c);
  REQUIRE(r.optimal_spread);
  for (const auto& run : r.runs)
    for (const auto& m : run) REQUIRE(m.regret_proxy);
  double s = 0.0;
  for (const auto& a : r.aggregate) s += *a.regret_proxy.mean;
  CHECK(*r.aggregate.back().cumulative_regret_proxy.mean == doctest::Approx(s));
}

TEST_CASE("identical configs give byte-identical output") {
  for (auto kind : {PolicyKind::imfb, PolicyKind::eps_greedy}) {
    auto c = small_config(kind);
    CHECK(run_csv(run_experiment(c)) == run_csv(run_experiment(c)));
  }
  auto a = small_config(PolicyKind::imfb), b = a;
  b.master_seed = 43;
  CHECK(run_csv(run_experiment(a)) != run_csv(run_experiment(b)));
}

TEST_CASE("aggregate uses the sample standard deviation") {
  std::vector<std::vector<RoundMetrics>> runs(2, std::vector<RoundMetrics>(1));
  runs[0][0].reward = 2;
  runs[1][0].reward = 4;
  runs[0][0].est_error = 0.5;
  auto agg = aggregate_runs(runs);
  CHECK(*agg[0].reward.mean == 3.0);
  CHECK(*agg[0].reward.std == doctest::Approx(std::sqrt(2.0)));
  CHECK(*agg[0].est_error.mean == 0.5);
  CHECK(*agg[0].est_error.std == 0.0);
  CHECK_FALSE(agg[0].theta_err.mean.has_value());
}

TEST_CASE("csv layout") {
  std::vector<RoundMetrics> rows(1);
  rows[0].round = 1;
  rows[0].reward = 3;
  rows[0].cumulative_reward = 3;
  rows[0].est_error = 0.25;
  std::ostringstream s;
  write_run_csv(s, rows);
  CHECK(s.str() == std::string(kRunCsvHeader) + "\n1,3,3,0.25,,,\n");
}

TEST_CASE("results directory") {
  auto c = small_config(PolicyKind::cucb);
  c.T = 3;
  const auto dir = std::filesystem::temp_directory_path() / "oimfb_test_results";
  std::filesystem::remove_all(dir);
  write_results(run_experiment(c), dir.string());
  for (const char* f : {"run_0.csv", "run_1.csv", "run_2.csv", "aggregate.csv"})
    CHECK(std::filesystem::exists(dir / f));
  std::filesystem::remove_all(dir);
}

TEST_CASE("errors inside the loop carry run and round") {
  auto c = small_config(PolicyKind::imfb);
  c.K = -1;
  CHECK_THROWS_AS(run_experiment(c), std::invalid_argument);
  c = small_config(PolicyKind::imfb);
  c.policy.imfb.q = 2.0;
  try {
    run_experiment(c);
    FAIL("expected a failure");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("q") != std::string::npos);
  }
}

TEST_CASE("config: defaults resolve and round-trip") {
  const auto doc = config_to_json(default_config());
  CHECK(doc["K"] == 10);
  CHECK(doc["T"] == 100);
  CHECK(doc["policy"]["imfb"]["q"] == 0.9);
  CHECK(doc["policy"]["kind"] == "imfb");
  CHECK(config_to_json(config_from_json(doc)) == doc);
  CHECK(config_to_json(config_from_json(nlohmann::json::object())) == doc);
  CHECK(validate_config(default_config()).empty());
}

TEST_CASE("config: invalid q names the key and the interval") {
  try {
    config_from_json({{"policy", {{"imfb", {{"q", 1.5}}}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.issues().size() == 1);
    CHECK(e.issues()[0].path == "policy.imfb.q");
    CHECK(e.issues()[0].message.find("(0, 1)") != std::string::npos);
  }
}

TEST_CASE("config: all problems are reported together") {
  try {
    config_from_json({{"K", -2}, {"bogus", 1}, {"policy", {{"kind", "nope"}}}, {"T", "ten"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::set<std::string> paths;
    for (const auto& i : e.issues()) paths.insert(i.path);
    CHECK(paths.count("K"));
    CHECK(paths.count("bogus"));
    CHECK(paths.count("policy.kind"));
    CHECK(paths.count("T"));
  }
}

TEST_CASE("config: overrides") {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "K=0");
  apply_override(doc, "policy.kind=cucb");
  apply_override(doc, "generation.target_mean_p=0.05");
  auto c = config_from_json(doc);
  CHECK(c.K == 0);
  CHECK(c.policy.kind == PolicyKind::cucb);
  CHECK(*c.generation.target_mean_p == 0.05);
  CHECK_THROWS_AS(apply_override(doc, "policy.imfb.nonexistent=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST_CASE("config: files") {
  CHECK_THROWS_AS(load_config("/nonexistent/oimfb.json", {}), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "oimfb_test_cfg.json";
  {
    std::ofstream f(path);
    f << R"({"K": 4, "policy": {"kind": "eps-greedy", "eps_greedy": {"epsilon": 0.3}}})";
  }
  auto c = load_config(path.string(), {"T=7"});
  CHECK(c.K == 4);
  CHECK(c.T == 7);
  CHECK(c.policy.kind == PolicyKind::eps_greedy);
  CHECK(c.policy.epsilon == 0.3);
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  CHECK_THROWS_AS(load_config(path.string(), {}), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("config: output directory default comes from the environment") {
  ::setenv(kOutputDirEnv, "/tmp/oimfb_env_out", 1);
  CHECK(default_config().output_dir == "/tmp/oimfb_env_out");
  ::unsetenv(kOutputDirEnv);
  CHECK(default_config().output_dir == "results");
}

TEST_CASE("config schema lists every top-level key") {
  const auto schema = config_schema();
  const auto doc = config_to_json(default_config());
  for (const auto& [k, v] : doc.items()) CHECK(schema["properties"].contains(k));
}
