#include "oimfb/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "oimfb/spread.hpp"

namespace oimfb {

ExperimentWorld build_world(const ExperimentConfig& config) {
  const GraphSource& src = config.graph;
  DirectedGraph graph = [&] {
    if (src.source == "file") return load_edge_list_file(src.path, {.symmetrize = src.symmetrize}).graph;
    if (src.source != "synthetic") throw std::invalid_argument("unknown graph source '" + src.source + "'");
    if (src.model == "gnm") return erdos_renyi_gnm(src.nodes, src.edges, src.seed);
    if (src.model == "skewed") return skewed_out_degree(src.nodes, src.edges, src.exponent, src.seed);
    throw std::invalid_argument("unknown synthetic graph model '" + src.model + "'");
  }();

  if (!config.truth_path.empty()) {
    std::ifstream in(config.truth_path);
    if (!in) throw std::runtime_error("cannot open ground truth file: " + config.truth_path);
    GroundTruthModel truth = ground_truth_from_json(nlohmann::json::parse(in), graph);
    return {std::move(graph), std::move(truth)};
  }
  GeneratedEnvironment env = generate_ground_truth(graph, config.generation);
  return {std::move(env.graph), std::move(env.model)};
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const DirectedGraph& graph,
                                    const GroundTruthModel& truth, std::uint64_t init_seed) {
  switch (config.kind) {
    case PolicyKind::imfb: return std::make_unique<ImfbPolicy>(graph, config.imfb, init_seed);
    case PolicyKind::cucb: return std::make_unique<CucbPolicy>(graph);
    case PolicyKind::eps_greedy: return std::make_unique<EpsGreedyPolicy>(graph, config.epsilon);
    case PolicyKind::imlinucb:
      return std::make_unique<ImLinUcbPolicy>(graph, truth, config.linucb_lambda, config.c_explore);
  }
  throw std::invalid_argument("unknown policy kind");
}

double regret_proxy(double round_reward, double optimal, double alpha_gamma) {
  return optimal - round_reward / alpha_gamma;
}

std::optional<double> estimation_error(std::span<const double> estimates, std::span<const double> p_star,
                                       std::span<const EdgeId> observed_edges) {
  if (observed_edges.empty()) return std::nullopt;
  double sum = 0.0;
  for (EdgeId e : observed_edges) sum += std::abs(estimates[e] - p_star[e]);
  return sum / static_cast<double>(observed_edges.size());
}

std::optional<double> optimal_spread(const DirectedGraph& graph, std::span<const double> p_star, int k,
                                     const OracleSpec& oracle) {
  if (k <= 0) return 0.0;
  if (graph.edge_count() > oracle.edge_cap) return std::nullopt;
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), graph.node_count());
  if (binomial_capped(graph.node_count(), kk, oracle.subset_cap) > oracle.subset_cap) return std::nullopt;
  const auto seeds = select_seeds_exact(graph, p_star, k, oracle.edge_cap, oracle.subset_cap);
  return exact_expected_spread(graph, p_star, seeds, oracle.edge_cap);
}

namespace {

// Mean L2 distance between estimated and true factor rows over `nodes`.
std::optional<double> factor_error(const FactorMatrix* est, const FactorMatrix& truth,
                                   const std::vector<NodeId>& nodes) {
  if (est == nullptr || nodes.empty() || est->cols() != truth.cols()) return std::nullopt;
  double sum = 0.0;
  for (NodeId v : nodes) sum += (est->row(v) - truth.row(v)).norm();
  return sum / static_cast<double>(nodes.size());
}

std::vector<RoundMetrics> run_one(const ExperimentConfig& cfg, const ExperimentWorld& world,
                                  const Oracle& oracle, const std::optional<double>& opt,
                                  double alpha_gamma, int run) {
  const DirectedGraph& g = world.graph;
  const auto r = static_cast<std::uint64_t>(run);
  Environment env(g, world.truth, cfg.perturbation);
  auto policy = make_policy(cfg.policy, g, world.truth,
                            derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(Stream::policy_init), r}));

  std::vector<RoundMetrics> rows;
  rows.reserve(static_cast<std::size_t>(cfg.T));
  std::size_t cumulative = 0;
  std::vector<char> seen(g.node_count(), 0);
  for (int t = 1; t <= cfg.T; ++t) {
    try {
      const auto tt = static_cast<std::uint64_t>(t);
      Rng policy_rng(derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(Stream::policy), r, tt}));
      Rng env_rng(derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(Stream::environment), r, tt}));

      const auto seeds = policy->select(oracle, cfg.K, policy_rng);
      const CascadeResult cascade = env.play(seeds, env_rng);
      policy->observe(cascade);

      RoundMetrics m;
      m.round = t;
      m.reward = cascade.reward();
      cumulative += m.reward;
      m.cumulative_reward = cumulative;
      const auto estimates = policy->point_estimates();
      m.est_error = estimation_error(estimates, world.truth.p_star, cascade.observed_edges);

      std::vector<NodeId> observed_nodes;
      for (EdgeId e : cascade.observed_edges)
        for (NodeId v : {g.edge(e).giving, g.edge(e).receiving})
          if (!seen[v]) {
            seen[v] = 1;
            observed_nodes.push_back(v);
          }
      for (NodeId v : observed_nodes) seen[v] = 0;
      m.theta_err = factor_error(policy->influence_factors(), world.truth.theta_star, observed_nodes);
      m.beta_err = factor_error(policy->susceptibility_factors(), world.truth.beta_star, observed_nodes);
      if (opt) m.regret_proxy = regret_proxy(static_cast<double>(m.reward), *opt, alpha_gamma);
      rows.push_back(m);
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& ex) {
      throw RunError(run, t, ex.what());
    }
  }
  return rows;
}

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  s.mean = mean;
  s.std = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return s;
}

}  // namespace

std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<RoundMetrics>>& runs) {
  std::vector<AggregateRow> out;
  if (runs.empty()) return out;
  const std::size_t rounds = runs.front().size();
  std::vector<double> cum_regret(runs.size(), 0.0);
  std::vector<bool> regret_ok(runs.size(), true);
  for (std::size_t t = 0; t < rounds; ++t) {
    std::vector<double> rw, cr, ee, te, be, rp, crp;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const RoundMetrics& m = runs[r].at(t);
      rw.push_back(static_cast<double>(m.reward));
      cr.push_back(static_cast<double>(m.cumulative_reward));
      if (m.est_error) ee.push_back(*m.est_error);
      if (m.theta_err) te.push_back(*m.theta_err);
      if (m.beta_err) be.push_back(*m.beta_err);
      if (m.regret_proxy) {
        rp.push_back(*m.regret_proxy);
        cum_regret[r] += *m.regret_proxy;
      } else {
        regret_ok[r] = false;
      }
      if (regret_ok[r]) crp.push_back(cum_regret[r]);
    }
    AggregateRow row;
    row.round = runs.front()[t].round;
    row.reward = summarize(rw);
    row.cumulative_reward = summarize(cr);
    row.est_error = summarize(ee);
    row.theta_err = summarize(te);
    row.beta_err = summarize(be);
    row.regret_proxy = summarize(rp);
    row.cumulative_regret_proxy = summarize(crp);
    out.push_back(row);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, build_world(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentWorld& world) {
  if (config.T < 1) throw std::invalid_argument("T must be >= 1");
  if (config.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (config.K < 0) throw std::invalid_argument("K must be >= 0");

  const auto oracle = make_oracle(config.oracle);
  ExperimentResult result;
  result.alpha_gamma = oracle->alpha() * oracle->gamma();
  result.optimal_spread = optimal_spread(world.graph, world.truth.p_star, config.K, config.oracle);
  result.runs.resize(static_cast<std::size_t>(config.runs));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.runs));
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < config.runs; ++r) {
    try {
      result.runs[static_cast<std::size_t>(r)] =
          run_one(config, world, *oracle, result.optimal_spread, result.alpha_gamma, r);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  result.aggregate = aggregate_runs(result.runs);
  return result;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

}  // namespace

void write_run_csv(std::ostream& out, const std::vector<RoundMetrics>& rows) {
  out << kRunCsvHeader << '\n';
  for (const RoundMetrics& m : rows)
    out << m.round << ',' << m.reward << ',' << m.cumulative_reward << ',' << fmt(m.est_error) << ','
        << fmt(m.theta_err) << ',' << fmt(m.beta_err) << ',' << fmt(m.regret_proxy) << '\n';
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "round";
  for (const char* name : {"reward", "cum_reward", "est_error", "theta_err", "beta_err", "regret_proxy",
                           "cum_regret_proxy"})
    out << ',' << name << "_mean," << name << "_std";
  out << '\n';
  for (const AggregateRow& a : rows) {
    out << a.round;
    for (const MetricSummary* s : {&a.reward, &a.cumulative_reward, &a.est_error, &a.theta_err, &a.beta_err,
                                   &a.regret_proxy, &a.cumulative_regret_proxy})
      out << ',' << fmt(s->mean) << ',' << fmt(s->std);
    out << '\n';
  }
}

void write_results(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return f;
  };
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    auto f = open("run_" + std::to_string(r) + ".csv");
    write_run_csv(f, result.runs[r]);
    if (!f) throw std::runtime_error("write failed for run " + std::to_string(r));
  }
  auto f = open("aggregate.csv");
  write_aggregate_csv(f, result.aggregate);
  if (!f) throw std::runtime_error("write failed for aggregate.csv");
}

}  // namespace oimfb
