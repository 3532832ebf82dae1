// oimfb: run experiments, generate environments, inspect graphs, validate configs.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "oimfb/config.hpp"
#include "oimfb/environment.hpp"
#include "oimfb/experiment.hpp"
#include "oimfb/graph.hpp"

namespace fs = std::filesystem;
using namespace oimfb;

namespace {

enum Exit { kOk = 0, kUsage = 2, kGeneration = 3, kRuntime = 4 };

void print_issues(const ConfigError& e) {
  for (const auto& i : e.issues()) std::cerr << "config error: " << i.path << ": " << i.message << '\n';
}

// Writes every output into `dir`; on failure removes what it wrote (and the
// directory if it did not exist before).
void persist(const ExperimentResult& result, const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  const bool existed = fs::exists(dir);
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    for (std::size_t r = 0; r < result.runs.size(); ++r) written.push_back(dir / ("run_" + std::to_string(r) + ".csv"));
    written.push_back(dir / "aggregate.csv");
    written.push_back(dir / "config.json");
    write_results(result, dir.string());
    std::ofstream f(dir / "config.json", std::ios::binary);
    f << config_to_json(cfg).dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + (dir / "config.json").string());
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    if (!existed) fs::remove(dir, ec);
    throw;
  }
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, overrides);
  } catch (const ConfigError& e) {
    print_issues(e);
    return kUsage;
  }
  ExperimentWorld world;
  try {
    world = build_world(cfg);
  } catch (const GenerationError& e) {
    std::cerr << "generation error: " << e.what() << '\n';
    return kGeneration;
  } catch (const std::exception& e) {
    std::cerr << "environment error: " << e.what() << '\n';
    return kGeneration;
  }
  try {
    const ExperimentResult result = run_experiment(cfg, world);
    persist(result, cfg);
    const AggregateRow& last = result.aggregate.back();
    std::printf("%s: K=%d T=%d runs=%d final cumulative reward %.3f ± %.3f (%s)\n",
                config_to_json(cfg)["policy"]["kind"].get<std::string>().c_str(), cfg.K, cfg.T, cfg.runs,
                *last.cumulative_reward.mean, *last.cumulative_reward.std, cfg.output_dir.c_str());
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

int cmd_validate(const std::string& config_path, const std::vector<std::string>& overrides) {
  try {
    const ExperimentConfig cfg = load_config(config_path, overrides);
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return kOk;
  } catch (const ConfigError& e) {
    print_issues(e);
    return kUsage;
  }
}

struct GenerateArgs {
  std::string graph_path;
  bool symmetrize = false;
  std::string model = "gnm";
  std::size_t nodes = 200, edges = 2000;
  double exponent = 1.0;
  std::uint64_t graph_seed = 1;
  std::string mode = "uniform";
  int dim = 20;
  double target = -1.0;
  int groups = 10;
  std::uint64_t seed = 0;
  double high_fraction = 0.1, cross_removal = 0.0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  // Reuse the config resolver so generate accepts exactly the run-time vocabulary.
  nlohmann::json doc = {
      {"graph",
       {{"source", a.graph_path.empty() ? "synthetic" : "file"},
        {"path", a.graph_path},
        {"model", a.model},
        {"nodes", a.nodes},
        {"edges", a.edges},
        {"exponent", a.exponent},
        {"seed", a.graph_seed},
        {"symmetrize", a.symmetrize}}},
      {"generation",
       {{"mode", a.mode},
        {"dim", a.dim},
        {"target_mean_p", a.target > 0 ? nlohmann::json(a.target) : nlohmann::json(nullptr)},
        {"group_count", a.groups},
        {"rng_seed", a.seed},
        {"high_degree_fraction", a.high_fraction},
        {"cross_edge_removal", a.cross_removal}}}};
  ExperimentConfig cfg;
  try {
    cfg = config_from_json(doc);
  } catch (const ConfigError& e) {
    print_issues(e);
    return kUsage;
  }
  ExperimentWorld world;
  try {
    world = build_world(cfg);
  } catch (const GenerationError& e) {
    std::cerr << "generation error: " << e.what() << '\n';
    return kGeneration;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneration;
  }

  try {
    const fs::path edges = a.out + ".edges", truth = a.out + ".truth.json";
    if (edges.has_parent_path()) fs::create_directories(edges.parent_path());
    {
      std::ofstream f(edges, std::ios::binary);
      write_edge_list(f, world.graph);
      if (!f) throw std::runtime_error("cannot write " + edges.string());
    }
    {
      std::ofstream f(truth, std::ios::binary);
      f << ground_truth_to_json(world.truth).dump() << '\n';
      if (!f) throw std::runtime_error("cannot write " + truth.string());
    }
    const auto& p = world.truth.p_star;
    double mean = 0.0;
    for (double x : p) mean += x;
    mean = p.empty() ? 0.0 : mean / static_cast<double>(p.size());
    const auto soft = soft_out_degrees(world.graph, p);
    std::vector<double> hard(world.graph.node_count());
    for (NodeId v = 0; v < world.graph.node_count(); ++v) hard[v] = static_cast<double>(world.graph.out_degree(v));
    std::printf("nodes %zu edges %zu\n", world.graph.node_count(), world.graph.edge_count());
    std::printf("mean p* %.6f\n", mean);
    std::printf("soft-degree cv %.6f\n", coefficient_of_variation(soft));
    std::printf("hard-degree cv %.6f\n", coefficient_of_variation(hard));
    std::printf("wrote %s %s\n", edges.string().c_str(), truth.string().c_str());
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

int cmd_inspect(const std::string& path, bool symmetrize) {
  LoadResult loaded;
  try {
    loaded = load_edge_list_file(path, {.symmetrize = symmetrize});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  const DirectedGraph& g = loaded.graph;
  std::vector<double> outd, ind;
  for (const NodeDegree& d : degrees(g)) {
    outd.push_back(static_cast<double>(d.out));
    ind.push_back(static_cast<double>(d.in));
  }
  std::printf("n %zu\nm %zu\n", g.node_count(), g.edge_count());
  std::printf("self_loops_dropped %zu\nduplicates_deduped %zu\n", loaded.report.self_loops_dropped,
              loaded.report.duplicates_deduped);
  for (auto [name, xs] : {std::pair{"out", &outd}, std::pair{"in", &ind}}) {
    std::printf("%s-degree", name);
    for (auto [label, q] : {std::pair{"min", 0.0}, {"p25", 0.25}, {"p50", 0.5}, {"p75", 0.75}, {"p90", 0.9},
                            {"p99", 0.99}, {"max", 1.0}})
      std::printf(" %s=%g", label, quantile(*xs, q));
    std::printf("\n");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online influence maximization with factorization bandits"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run an experiment and write CSV metrics");
  run->add_option("-c,--config", config_path, "JSON config file")->required();
  run->add_option("--set", overrides, "Override a config value: dotted.key=value");

  auto* validate = app.add_subcommand("validate", "Resolve and check a config, print it with defaults");
  validate->add_option("-c,--config", config_path, "JSON config file")->required();
  validate->add_option("--set", overrides, "Override a config value: dotted.key=value");

  app.add_subcommand("schema", "Print the config JSON schema");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Build a graph and ground truth, write both");
  gen->add_option("--graph", ga.graph_path, "Edge-list file (default: synthetic graph)");
  gen->add_flag("--symmetrize", ga.symmetrize, "Add the reverse of every input edge");
  gen->add_option("--model", ga.model, "Synthetic model: gnm or skewed")->capture_default_str();
  gen->add_option("--nodes", ga.nodes)->capture_default_str();
  gen->add_option("--edges", ga.edges)->capture_default_str();
  gen->add_option("--exponent", ga.exponent, "Skewed model degree exponent")->capture_default_str();
  gen->add_option("--graph-seed", ga.graph_seed)->capture_default_str();
  gen->add_option("--mode", ga.mode, "uniform, stratified or two-type")->capture_default_str();
  gen->add_option("--dim", ga.dim)->capture_default_str();
  gen->add_option("--target", ga.target, "Target mean activation probability");
  gen->add_option("--groups", ga.groups, "Stratified group count")->capture_default_str();
  gen->add_option("--seed", ga.seed, "Ground-truth seed")->capture_default_str();
  gen->add_option("--high-fraction", ga.high_fraction, "Two-type high-degree fraction")->capture_default_str();
  gen->add_option("--cross-removal", ga.cross_removal, "Two-type cross-edge removal rate")->capture_default_str();
  gen->add_option("-o,--out", ga.out, "Output prefix; writes <prefix>.edges and <prefix>.truth.json")->required();

  std::string inspect_path;
  bool inspect_sym = false;
  auto* inspect = app.add_subcommand("inspect", "Print graph statistics for an edge list");
  inspect->add_option("path", inspect_path)->required();
  inspect->add_flag("--symmetrize", inspect_sym);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (run->parsed()) return cmd_run(config_path, overrides);
  if (validate->parsed()) return cmd_validate(config_path, overrides);
  if (gen->parsed()) return cmd_generate(ga);
  if (inspect->parsed()) return cmd_inspect(inspect_path, inspect_sym);
  std::cout << config_schema().dump(2) << '\n';
  return kOk;
}
