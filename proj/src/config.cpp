#include "oimfb/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace oimfb {

using nlohmann::json;

namespace {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<GenerationMode> kModes[] = {
    {GenerationMode::uniform, "uniform"},
    {GenerationMode::stratified, "stratified"},
    {GenerationMode::two_type, "two-type"}};
constexpr EnumName<PolicyKind> kPolicies[] = {
    {PolicyKind::imfb, "imfb"},
    {PolicyKind::cucb, "cucb"},
    {PolicyKind::eps_greedy, "eps-greedy"},
    {PolicyKind::imlinucb, "imlinucb"}};
constexpr EnumName<UpdateMode> kUpdateModes[] = {
    {UpdateMode::incremental, "incremental"}, {UpdateMode::exact_recompute, "exact-recompute"}};
constexpr EnumName<NormPairing> kPairings[] = {
    {NormPairing::partner, "partner"}, {NormPairing::same_node, "same-node"}};
constexpr EnumName<OracleKind> kOracles[] = {
    {OracleKind::degree_discount, "degree-discount"}, {OracleKind::exact, "exact"}};
constexpr EnumName<DegreeDiscountVariant> kVariants[] = {
    {DegreeDiscountVariant::weighted, "weighted"},
    {DegreeDiscountVariant::uniform_form, "uniform-form"}};

template <class E, std::size_t N>
std::string to_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
std::string choices(const EnumName<E> (&table)[N]) {
  std::string s;
  for (const auto& e : table) s += (s.empty() ? "" : ", ") + std::string(e.name);
  return s;
}

template <class E, std::size_t N>
json enum_schema(const EnumName<E> (&table)[N]) {
  json names = json::array();
  for (const auto& e : table) names.push_back(e.name);
  return {{"type", "string"}, {"enum", names}};
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Integer-valued defaults must stay integers; other numbers are interchangeable.
bool same_kind(const json& def, const json& val) {
  if (def.is_null()) return val.is_null() || val.is_number();  // optional real
  if (def.is_number_integer()) return val.is_number_integer();
  if (def.is_number()) return val.is_number();
  if (def.is_array()) return val.is_array();
  return def.type() == val.type();
}

std::string kind_name(const json& def) {
  if (def.is_null()) return "number or null";
  if (def.is_number_integer()) return "integer";
  if (def.is_number()) return "number";
  return def.type_name();
}

void overlay(json& base, const json& doc, const std::string& prefix, std::vector<ConfigIssue>& issues) {
  if (!doc.is_object()) {
    issues.push_back({prefix.empty() ? "<root>" : prefix, "expected an object"});
    return;
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = join(prefix, it.key());
    if (!base.contains(it.key())) {
      issues.push_back({path, "unknown key"});
      continue;
    }
    json& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), path, issues);
    } else if (!same_kind(slot, it.value())) {
      issues.push_back({path, "expected " + kind_name(slot) + ", got " + it.value().type_name()});
    } else {
      slot = it.value();
    }
  }
}

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const json& v, const std::string& path,
             std::vector<ConfigIssue>& issues, E fallback) {
  const auto s = v.get<std::string>();
  for (const auto& e : table)
    if (s == e.name) return e.value;
  issues.push_back({path, "unknown value '" + s + "' (expected one of: " + choices(table) + ")"});
  return fallback;
}

std::pair<double, double> parse_range(const json& v, const std::string& path, std::vector<ConfigIssue>& issues,
                                      std::pair<double, double> fallback) {
  if (v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    issues.push_back({path, "expected [low, high]"});
    return fallback;
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

template <class T>
T non_negative(const json& v, const std::string& path, std::vector<ConfigIssue>& issues) {
  if (std::is_unsigned_v<T> && v.is_number_integer() && v.get<std::int64_t>() < 0) {
    issues.push_back({path, "must be >= 0"});
    return T{};
  }
  return v.get<T>();
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&] {
        std::string msg;
        for (const auto& i : issues) msg += (msg.empty() ? "" : "\n") + i.path + ": " + i.message;
        return msg;
      }()),
      issues_(std::move(issues)) {}

ExperimentConfig default_config() {
  ExperimentConfig c;
  if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') c.output_dir = dir;
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const GenerationSpec& g = c.generation;
  const ImfbHyperparams& h = c.policy.imfb;
  return {
      {"graph",
       {{"source", c.graph.source},
        {"path", c.graph.path},
        {"model", c.graph.model},
        {"nodes", c.graph.nodes},
        {"edges", c.graph.edges},
        {"exponent", c.graph.exponent},
        {"seed", c.graph.seed},
        {"symmetrize", c.graph.symmetrize}}},
      {"generation",
       {{"mode", to_name(kModes, g.mode)},
        {"dim", g.dim},
        {"target_mean_p", g.target_mean_p ? json(*g.target_mean_p) : json(nullptr)},
        {"group_count", g.group_count},
        {"rng_seed", g.rng_seed},
        {"high_degree_fraction", g.high_degree_fraction},
        {"cross_edge_removal", g.cross_edge_removal},
        {"low_range", {g.low_range.first, g.low_range.second}},
        {"high_range", {g.high_range.first, g.high_range.second}},
        {"truth_path", c.truth_path}}},
      {"perturbation",
       {{"noise_halfwidth", c.perturbation.noise_halfwidth},
        {"scale", c.perturbation.scale},
        {"per_round_global_noise", c.perturbation.per_round_global_noise}}},
      {"policy",
       {{"kind", to_name(kPolicies, c.policy.kind)},
        {"imfb",
         {{"dim", h.dim},
          {"lambda1", h.lambda1},
          {"lambda2", h.lambda2},
          {"q", h.q},
          {"delta", h.delta},
          {"update_mode", to_name(kUpdateModes, h.update_mode)},
          {"pairing", to_name(kPairings, h.pairing)},
          {"exploration_scale", h.exploration_scale},
          {"recompute_tolerance", h.recompute_tolerance},
          {"recompute_max_sweeps", h.recompute_max_sweeps}}},
        {"eps_greedy", {{"epsilon", c.policy.epsilon}}},
        {"imlinucb", {{"lambda", c.policy.linucb_lambda}, {"c_explore", c.policy.c_explore}}}}},
      {"oracle",
       {{"kind", to_name(kOracles, c.oracle.kind)},
        {"alpha", c.oracle.alpha},
        {"gamma", c.oracle.gamma},
        {"variant", to_name(kVariants, c.oracle.variant)},
        {"edge_cap", c.oracle.edge_cap},
        {"subset_cap", c.oracle.subset_cap}}},
      {"K", c.K},
      {"T", c.T},
      {"runs", c.runs},
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir}};
}

ExperimentConfig config_from_json(const json& doc) {
  const ExperimentConfig defaults = default_config();
  json r = config_to_json(defaults);
  std::vector<ConfigIssue> issues;
  // Mistyped or unknown entries keep their defaults so later checks still run.
  overlay(r, doc, "", issues);

  ExperimentConfig c = defaults;
  const json& gr = r["graph"];
  c.graph.source = gr["source"];
  c.graph.path = gr["path"];
  c.graph.model = gr["model"];
  c.graph.nodes = non_negative<std::size_t>(gr["nodes"], "graph.nodes", issues);
  c.graph.edges = non_negative<std::size_t>(gr["edges"], "graph.edges", issues);
  c.graph.exponent = gr["exponent"];
  c.graph.seed = non_negative<std::uint64_t>(gr["seed"], "graph.seed", issues);
  c.graph.symmetrize = gr["symmetrize"];

  const json& ge = r["generation"];
  c.generation.mode = parse_enum(kModes, ge["mode"], "generation.mode", issues, GenerationMode::uniform);
  c.generation.dim = ge["dim"];
  if (ge["target_mean_p"].is_null())
    c.generation.target_mean_p.reset();
  else
    c.generation.target_mean_p = ge["target_mean_p"].get<double>();
  c.generation.group_count = ge["group_count"];
  c.generation.rng_seed = non_negative<std::uint64_t>(ge["rng_seed"], "generation.rng_seed", issues);
  c.generation.high_degree_fraction = ge["high_degree_fraction"];
  c.generation.cross_edge_removal = ge["cross_edge_removal"];
  c.generation.low_range = parse_range(ge["low_range"], "generation.low_range", issues, c.generation.low_range);
  c.generation.high_range = parse_range(ge["high_range"], "generation.high_range", issues, c.generation.high_range);
  c.truth_path = ge["truth_path"];

  const json& pe = r["perturbation"];
  c.perturbation.noise_halfwidth = pe["noise_halfwidth"];
  c.perturbation.scale = pe["scale"];
  c.perturbation.per_round_global_noise = pe["per_round_global_noise"];

  const json& po = r["policy"];
  c.policy.kind = parse_enum(kPolicies, po["kind"], "policy.kind", issues, PolicyKind::imfb);
  const json& im = po["imfb"];
  ImfbHyperparams& h = c.policy.imfb;
  h.dim = im["dim"];
  h.lambda1 = im["lambda1"];
  h.lambda2 = im["lambda2"];
  h.q = im["q"];
  h.delta = im["delta"];
  h.update_mode = parse_enum(kUpdateModes, im["update_mode"], "policy.imfb.update_mode", issues, h.update_mode);
  h.pairing = parse_enum(kPairings, im["pairing"], "policy.imfb.pairing", issues, h.pairing);
  h.exploration_scale = im["exploration_scale"];
  h.recompute_tolerance = im["recompute_tolerance"];
  h.recompute_max_sweeps = im["recompute_max_sweeps"];
  c.policy.epsilon = po["eps_greedy"]["epsilon"];
  c.policy.linucb_lambda = po["imlinucb"]["lambda"];
  c.policy.c_explore = po["imlinucb"]["c_explore"];

  const json& orc = r["oracle"];
  c.oracle.kind = parse_enum(kOracles, orc["kind"], "oracle.kind", issues, OracleKind::degree_discount);
  c.oracle.alpha = orc["alpha"];
  c.oracle.gamma = orc["gamma"];
  c.oracle.variant = parse_enum(kVariants, orc["variant"], "oracle.variant", issues, c.oracle.variant);
  c.oracle.edge_cap = non_negative<std::size_t>(orc["edge_cap"], "oracle.edge_cap", issues);
  c.oracle.subset_cap = non_negative<std::size_t>(orc["subset_cap"], "oracle.subset_cap", issues);

  c.K = r["K"];
  c.T = r["T"];
  c.runs = r["runs"];
  c.master_seed = non_negative<std::uint64_t>(r["master_seed"], "master_seed", issues);
  c.output_dir = r["output_dir"];

  for (auto& i : validate_config(c)) issues.push_back(std::move(i));
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

std::vector<ConfigIssue> validate_config(const ExperimentConfig& c) {
  std::vector<ConfigIssue> out;
  auto need = [&](bool ok, const char* path, const char* msg) {
    if (!ok) out.push_back({path, msg});
  };
  const GraphSource& g = c.graph;
  need(g.source == "synthetic" || g.source == "file", "graph.source", "must be one of: synthetic, file");
  if (g.source == "file") need(!g.path.empty(), "graph.path", "required when graph.source is file");
  if (g.source == "synthetic") {
    need(g.model == "gnm" || g.model == "skewed", "graph.model", "must be one of: gnm, skewed");
    need(g.nodes >= 1, "graph.nodes", "must be >= 1");
    need(g.nodes == 0 || g.edges <= g.nodes * (g.nodes - 1), "graph.edges",
         "must be <= nodes * (nodes - 1) for a simple directed graph");
    need(g.exponent >= 0.0, "graph.exponent", "must be >= 0");
  }

  const GenerationSpec& ge = c.generation;
  need(ge.dim >= 1, "generation.dim", "must be >= 1");
  if (ge.target_mean_p)
    need(*ge.target_mean_p > 0.0 && *ge.target_mean_p <= 1.0, "generation.target_mean_p", "must lie in (0, 1]");
  need(ge.group_count >= 1, "generation.group_count", "must be >= 1");
  need(ge.high_degree_fraction >= 0.0 && ge.high_degree_fraction <= 1.0, "generation.high_degree_fraction",
       "must lie in [0, 1]");
  need(ge.cross_edge_removal >= 0.0 && ge.cross_edge_removal <= 1.0, "generation.cross_edge_removal",
       "must lie in [0, 1]");
  need(ge.low_range.first >= 0.0 && ge.low_range.first <= ge.low_range.second, "generation.low_range",
       "must satisfy 0 <= low <= high");
  need(ge.high_range.first >= 0.0 && ge.high_range.first <= ge.high_range.second, "generation.high_range",
       "must satisfy 0 <= low <= high");

  need(c.perturbation.noise_halfwidth >= 0.0, "perturbation.noise_halfwidth", "must be >= 0");
  need(c.perturbation.scale > 0.0, "perturbation.scale", "must be > 0");

  const ImfbHyperparams& h = c.policy.imfb;
  need(h.dim >= 1, "policy.imfb.dim", "must be >= 1");
  need(h.lambda1 > 0.0, "policy.imfb.lambda1", "must be > 0");
  need(h.lambda2 > 0.0, "policy.imfb.lambda2", "must be > 0");
  need(h.q > 0.0 && h.q < 1.0, "policy.imfb.q", "must lie in the open interval (0, 1)");
  need(h.delta > 0.0 && h.delta < 1.0, "policy.imfb.delta", "must lie in the open interval (0, 1)");
  need(h.exploration_scale >= 0.0, "policy.imfb.exploration_scale", "must be >= 0");
  need(h.recompute_tolerance > 0.0, "policy.imfb.recompute_tolerance", "must be > 0");
  need(h.recompute_max_sweeps >= 1, "policy.imfb.recompute_max_sweeps", "must be >= 1");
  need(c.policy.epsilon >= 0.0 && c.policy.epsilon <= 1.0, "policy.eps_greedy.epsilon", "must lie in [0, 1]");
  need(c.policy.linucb_lambda > 0.0, "policy.imlinucb.lambda", "must be > 0");
  need(c.policy.c_explore >= 0.0, "policy.imlinucb.c_explore", "must be >= 0");

  need(c.oracle.alpha > 0.0 && c.oracle.alpha <= 1.0, "oracle.alpha", "must lie in (0, 1]");
  need(c.oracle.gamma > 0.0 && c.oracle.gamma <= 1.0, "oracle.gamma", "must lie in (0, 1]");
  need(c.oracle.edge_cap >= 1 && c.oracle.edge_cap <= 30, "oracle.edge_cap", "must lie in [1, 30]");
  need(c.oracle.subset_cap >= 1, "oracle.subset_cap", "must be >= 1");

  need(c.K >= 0, "K", "must be >= 0");
  need(c.T >= 1, "T", "must be >= 1");
  need(c.runs >= 1, "runs", "must be >= 1");
  need(!c.output_dir.empty(), "output_dir", "must not be empty");
  return out;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError({{assignment, "override must have the form key.path=value"}});
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  const json defaults = config_to_json(default_config());
  const json* node = &defaults;
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) {
    if (!node->is_object() || !node->contains(k)) throw ConfigError({{path, "unknown key"}});
    node = &(*node)[k];
    keys.push_back(k);
  }
  if (node->is_object()) throw ConfigError({{path, "names a section, not a value"}});

  json value = json::parse(text, nullptr, false);
  if (value.is_discarded() || (node->is_string() && !value.is_string())) value = text;

  if (!doc.is_object()) doc = json::object();
  json* slot = &doc;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    json& next = (*slot)[keys[i]];
    if (!next.is_object()) next = json::object();
    slot = &next;
  }
  (*slot)[keys.back()] = value;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{path, "cannot open config file"}});
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError({{path, std::string("invalid JSON: ") + e.what()}});
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

json config_schema() {
  const json defaults = config_to_json(default_config());
  // Leaves carry their type and default; enum-valued leaves list their choices.
  const std::map<std::string, json> enums = {
      {"generation.mode", enum_schema(kModes)},       {"policy.kind", enum_schema(kPolicies)},
      {"policy.imfb.update_mode", enum_schema(kUpdateModes)}, {"policy.imfb.pairing", enum_schema(kPairings)},
      {"oracle.kind", enum_schema(kOracles)},         {"oracle.variant", enum_schema(kVariants)},
      {"graph.source", {{"type", "string"}, {"enum", {"synthetic", "file"}}}},
      {"graph.model", {{"type", "string"}, {"enum", {"gnm", "skewed"}}}}};
  std::function<json(const json&, const std::string&)> walk = [&](const json& node, const std::string& prefix) {
    if (node.is_object()) {
      json props = json::object();
      for (auto it = node.begin(); it != node.end(); ++it) props[it.key()] = walk(it.value(), join(prefix, it.key()));
      return json{{"type", "object"}, {"additionalProperties", false}, {"properties", props}};
    }
    json leaf;
    if (auto e = enums.find(prefix); e != enums.end()) leaf = e->second;
    else if (node.is_null()) leaf = {{"type", {"number", "null"}}};
    else if (node.is_number_integer()) leaf = {{"type", "integer"}};
    else if (node.is_number()) leaf = {{"type", "number"}};
    else if (node.is_boolean()) leaf = {{"type", "boolean"}};
    else if (node.is_array()) leaf = {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 2}, {"maxItems", 2}};
    else leaf = {{"type", "string"}};
    leaf["default"] = node;
    return leaf;
  };
  json schema = walk(defaults, "");
  schema["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  schema["title"] = "oimfb experiment config";
  return schema;
}

}  // namespace oimfb
