#include "oimfb/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "oimfb/rng.hpp"

namespace oimfb {

namespace {

std::uint64_t pair_key(NodeId a, NodeId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

void build_csr(std::size_t n, std::span<const Edge> edges, bool outgoing,
               std::vector<std::size_t>& offsets, std::vector<EdgeId>& ids) {
  offsets.assign(n + 1, 0);
  for (const Edge& e : edges) ++offsets[(outgoing ? e.giving : e.receiving) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  ids.resize(edges.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (EdgeId e = 0; e < edges.size(); ++e) {
    NodeId v = outgoing ? edges[e].giving : edges[e].receiving;
    ids[cursor[v]++] = e;
  }
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_u64(std::string_view tok, std::uint64_t& value) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

}  // namespace

DirectedGraph::DirectedGraph(std::size_t node_count, std::vector<Edge> edges,
                             std::vector<std::uint64_t> original_ids)
    : node_count_(node_count), edges_(std::move(edges)), original_ids_(std::move(original_ids)) {
  if (edges_.size() > std::numeric_limits<EdgeId>::max())
    throw GraphError("too many edges");
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges_.size() * 2);
  for (const Edge& e : edges_) {
    if (e.giving >= node_count_ || e.receiving >= node_count_)
      throw GraphError("edge endpoint out of range");
    if (e.giving == e.receiving) throw GraphError("self-loop on node " + std::to_string(e.giving));
    if (!seen.insert(pair_key(e.giving, e.receiving)).second)
      throw GraphError("duplicate edge " + std::to_string(e.giving) + "->" +
                       std::to_string(e.receiving));
  }
  if (original_ids_.empty()) {
    original_ids_.resize(node_count_);
    std::iota(original_ids_.begin(), original_ids_.end(), std::uint64_t{0});
  } else if (original_ids_.size() != node_count_) {
    throw GraphError("original id table size mismatch");
  }
  build_csr(node_count_, edges_, true, out_offsets_, out_ids_);
  build_csr(node_count_, edges_, false, in_offsets_, in_ids_);
}

EdgeId DirectedGraph::find_edge(NodeId giving, NodeId receiving) const {
  for (EdgeId e : out_edges(giving))
    if (edges_[e].receiving == receiving) return e;
  return static_cast<EdgeId>(edges_.size());
}

LoadResult load_edge_list(std::istream& in, const LoadOptions& options) {
  LoadReport report;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::optional<std::uint64_t> dense_nodes;
  bool any_content = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      std::string_view header(kDenseHeader);
      if (!any_content && s.substr(0, header.size()) == header) {
        std::uint64_t n;
        if (!parse_u64(trim(s.substr(header.size())), n))
          throw ParseError(line_no, "malformed dense-node header");
        dense_nodes = n;
      }
      any_content = true;
      continue;
    }
    any_content = true;
    auto toks = split_ws(s);
    if (toks.size() != 2)
      throw ParseError(line_no, "expected two node ids, got " + std::to_string(toks.size()) +
                                    " tokens");
    std::uint64_t a, b;
    if (!parse_u64(toks[0], a) || !parse_u64(toks[1], b))
      throw ParseError(line_no, "node ids must be non-negative integers");
    if (dense_nodes && (a >= *dense_nodes || b >= *dense_nodes))
      throw ParseError(line_no, "node id outside dense range");
    raw.emplace_back(a, b);
    ++report.data_lines;
  }
  if (raw.empty() && !dense_nodes) throw GraphError("edge list is empty");

  std::size_t n = 0;
  std::vector<std::uint64_t> original;
  std::unordered_map<std::uint64_t, NodeId> remap;
  auto dense_id = [&](std::uint64_t id) -> NodeId {
    if (dense_nodes) return static_cast<NodeId>(id);
    auto [it, inserted] = remap.try_emplace(id, static_cast<NodeId>(original.size()));
    if (inserted) original.push_back(id);
    return it->second;
  };

  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen, seen_input;
  auto add = [&](NodeId g, NodeId r) {
    const std::uint64_t key = pair_key(g, r);
    if (!seen_input.insert(key).second) {
      ++report.duplicates_deduped;
      return;
    }
    if (seen.insert(key).second) edges.push_back({g, r});
  };
  for (auto [a, b] : raw) {
    NodeId g = dense_id(a);
    NodeId r = dense_id(b);
    if (g == r) {
      ++report.self_loops_dropped;
      continue;
    }
    add(g, r);
    // Reverse copies never count as input duplicates.
    if (options.symmetrize && seen.insert(pair_key(r, g)).second) edges.push_back({r, g});
  }
  if (dense_nodes) {
    n = *dense_nodes;
    report.dense_header = true;
  } else {
    n = original.size();
  }
  return {DirectedGraph(n, std::move(edges), std::move(original)), report};
}

LoadResult load_edge_list_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open edge list '" + path + "'");
  return load_edge_list(in, options);
}

void write_edge_list(std::ostream& out, const DirectedGraph& graph) {
  std::vector<Edge> sorted(graph.edges().begin(), graph.edges().end());
  std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.giving, a.receiving) < std::tie(b.giving, b.receiving);
  });
  out << kDenseHeader << ' ' << graph.node_count() << '\n';
  for (const Edge& e : sorted) out << e.giving << ' ' << e.receiving << '\n';
}

std::vector<NodeDegree> degrees(const DirectedGraph& graph) {
  std::vector<NodeDegree> d(graph.node_count());
  for (NodeId v = 0; v < graph.node_count(); ++v) d[v] = {graph.out_degree(v), graph.in_degree(v)};
  return d;
}

DirectedGraph erdos_renyi_gnm(std::size_t nodes, std::size_t edges, std::uint64_t seed) {
  if (nodes < 2 && edges > 0) throw GraphError("G(n,m) needs at least two nodes");
  const double capacity = static_cast<double>(nodes) * static_cast<double>(nodes - 1);
  if (static_cast<double>(edges) > capacity) throw GraphError("G(n,m): m exceeds n(n-1)");
  Rng rng(seed);
  std::unordered_set<std::uint64_t> seen;
  std::vector<Edge> out;
  out.reserve(edges);
  while (out.size() < edges) {
    auto g = static_cast<NodeId>(rng.below(nodes));
    auto r = static_cast<NodeId>(rng.below(nodes));
    if (g == r || !seen.insert(pair_key(g, r)).second) continue;
    out.push_back({g, r});
  }
  return DirectedGraph(nodes, std::move(out));
}

DirectedGraph skewed_out_degree(std::size_t nodes, std::size_t edges, double exponent,
                                std::uint64_t seed) {
  if (nodes < 2 && edges > 0) throw GraphError("skewed graph needs at least two nodes");
  std::vector<double> cumulative(nodes);
  double total = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    total += std::pow(static_cast<double>(i + 1), -exponent);
    cumulative[i] = total;
  }
  Rng rng(seed);
  std::unordered_set<std::uint64_t> seen;
  std::vector<std::size_t> giver_out(nodes, 0);
  std::vector<Edge> out;
  out.reserve(edges);
  std::size_t attempts = 0;
  while (out.size() < edges) {
    if (++attempts > 100 * edges + 1000) throw GraphError("skewed graph: too many rejections");
    double x = rng.uniform() * total;
    auto g = static_cast<NodeId>(
        std::min<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), x) -
                                  cumulative.begin(),
                              nodes - 1));
    auto r = static_cast<NodeId>(rng.below(nodes));
    if (g == r || giver_out[g] + 1 >= nodes || !seen.insert(pair_key(g, r)).second) continue;
    ++giver_out[g];
    out.push_back({g, r});
  }
  return DirectedGraph(nodes, std::move(out));
}

}  // namespace oimfb
