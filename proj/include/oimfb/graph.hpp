#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oimfb {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  NodeId giving;
  NodeId receiving;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct NodeDegree {
  std::size_t out = 0;
  std::size_t in = 0;
  friend bool operator==(const NodeDegree&, const NodeDegree&) = default;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public GraphError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : GraphError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Immutable directed graph over dense node ids [0, node_count). Adjacency is
// stored CSR-style as edge ids; out- and in-lists preserve edge-id order.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  // Throws GraphError on self-loops, duplicate pairs or out-of-range ids.
  DirectedGraph(std::size_t node_count, std::vector<Edge> edges,
                std::vector<std::uint64_t> original_ids = {});

  std::size_t node_count() const { return node_count_; }
  std::size_t edge_count() const { return edges_.size(); }

  const Edge& edge(EdgeId e) const { return edges_[e]; }
  std::span<const Edge> edges() const { return edges_; }

  std::span<const EdgeId> out_edges(NodeId v) const {
    return {out_ids_.data() + out_offsets_[v], out_ids_.data() + out_offsets_[v + 1]};
  }
  std::span<const EdgeId> in_edges(NodeId v) const {
    return {in_ids_.data() + in_offsets_[v], in_ids_.data() + in_offsets_[v + 1]};
  }

  std::size_t out_degree(NodeId v) const { return out_offsets_[v + 1] - out_offsets_[v]; }
  std::size_t in_degree(NodeId v) const { return in_offsets_[v + 1] - in_offsets_[v]; }

  // Original (input-file) id of each dense node; identity when built directly.
  std::uint64_t original_id(NodeId v) const { return original_ids_[v]; }
  std::span<const std::uint64_t> original_ids() const { return original_ids_; }

  // Edge id of (giving, receiving) if present, else edge_count().
  EdgeId find_edge(NodeId giving, NodeId receiving) const;

  friend bool operator==(const DirectedGraph& a, const DirectedGraph& b) {
    return a.node_count_ == b.node_count_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<EdgeId> out_ids_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<EdgeId> in_ids_;
  std::vector<std::uint64_t> original_ids_;
};

struct LoadReport {
  std::size_t data_lines = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_deduped = 0;
  // Set when the input carried a dense-id header and ids were kept verbatim.
  bool dense_header = false;
};

struct LoadResult {
  DirectedGraph graph;
  LoadReport report;
};

struct LoadOptions {
  // Add the reverse of every input edge (for undirected datasets).
  bool symmetrize = false;
};

// Header line written by write_edge_list. When it is the first non-empty line
// the loader keeps ids as-is (they must lie in [0, N)), which preserves
// isolated nodes and makes write/load an exact round trip.
inline constexpr const char* kDenseHeader = "# oimfb-dense-nodes:";

// SNAP-style edge list: '#' comments, "src dst" per data line. Without the
// dense header, ids are remapped densely in first-appearance order.
LoadResult load_edge_list(std::istream& in, const LoadOptions& options = {});
LoadResult load_edge_list_file(const std::string& path, const LoadOptions& options = {});

// Emits the dense header followed by edges sorted by (giving, receiving).
void write_edge_list(std::ostream& out, const DirectedGraph& graph);

std::vector<NodeDegree> degrees(const DirectedGraph& graph);

// Seeded directed G(n, m): m distinct non-loop pairs drawn uniformly.
DirectedGraph erdos_renyi_gnm(std::size_t nodes, std::size_t edges, std::uint64_t seed);

// Seeded directed graph with a heavy-tailed out-degree: giving endpoints are
// drawn with weight (i + 1)^-exponent, receivers uniformly.
DirectedGraph skewed_out_degree(std::size_t nodes, std::size_t edges, double exponent,
                                std::uint64_t seed);

}  // namespace oimfb
