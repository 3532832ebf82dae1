#pragma once

#include <vector>

#include "oimfb/graph.hpp"
#include "oimfb/rng.hpp"

namespace testing {

using namespace oimfb;

inline DirectedGraph path3() { return DirectedGraph(3, {{0, 1}, {1, 2}}); }

inline DirectedGraph star(std::size_t leaves) {
  std::vector<Edge> e;
  for (NodeId i = 1; i <= leaves; ++i) e.push_back({0, i});
  return DirectedGraph(leaves + 1, e);
}

// Random simple digraph with at most max_edges edges on 2..max_nodes nodes.
inline DirectedGraph random_small_graph(Rng& rng, std::size_t max_nodes, std::size_t max_edges) {
  const std::size_t n = 2 + rng.below(max_nodes - 1);
  const std::size_t cap = std::min(max_edges, n * (n - 1));
  const std::size_t m = rng.below(cap + 1);
  return erdos_renyi_gnm(n, m, rng.next());
}

inline std::vector<double> random_probabilities(Rng& rng, std::size_t m) {
  std::vector<double> p(m);
  for (auto& x : p) {
    const double u = rng.uniform();
    x = u < 0.1 ? 0.0 : (u < 0.2 ? 1.0 : rng.uniform());
  }
  return p;
}

}  // namespace testing
