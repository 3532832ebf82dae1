#include "oimfb/spread.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "oimfb/rng.hpp"

namespace oimfb {

namespace {

// Compact view of the part of the graph that can matter for a seed set:
// edges with p > 0 whose giving node is reachable from the seeds. Local node 0
// stands for all seeds together; 1..k are the reachable non-seed nodes.
struct LiveEdgeProblem {
  std::size_t seed_count = 0;
  std::vector<std::uint32_t> out_mask;  // per local node, bit set of its edges
  std::vector<std::uint32_t> receiver;  // per edge, local receiver (0 = seed)
  std::vector<double> p;                // per uncertain edge
  std::size_t uncertain = 0;            // edges [0, uncertain) have 0 < p < 1
  std::uint32_t certain_bits = 0;       // edges with p == 1, always live
};

LiveEdgeProblem build_problem(const DirectedGraph& graph, std::span<const double> probabilities,
                              std::span<const NodeId> seeds, std::size_t edge_cap) {
  if (edge_cap > 30) throw std::invalid_argument("enumeration cap above 30 edges is not supported");
  if (graph.edge_count() > edge_cap)
    throw EnumerationCapError("exact spread needs |E| <= " + std::to_string(edge_cap) + ", got " +
                              std::to_string(graph.edge_count()));
  if (probabilities.size() != graph.edge_count())
    throw std::invalid_argument("probability vector does not match edge count");

  constexpr std::uint32_t kUnset = ~std::uint32_t{0};
  std::vector<std::uint32_t> local(graph.node_count(), kUnset);
  LiveEdgeProblem prob;
  std::vector<NodeId> stack;
  for (NodeId s : seeds) {
    if (s >= graph.node_count()) throw std::out_of_range("seed id out of range");
    if (local[s] == kUnset) {
      local[s] = 0;
      ++prob.seed_count;
      stack.push_back(s);
    }
  }
  std::vector<EdgeId> relevant;
  std::uint32_t next_local = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (EdgeId e : graph.out_edges(u)) {
      if (probabilities[e] <= 0.0) continue;
      relevant.push_back(e);
      NodeId r = graph.edge(e).receiving;
      if (local[r] == kUnset) {
        local[r] = next_local++;
        stack.push_back(r);
      }
    }
  }
  // Uncertain edges first so enumeration masks map directly onto them.
  std::stable_partition(relevant.begin(), relevant.end(),
                        [&](EdgeId e) { return probabilities[e] < 1.0; });
  prob.out_mask.assign(next_local, 0);
  for (std::size_t i = 0; i < relevant.size(); ++i) {
    EdgeId e = relevant[i];
    const Edge& ed = graph.edge(e);
    prob.out_mask[local[ed.giving]] |= std::uint32_t{1} << i;
    prob.receiver.push_back(local[ed.receiving]);
    if (probabilities[e] < 1.0) {
      prob.p.push_back(probabilities[e]);
      ++prob.uncertain;
    } else {
      prob.certain_bits |= std::uint32_t{1} << i;
    }
  }
  return prob;
}

// Weighted reachable count for one realization of the uncertain edges.
inline double realization_term(const LiveEdgeProblem& prob, std::uint32_t mask,
                               std::vector<std::uint32_t>& stack) {
  double w = 1.0;
  for (std::size_t i = 0; i < prob.uncertain; ++i)
    w *= (mask >> i) & 1u ? prob.p[i] : 1.0 - prob.p[i];
  if (w == 0.0) return 0.0;
  const std::uint32_t live = mask | prob.certain_bits;
  std::uint32_t reached = 0;  // bit r set for reached local node r >= 1
  stack.clear();
  stack.push_back(0);
  while (!stack.empty()) {
    std::uint32_t u = stack.back();
    stack.pop_back();
    std::uint32_t edges = prob.out_mask[u] & live;
    while (edges) {
      int e = std::countr_zero(edges);
      edges &= edges - 1;
      std::uint32_t r = prob.receiver[e];
      if (r != 0 && !((reached >> (r - 1)) & 1u)) {
        reached |= std::uint32_t{1} << (r - 1);
        stack.push_back(r);
      }
    }
  }
  return w * (static_cast<double>(prob.seed_count) + std::popcount(reached));
}

}  // namespace

double exact_expected_spread_serial(const DirectedGraph& graph,
                                    std::span<const double> probabilities,
                                    std::span<const NodeId> seeds, std::size_t edge_cap) {
  auto prob = build_problem(graph, probabilities, seeds, edge_cap);
  if (prob.seed_count == 0) return 0.0;
  const std::uint64_t total = std::uint64_t{1} << prob.uncertain;
  std::vector<std::uint32_t> stack;
  double sum = 0.0;
  for (std::uint64_t mask = 0; mask < total; ++mask)
    sum += realization_term(prob, static_cast<std::uint32_t>(mask), stack);
  return sum;
}

double exact_expected_spread(const DirectedGraph& graph, std::span<const double> probabilities,
                             std::span<const NodeId> seeds, std::size_t edge_cap) {
  auto prob = build_problem(graph, probabilities, seeds, edge_cap);
  if (prob.seed_count == 0) return 0.0;
  const std::int64_t total = std::int64_t{1} << prob.uncertain;
  const std::int64_t blocks = std::min<std::int64_t>(total, 256);
  const std::int64_t chunk = total / blocks;  // both powers of two
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel
  {
    std::vector<std::uint32_t> stack;
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
      double s = 0.0;
      for (std::int64_t mask = b * chunk; mask < (b + 1) * chunk; ++mask)
        s += realization_term(prob, static_cast<std::uint32_t>(mask), stack);
      partial[static_cast<std::size_t>(b)] = s;
    }
  }
  double sum = 0.0;
  for (double s : partial) sum += s;
  return sum;
}

namespace {

std::size_t sample_cascade_size(const DirectedGraph& graph, std::span<const double> p,
                                std::span<const NodeId> seeds, Rng& rng,
                                std::vector<std::uint32_t>& stamp, std::uint32_t token,
                                std::vector<NodeId>& queue) {
  queue.clear();
  for (NodeId s : seeds) {
    if (stamp[s] != token) {
      stamp[s] = token;
      queue.push_back(s);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (EdgeId e : graph.out_edges(queue[head])) {
      bool live = rng.uniform() < p[e];
      NodeId r = graph.edge(e).receiving;
      if (live && stamp[r] != token) {
        stamp[r] = token;
        queue.push_back(r);
      }
    }
  }
  return queue.size();
}

SpreadEstimate finish(std::uint64_t sum, std::uint64_t sum_sq, std::size_t samples) {
  SpreadEstimate est;
  est.samples = samples;
  if (samples == 0) return est;
  double n = static_cast<double>(samples);
  est.mean = static_cast<double>(sum) / n;
  double var = static_cast<double>(sum_sq) / n - est.mean * est.mean;
  est.stddev = std::sqrt(std::max(0.0, var));
  return est;
}

void check_inputs(const DirectedGraph& graph, std::span<const double> p, std::span<const NodeId> seeds) {
  if (p.size() != graph.edge_count())
    throw std::invalid_argument("probability vector does not match edge count");
  for (NodeId s : seeds)
    if (s >= graph.node_count()) throw std::out_of_range("seed id out of range");
}

}  // namespace

SpreadEstimate monte_carlo_spread_serial(const DirectedGraph& graph,
                                         std::span<const double> probabilities,
                                         std::span<const NodeId> seeds, std::size_t samples,
                                         std::uint64_t seed) {
  check_inputs(graph, probabilities, seeds);
  std::vector<std::uint32_t> stamp(graph.node_count(), 0);
  std::vector<NodeId> queue;
  std::uint64_t sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng(derive_seed(seed, {i}));
    std::uint64_t c = sample_cascade_size(graph, probabilities, seeds, rng, stamp,
                                          static_cast<std::uint32_t>(i + 1), queue);
    sum += c;
    sum_sq += c * c;
  }
  return finish(sum, sum_sq, samples);
}

SpreadEstimate monte_carlo_spread(const DirectedGraph& graph, std::span<const double> probabilities,
                                  std::span<const NodeId> seeds, std::size_t samples,
                                  std::uint64_t seed) {
  check_inputs(graph, probabilities, seeds);
  std::uint64_t sum = 0, sum_sq = 0;
  const auto n = static_cast<std::int64_t>(samples);
#pragma omp parallel reduction(+ : sum, sum_sq)
  {
    std::vector<std::uint32_t> stamp(graph.node_count(), 0);
    std::vector<NodeId> queue;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
      std::uint64_t c = sample_cascade_size(graph, probabilities, seeds, rng, stamp,
                                            static_cast<std::uint32_t>(i + 1), queue);
      sum += c;
      sum_sq += c * c;
    }
  }
  return finish(sum, sum_sq, samples);
}

}  // namespace oimfb
