#include "oimfb/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace oimfb {

namespace {

void check_probabilities(const DirectedGraph& graph, std::span<const double> p, int k) {
  if (k < 0) throw OracleError("seed budget K must be non-negative");
  if (p.size() != graph.edge_count())
    throw std::invalid_argument("probability vector does not match edge count");
}

std::vector<NodeId> all_nodes(const DirectedGraph& graph) {
  std::vector<NodeId> v(graph.node_count());
  std::iota(v.begin(), v.end(), NodeId{0});
  return v;
}

}  // namespace

std::vector<NodeId> select_seeds_degree_discount(const DirectedGraph& graph,
                                                 std::span<const double> p, int k,
                                                 DegreeDiscountVariant variant) {
  check_probabilities(graph, p, k);
  const std::size_t n = graph.node_count();
  if (static_cast<std::size_t>(k) >= n) return all_nodes(graph);

  std::vector<std::uint8_t> selected(n, 0);
  std::vector<double> score(n);
  // weighted: miss[v] = prob. v is not activated directly by S; soft[v] =
  // probability mass on v's out-edges to unselected nodes.
  std::vector<double> miss(n, 1.0), soft(n, 0.0);
  // uniform_form: selected in-neighbour count and their summed probabilities.
  std::vector<double> t(n, 0.0), t_mass(n, 0.0);

  auto rescore = [&](NodeId v) {
    if (variant == DegreeDiscountVariant::weighted) {
      score[v] = miss[v] * (1.0 + soft[v]);
    } else {
      const double d = static_cast<double>(graph.out_degree(v));
      const double pbar = t[v] > 0.0 ? t_mass[v] / t[v] : 0.0;
      score[v] = d - 2.0 * t[v] - (d - t[v]) * t[v] * pbar;
    }
  };
  for (NodeId v = 0; v < n; ++v) {
    for (EdgeId e : graph.out_edges(v)) soft[v] += p[e];
    rescore(v);
  }

  std::vector<NodeId> seeds;
  seeds.reserve(static_cast<std::size_t>(k));
  for (int round = 0; round < k; ++round) {
    NodeId best = 0;
    bool found = false;
    for (NodeId v = 0; v < n; ++v) {
      if (selected[v]) continue;
      if (!found || score[v] > score[best]) {
        best = v;
        found = true;
      }
    }
    selected[best] = 1;
    seeds.push_back(best);
    for (EdgeId e : graph.out_edges(best)) {
      NodeId w = graph.edge(e).receiving;
      if (selected[w]) continue;
      miss[w] *= 1.0 - p[e];
      t[w] += 1.0;
      t_mass[w] += p[e];
      rescore(w);
    }
    for (EdgeId e : graph.in_edges(best)) {
      NodeId x = graph.edge(e).giving;
      if (selected[x]) continue;
      soft[x] -= p[e];
      rescore(x);
    }
  }
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t limit) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // C(n, i) = C(n, i-1) * (n - i + 1) / i stays integral at every step.
  unsigned __int128 c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > limit) return limit + 1;
  }
  return static_cast<std::size_t>(c);
}

namespace {

// Next k-combination of [0, n) in lexicographic order; false after the last.
bool next_combination(std::vector<NodeId>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

// Reachability-bitset evaluation for graphs with at most 64 nodes: every
// realization of the uncertain edges yields per-node reach sets, and the
// spread of S is the weighted popcount of the union of its members' sets.
std::vector<double> subset_spreads_bitset(const DirectedGraph& graph, std::span<const double> p,
                                          const std::vector<NodeId>& flat, std::size_t k) {
  const std::size_t n = graph.node_count();
  std::vector<EdgeId> uncertain;
  std::vector<std::uint64_t> fixed_out(n, 0);  // receivers reachable via p == 1 edges
  for (EdgeId e = 0; e < graph.edge_count(); ++e) {
    if (p[e] >= 1.0) fixed_out[graph.edge(e).giving] |= std::uint64_t{1} << graph.edge(e).receiving;
    else if (p[e] > 0.0) uncertain.push_back(e);
  }
  const std::size_t subsets = flat.size() / std::max<std::size_t>(k, 1);
  std::vector<double> spread(subsets, 0.0);
  const std::uint64_t total = std::uint64_t{1} << uncertain.size();
  constexpr std::uint64_t kChunk = 4096;
  std::vector<std::uint64_t> reach(kChunk * n);
  std::vector<double> weight(kChunk);

  for (std::uint64_t start = 0; start < total; start += kChunk) {
    const auto count = static_cast<std::int64_t>(std::min(kChunk, total - start));
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
      const std::uint64_t mask = start + static_cast<std::uint64_t>(i);
      double w = 1.0;
      std::vector<std::uint64_t> out(fixed_out);
      for (std::size_t j = 0; j < uncertain.size(); ++j) {
        const Edge& ed = graph.edge(uncertain[j]);
        if ((mask >> j) & 1u) {
          w *= p[uncertain[j]];
          out[ed.giving] |= std::uint64_t{1} << ed.receiving;
        } else {
          w *= 1.0 - p[uncertain[j]];
        }
      }
      weight[static_cast<std::size_t>(i)] = w;
      std::uint64_t* r = &reach[static_cast<std::size_t>(i) * n];
      for (std::size_t v = 0; v < n; ++v) {
        std::uint64_t seen = std::uint64_t{1} << v, frontier = seen;
        while (frontier) {
          int u = std::countr_zero(frontier);
          frontier &= frontier - 1;
          std::uint64_t fresh = out[static_cast<std::size_t>(u)] & ~seen;
          seen |= fresh;
          frontier |= fresh;
        }
        r[v] = seen;
      }
    }
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(subsets); ++s) {
      const NodeId* members = &flat[static_cast<std::size_t>(s) * k];
      double acc = 0.0;
      for (std::int64_t i = 0; i < count; ++i) {
        const std::uint64_t* r = &reach[static_cast<std::size_t>(i) * n];
        std::uint64_t u = 0;
        for (std::size_t j = 0; j < k; ++j) u |= r[members[j]];
        acc += weight[static_cast<std::size_t>(i)] * std::popcount(u);
      }
      spread[static_cast<std::size_t>(s)] += acc;
    }
  }
  return spread;
}

}  // namespace

std::vector<NodeId> select_seeds_exact(const DirectedGraph& graph, std::span<const double> p, int k,
                                       std::size_t edge_cap, std::size_t subset_cap) {
  check_probabilities(graph, p, k);
  if (k == 0) return {};
  const std::size_t n = graph.node_count();
  if (static_cast<std::size_t>(k) >= n) return all_nodes(graph);
  if (graph.edge_count() > edge_cap)
    throw EnumerationCapError("exact oracle needs |E| <= " + std::to_string(edge_cap));
  const auto kk = static_cast<std::size_t>(k);
  const std::size_t subsets = binomial_capped(n, kk, subset_cap);
  if (subsets > subset_cap)
    throw EnumerationCapError("exact oracle needs C(|V|, K) <= " + std::to_string(subset_cap));

  std::vector<NodeId> flat;
  flat.reserve(subsets * kk);
  std::vector<NodeId> combo(kk);
  std::iota(combo.begin(), combo.end(), NodeId{0});
  do {
    flat.insert(flat.end(), combo.begin(), combo.end());
  } while (next_combination(combo, n));

  std::vector<double> spread;
  if (n <= 64) {
    spread = subset_spreads_bitset(graph, p, flat, kk);
  } else {
    spread.assign(subsets, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(subsets); ++s) {
      std::span<const NodeId> members(&flat[static_cast<std::size_t>(s) * kk], kk);
      spread[static_cast<std::size_t>(s)] = exact_expected_spread_serial(graph, p, members, edge_cap);
    }
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < subsets; ++s) {
    // Subsets within rounding of the incumbent count as ties.
    if (spread[s] > spread[best] + 1e-12 * std::max(1.0, spread[best])) best = s;
  }
  return {flat.begin() + static_cast<std::ptrdiff_t>(best * kk),
          flat.begin() + static_cast<std::ptrdiff_t>((best + 1) * kk)};
}

namespace {

class DegreeDiscountOracle final : public Oracle {
 public:
  explicit DegreeDiscountOracle(const OracleSpec& spec) : spec_(spec) {}
  std::vector<NodeId> select(const DirectedGraph& graph, std::span<const double> p, int k) const override {
    return select_seeds_degree_discount(graph, p, k, spec_.variant);
  }
  double alpha() const override { return spec_.alpha; }
  double gamma() const override { return spec_.gamma; }
  std::string name() const override { return "degree-discount"; }

 private:
  OracleSpec spec_;
};

class ExactOracle final : public Oracle {
 public:
  explicit ExactOracle(const OracleSpec& spec) : spec_(spec) {}
  std::vector<NodeId> select(const DirectedGraph& graph, std::span<const double> p, int k) const override {
    return select_seeds_exact(graph, p, k, spec_.edge_cap, spec_.subset_cap);
  }
  double alpha() const override { return 1.0; }
  double gamma() const override { return 1.0; }
  std::string name() const override { return "exact"; }

 private:
  OracleSpec spec_;
};

}  // namespace

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec) {
  switch (spec.kind) {
    case OracleKind::exact:
      return std::make_unique<ExactOracle>(spec);
    case OracleKind::degree_discount:
      break;
  }
  return std::make_unique<DegreeDiscountOracle>(spec);
}

}  // namespace oimfb
