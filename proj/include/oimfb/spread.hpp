#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

#include "oimfb/graph.hpp"

namespace oimfb {

inline constexpr std::size_t kDefaultEnumerationCap = 20;

class EnumerationCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact f_P(S): sums over every live-edge realization of the edges reachable
// from the seeds. Throws EnumerationCapError when |E| > edge_cap.
//
// The OpenMP version reduces over a fixed block partition, so its result does
// not depend on the thread count. The serial version is the reference.
double exact_expected_spread(const DirectedGraph& graph, std::span<const double> probabilities,
                             std::span<const NodeId> seeds,
                             std::size_t edge_cap = kDefaultEnumerationCap);
double exact_expected_spread_serial(const DirectedGraph& graph,
                                    std::span<const double> probabilities,
                                    std::span<const NodeId> seeds,
                                    std::size_t edge_cap = kDefaultEnumerationCap);

struct SpreadEstimate {
  double mean = 0.0;
  double stddev = 0.0;  // of the per-sample activated count
  std::size_t samples = 0;
};

// Monte-Carlo spread over `samples` cascades. Sample i uses its own stream
// derived from (seed, i); serial and parallel results are bit-identical.
SpreadEstimate monte_carlo_spread(const DirectedGraph& graph, std::span<const double> probabilities,
                                  std::span<const NodeId> seeds, std::size_t samples,
                                  std::uint64_t seed);
SpreadEstimate monte_carlo_spread_serial(const DirectedGraph& graph,
                                         std::span<const double> probabilities,
                                         std::span<const NodeId> seeds, std::size_t samples,
                                         std::uint64_t seed);

}  // namespace oimfb
