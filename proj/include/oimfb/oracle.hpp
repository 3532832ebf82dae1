#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oimfb/graph.hpp"
#include "oimfb/spread.hpp"

namespace oimfb {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OracleKind { degree_discount, exact };

// How DegreeDiscountIC is carried over to per-edge probabilities.
//  weighted:     score(v) = prod_{u in S, u->v}(1 - p_uv) * (1 + sum_{v->w, w not in S} p_vw),
//                the expression the uniform-p discount formula approximates.
//  uniform_form: score(v) = d_v - 2 t_v - (d_v - t_v) t_v pbar_v with d_v the
//                out-degree, t_v the selected in-neighbours and pbar_v the mean
//                probability on their edges into v.
enum class DegreeDiscountVariant { weighted, uniform_form };

inline constexpr std::size_t kDefaultSubsetCap = 100000;

struct OracleSpec {
  OracleKind kind = OracleKind::degree_discount;
  double alpha = 1.0;
  double gamma = 1.0 - 0.36787944117144233;  // 1 - 1/e
  DegreeDiscountVariant variant = DegreeDiscountVariant::weighted;
  std::size_t edge_cap = kDefaultEnumerationCap;
  std::size_t subset_cap = kDefaultSubsetCap;
};

// Offline influence-maximization solver: (graph, probabilities, K) -> seeds.
// Implementations are stateless; results are sorted ascending.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::vector<NodeId> select(const DirectedGraph& graph, std::span<const double> probabilities,
                                     int k) const = 0;
  virtual double alpha() const = 0;
  virtual double gamma() const = 0;
  virtual std::string name() const = 0;
};

std::vector<NodeId> select_seeds_degree_discount(
    const DirectedGraph& graph, std::span<const double> probabilities, int k,
    DegreeDiscountVariant variant = DegreeDiscountVariant::weighted);

// argmax of exact_expected_spread over all k-subsets; ties go to the
// lexicographically smallest subset.
std::vector<NodeId> select_seeds_exact(const DirectedGraph& graph,
                                       std::span<const double> probabilities, int k,
                                       std::size_t edge_cap = kDefaultEnumerationCap,
                                       std::size_t subset_cap = kDefaultSubsetCap);

// Number of k-subsets of n, saturating at `limit + 1`.
std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t limit);

std::unique_ptr<Oracle> make_oracle(const OracleSpec& spec);

}  // namespace oimfb
