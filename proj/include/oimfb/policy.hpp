#pragma once

#include <memory>
#include <string>
#include <vector>

#include "oimfb/baselines.hpp"
#include "oimfb/environment.hpp"
#include "oimfb/imfb.hpp"
#include "oimfb/oracle.hpp"
#include "oimfb/rng.hpp"

namespace oimfb {

// Shared select -> observe -> update loop used by every bandit. One instance
// per run; not thread-safe.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;

  // Seeds for the current round. `rng` is the policy's own stream.
  virtual std::vector<NodeId> select(const Oracle& oracle, int k, Rng& rng) = 0;
  virtual void observe(const CascadeResult& cascade) = 0;

  // Point estimate p_hat per edge (not the optimistic value).
  virtual std::vector<double> point_estimates() const = 0;

  // Factor estimates, for policies that learn node factors.
  virtual const FactorMatrix* influence_factors() const { return nullptr; }
  virtual const FactorMatrix* susceptibility_factors() const { return nullptr; }

  // Probabilities handed to the oracle by the last select().
  const std::vector<double>& last_oracle_input() const { return oracle_input_; }

 protected:
  std::vector<double> oracle_input_;
};

class ImfbPolicy final : public Policy {
 public:
  ImfbPolicy(const DirectedGraph& graph, const ImfbHyperparams& hp, std::uint64_t init_seed);
  std::string name() const override { return "imfb"; }
  std::vector<NodeId> select(const Oracle& oracle, int k, Rng& rng) override;
  void observe(const CascadeResult& cascade) override;
  std::vector<double> point_estimates() const override;
  const FactorMatrix* influence_factors() const override { return &state_.theta_hat; }
  const FactorMatrix* susceptibility_factors() const override { return &state_.beta_hat; }

  const ImfbState& state() const { return state_; }
  const UcbMatrix& last_ucb() const { return ucb_; }

 private:
  const DirectedGraph* graph_;
  ImfbState state_;
  UcbMatrix ucb_;
};

class CucbPolicy final : public Policy {
 public:
  explicit CucbPolicy(const DirectedGraph& graph);
  std::string name() const override { return "cucb"; }
  std::vector<NodeId> select(const Oracle& oracle, int k, Rng& rng) override;
  void observe(const CascadeResult& cascade) override;
  std::vector<double> point_estimates() const override { return stats_.empirical_means(0.0); }
  const EdgeStatsState& stats() const { return stats_; }
  std::size_t round() const { return round_; }

 private:
  const DirectedGraph* graph_;
  EdgeStatsState stats_;
  std::size_t round_ = 1;
};

class EpsGreedyPolicy final : public Policy {
 public:
  EpsGreedyPolicy(const DirectedGraph& graph, double epsilon);
  std::string name() const override { return "eps-greedy"; }
  std::vector<NodeId> select(const Oracle& oracle, int k, Rng& rng) override;
  void observe(const CascadeResult& cascade) override { stats_.observe(cascade); }
  std::vector<double> point_estimates() const override { return stats_.empirical_means(0.5); }

 private:
  const DirectedGraph* graph_;
  EdgeStatsState stats_;
  double epsilon_;
};

class ImLinUcbPolicy final : public Policy {
 public:
  ImLinUcbPolicy(const DirectedGraph& graph, const GroundTruthModel& truth, double lambda,
                 double c_explore);
  std::string name() const override { return "imlinucb"; }
  std::vector<NodeId> select(const Oracle& oracle, int k, Rng& rng) override;
  void observe(const CascadeResult& cascade) override { imlinucb_update(state_, cascade); }
  std::vector<double> point_estimates() const override { return imlinucb_estimates(state_); }
  const LinUcbState& state() const { return state_; }

 private:
  const DirectedGraph* graph_;
  LinUcbState state_;
  double c_explore_;
};

}  // namespace oimfb
