#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lpgnet/rng.hpp"

namespace lpgnet {

constexpr double kInfiniteEpsilon = std::numeric_limits<double>::infinity();

/// Laplace(0, scale) by inverse CDF on one uniform draw in (0,1).
/// u = 0.5 maps to exactly 0.
double laplace_from_uniform(double u, double scale);

/// One Laplace(0, scale) sample; deterministic per RNG state. Throws on a
/// non-positive or non-finite scale.
double laplace_sample(double scale, RngStream& rng);

/// Which graph's edges a charge counts against. In the transductive and
/// inductive-evolving settings everything composes on one graph; in the
/// inductive-different setting the training graph and the inference graph
/// each get the full budget.
enum class BudgetPool { training_graph, inference_graph };

enum class Phase { train, validation, inference };

enum class Setting { transductive, inductive_different, inductive_evolving };

std::string to_string(BudgetPool pool);
std::string to_string(Phase phase);
std::string to_string(Setting setting);
Setting setting_from_string(const std::string& name);

/// Per-phase, per-layer epsilon allocations:
///
///   transductive        train eps/nl,     validation 0,         inference 0
///   inductive_different train eps/nl,     validation 0,         inference eps/nl
///   inductive_evolving  train eps/(3nl),  validation eps/(3nl), inference eps/(3nl)
///
/// An allocation of 0 means "reuse cached degree vectors, no fresh query".
/// total_epsilon may be infinity, which disables noise and charging.
struct BudgetPlan {
  Setting setting = Setting::transductive;
  double total_epsilon = kInfiniteEpsilon;
  int nl = 1;
  double train_per_layer = kInfiniteEpsilon;
  double validation_per_layer = 0.0;
  double inference_per_layer = 0.0;

  double allocation(Phase phase) const;
  BudgetPool pool_of(Phase phase) const;
  bool is_private() const { return std::isfinite(total_epsilon); }
};

BudgetPlan plan_budget(Setting setting, double total_epsilon, int nl);

/// Append-only record of epsilon spending with sequential-composition
/// checks: per-pool totals may never exceed the plan's total and no
/// (phase, layer) may be charged twice.
class BudgetLedger {
 public:
  struct Entry {
    Phase phase;
    int layer;
    double epsilon;
    double cumulative;  // pool total after this entry
    BudgetPool pool;
  };

  BudgetLedger() = default;
  explicit BudgetLedger(BudgetPlan plan) : plan_(plan) {}

  /// Records one degree-vector (or adjacency release) query. `eps` must
  /// equal the plan's allocation for the phase unless `override_allocation`
  /// is set (used by the composite DpGCN release).
  void charge(Phase phase, int layer, double eps, bool override_allocation = false);

  double pool_total(BudgetPool pool) const;
  const std::vector<Entry>& entries() const { return entries_; }
  const BudgetPlan& plan() const { return plan_; }

  std::string to_json() const;
  static BudgetLedger from_json(const std::string& text);

 private:
  BudgetPlan plan_;
  std::vector<Entry> entries_;
  double totals_[2] = {0.0, 0.0};
};

}  // namespace lpgnet
