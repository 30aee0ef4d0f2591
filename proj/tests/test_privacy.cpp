#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lpgnet/privacy.hpp"

using namespace lpgnet;

namespace {

double laplace_cdf(double x, double scale) {
  if (x < 0.0) return 0.5 * std::exp(x / scale);
  return 1.0 - 0.5 * std::exp(-x / scale);
}

double ks_statistic(std::vector<double> samples, double scale) {
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double cdf = laplace_cdf(samples[i], scale);
    d = std::max(d, std::abs(static_cast<double>(i) / n - cdf));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
  }
  return d;
}

}  // namespace

TEST_CASE("the median uniform draw maps to zero") {
  CHECK(laplace_from_uniform(0.5, 1.0) == 0.0);
  CHECK(laplace_from_uniform(0.5, 123.0) == 0.0);
}

TEST_CASE("laplace moments at scale 1") {
  RngStream rng(2024);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = laplace_sample(1.0, rng);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 2.0) < 0.1);
}

TEST_CASE("laplace tail: P(|X| > scale) = 1/e") {
  const double eps = 1.7;
  const double scale = 2.0 / eps;
  RngStream rng(99);
  const int n = 100000;
  int exceed = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(laplace_sample(scale, rng)) > scale) ++exceed;
  CHECK(std::abs(static_cast<double>(exceed) / n - std::exp(-1.0)) < 0.01);
}

TEST_CASE("laplace rejects bad scales") {
  RngStream rng(1);
  CHECK_THROWS_AS(laplace_sample(0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(laplace_sample(-1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(laplace_sample(std::numeric_limits<double>::infinity(), rng),
                  std::invalid_argument);
}

TEST_CASE("laplace empirical CDF matches the analytic CDF (KS < 0.01)") {
  for (double scale : {0.5, 1.0, 5.0}) {
    RngStream rng(static_cast<uint64_t>(scale * 1000) + 7);
    std::vector<double> samples(100000);
    for (double& s : samples) s = laplace_sample(scale, rng);
    CHECK(ks_statistic(std::move(samples), scale) < 0.01);
  }
}

TEST_CASE("laplace is deterministic per RNG state") {
  RngStream a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(laplace_sample(1.5, a) == laplace_sample(1.5, b));
}

TEST_CASE("budget plan: transductive splits the training budget only") {
  const BudgetPlan p = plan_budget(Setting::transductive, 4.0, 2);
  CHECK(p.train_per_layer == 2.0);
  CHECK(p.validation_per_layer == 0.0);
  CHECK(p.inference_per_layer == 0.0);
}

TEST_CASE("budget plan: inductive-different uses the full budget per graph") {
  const BudgetPlan p = plan_budget(Setting::inductive_different, 3.0, 1);
  CHECK(p.train_per_layer == 3.0);
  CHECK(p.validation_per_layer == 0.0);
  CHECK(p.inference_per_layer == 3.0);
  CHECK(p.pool_of(Phase::train) == BudgetPool::training_graph);
  CHECK(p.pool_of(Phase::inference) == BudgetPool::inference_graph);
}

TEST_CASE("budget plan: inductive-evolving splits three ways") {
  const BudgetPlan p = plan_budget(Setting::inductive_evolving, 6.0, 2);
  CHECK(p.train_per_layer == 1.0);
  CHECK(p.validation_per_layer == 1.0);
  CHECK(p.inference_per_layer == 1.0);
  CHECK(p.pool_of(Phase::inference) == BudgetPool::training_graph);
}

TEST_CASE("budget plan rejects bad inputs and is a pure function") {
  CHECK_THROWS_AS(plan_budget(Setting::transductive, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(plan_budget(Setting::transductive, -2.0, 1), std::invalid_argument);
  const BudgetPlan a = plan_budget(Setting::inductive_evolving, 5.0, 3);
  const BudgetPlan b = plan_budget(Setting::inductive_evolving, 5.0, 3);
  CHECK(a.train_per_layer == b.train_per_layer);
  CHECK(a.validation_per_layer == b.validation_per_layer);
  CHECK(a.inference_per_layer == b.inference_per_layer);
}

TEST_CASE("infinite epsilon disables allocations") {
  const BudgetPlan p = plan_budget(Setting::transductive, kInfiniteEpsilon, 2);
  CHECK(std::isinf(p.train_per_layer));
  CHECK_FALSE(p.is_private());
}

TEST_CASE("ledger: transductive charges compose to the full budget") {
  BudgetLedger ledger(plan_budget(Setting::transductive, 4.0, 2));
  ledger.charge(Phase::train, 0, 2.0);
  ledger.charge(Phase::train, 1, 2.0);
  CHECK(ledger.pool_total(BudgetPool::training_graph) == 4.0);
  CHECK_THROWS_WITH_AS(ledger.charge(Phase::train, 2, 2.0), doctest::Contains("over-spend"),
                       std::runtime_error);
}

TEST_CASE("ledger: double charge of the same (phase, layer) is an error") {
  BudgetLedger ledger(plan_budget(Setting::transductive, 4.0, 2));
  ledger.charge(Phase::train, 0, 2.0);
  CHECK_THROWS_WITH_AS(ledger.charge(Phase::train, 0, 2.0), doctest::Contains("already charged"),
                       std::invalid_argument);
}

TEST_CASE("ledger: charge must match the plan allocation") {
  BudgetLedger ledger(plan_budget(Setting::transductive, 4.0, 2));
  CHECK_THROWS_AS(ledger.charge(Phase::train, 0, 1.5), std::invalid_argument);
}

TEST_CASE("ledger: evolving setting reaches the full budget across phases") {
  BudgetLedger ledger(plan_budget(Setting::inductive_evolving, 3.0, 1));
  ledger.charge(Phase::train, 0, 1.0);
  ledger.charge(Phase::validation, 0, 1.0);
  ledger.charge(Phase::inference, 0, 1.0);
  CHECK(ledger.pool_total(BudgetPool::training_graph) == 3.0);
}

TEST_CASE("ledger: inductive-different keeps separate pools") {
  BudgetLedger ledger(plan_budget(Setting::inductive_different, 2.0, 1));
  ledger.charge(Phase::train, 0, 2.0);
  ledger.charge(Phase::inference, 0, 2.0);
  CHECK(ledger.pool_total(BudgetPool::training_graph) == 2.0);
  CHECK(ledger.pool_total(BudgetPool::inference_graph) == 2.0);
}

TEST_CASE("ledger JSON round trip preserves entries and totals") {
  BudgetLedger ledger(plan_budget(Setting::inductive_evolving, 4.5, 3));
  ledger.charge(Phase::train, 0, 0.5);
  ledger.charge(Phase::train, 1, 0.5);
  ledger.charge(Phase::validation, 0, 0.5);
  const BudgetLedger back = BudgetLedger::from_json(ledger.to_json());
  CHECK(back.entries().size() == 3);
  CHECK(back.pool_total(BudgetPool::training_graph) ==
        ledger.pool_total(BudgetPool::training_graph));
  CHECK(back.plan().nl == 3);
}
