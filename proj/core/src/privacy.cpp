#include "lpgnet/privacy.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace lpgnet {

double laplace_from_uniform(double u, double scale) {
  // Inverse CDF centered on u = 0.5; |2u-1| < 1 keeps the log finite.
  const double centered = u - 0.5;
  const double sign = centered < 0.0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::fabs(centered));
}

double laplace_sample(double scale, RngStream& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("laplace_sample: scale must be positive and finite");
  return laplace_from_uniform(rng.next_unit(), scale);
}

std::string to_string(BudgetPool pool) {
  return pool == BudgetPool::training_graph ? "training_graph" : "inference_graph";
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::train: return "train";
    case Phase::validation: return "validation";
    case Phase::inference: return "inference";
  }
  return "?";
}

std::string to_string(Setting setting) {
  switch (setting) {
    case Setting::transductive: return "transductive";
    case Setting::inductive_different: return "inductive_different";
    case Setting::inductive_evolving: return "inductive_evolving";
  }
  return "?";
}

Setting setting_from_string(const std::string& name) {
  if (name == "transductive") return Setting::transductive;
  if (name == "inductive_different") return Setting::inductive_different;
  if (name == "inductive_evolving") return Setting::inductive_evolving;
  throw std::invalid_argument("unknown setting \"" + name + "\"");
}

double BudgetPlan::allocation(Phase phase) const {
  switch (phase) {
    case Phase::train: return train_per_layer;
    case Phase::validation: return validation_per_layer;
    case Phase::inference: return inference_per_layer;
  }
  return 0.0;
}

BudgetPool BudgetPlan::pool_of(Phase phase) const {
  if (setting == Setting::inductive_different && phase == Phase::inference)
    return BudgetPool::inference_graph;
  return BudgetPool::training_graph;
}

BudgetPlan plan_budget(Setting setting, double total_epsilon, int nl) {
  if (nl < 1) throw std::invalid_argument("plan_budget: nl must be >= 1");
  if (!(total_epsilon > 0.0)) throw std::invalid_argument("plan_budget: epsilon must be positive");

  BudgetPlan plan;
  plan.setting = setting;
  plan.total_epsilon = total_epsilon;
  plan.nl = nl;
  if (!std::isfinite(total_epsilon)) {
    plan.train_per_layer = kInfiniteEpsilon;
    plan.validation_per_layer =
        setting == Setting::inductive_evolving ? kInfiniteEpsilon : 0.0;
    plan.inference_per_layer = setting == Setting::transductive ? 0.0 : kInfiniteEpsilon;
    return plan;
  }
  switch (setting) {
    case Setting::transductive:
      plan.train_per_layer = total_epsilon / nl;
      plan.validation_per_layer = 0.0;
      plan.inference_per_layer = 0.0;
      break;
    case Setting::inductive_different:
      plan.train_per_layer = total_epsilon / nl;
      plan.validation_per_layer = 0.0;
      plan.inference_per_layer = total_epsilon / nl;
      break;
    case Setting::inductive_evolving:
      plan.train_per_layer = total_epsilon / (3.0 * nl);
      plan.validation_per_layer = total_epsilon / (3.0 * nl);
      plan.inference_per_layer = total_epsilon / (3.0 * nl);
      break;
  }
  return plan;
}

void BudgetLedger::charge(Phase phase, int layer, double eps, bool override_allocation) {
  if (!std::isfinite(eps) || eps <= 0.0)
    throw std::invalid_argument("ledger: charge must be positive and finite");
  if (!override_allocation && eps != plan_.allocation(phase))
    throw std::invalid_argument("ledger: charge of " + std::to_string(eps) +
                                " does not match the plan allocation for phase " + to_string(phase));
  for (const Entry& e : entries_)
    if (e.phase == phase && e.layer == layer)
      throw std::invalid_argument("ledger: (" + to_string(phase) + ", layer " +
                                  std::to_string(layer) + ") already charged");

  const BudgetPool pool = plan_.pool_of(phase);
  const double next_total = totals_[static_cast<int>(pool)] + eps;
  // Tiny slack absorbs the rounding of eps/(3*nl) sums; anything beyond it
  // is an accounting bug.
  if (next_total > plan_.total_epsilon * (1.0 + 1e-9) + 1e-12)
    throw std::runtime_error("ledger: over-spend in pool " + to_string(pool) + " (" +
                             std::to_string(next_total) + " > " +
                             std::to_string(plan_.total_epsilon) + ")");
  totals_[static_cast<int>(pool)] = next_total;
  entries_.push_back(Entry{phase, layer, eps, next_total, pool});
}

double BudgetLedger::pool_total(BudgetPool pool) const { return totals_[static_cast<int>(pool)]; }

namespace {
nlohmann::json eps_json(double eps) {
  if (std::isinf(eps)) return "inf";
  return eps;
}
double eps_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInfiniteEpsilon;
    throw std::runtime_error("ledger json: bad epsilon string");
  }
  return j.get<double>();
}
}  // namespace

std::string BudgetLedger::to_json() const {
  nlohmann::json j;
  j["setting"] = to_string(plan_.setting);
  j["total_epsilon"] = eps_json(plan_.total_epsilon);
  j["nl"] = plan_.nl;
  j["allocations"] = {{"train", eps_json(plan_.train_per_layer)},
                      {"validation", eps_json(plan_.validation_per_layer)},
                      {"inference", eps_json(plan_.inference_per_layer)}};
  j["pools"] = {{"training_graph", pool_total(BudgetPool::training_graph)},
                {"inference_graph", pool_total(BudgetPool::inference_graph)}};
  j["entries"] = nlohmann::json::array();
  for (const Entry& e : entries_)
    j["entries"].push_back({{"phase", to_string(e.phase)},
                            {"layer", e.layer},
                            {"epsilon", e.epsilon},
                            {"cumulative", e.cumulative},
                            {"pool", to_string(e.pool)}});
  return j.dump(2);
}

BudgetLedger BudgetLedger::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  BudgetPlan plan;
  plan.setting = setting_from_string(j.at("setting").get<std::string>());
  plan.total_epsilon = eps_from_json(j.at("total_epsilon"));
  plan.nl = j.at("nl").get<int>();
  plan.train_per_layer = eps_from_json(j.at("allocations").at("train"));
  plan.validation_per_layer = eps_from_json(j.at("allocations").at("validation"));
  plan.inference_per_layer = eps_from_json(j.at("allocations").at("inference"));
  BudgetLedger ledger(plan);
  for (const auto& e : j.at("entries")) {
    Phase phase = Phase::train;
    const auto name = e.at("phase").get<std::string>();
    if (name == "validation") phase = Phase::validation;
    else if (name == "inference") phase = Phase::inference;
    ledger.charge(phase, e.at("layer").get<int>(), e.at("epsilon").get<double>(),
                  /*override_allocation=*/true);
  }
  return ledger;
}

}  // namespace lpgnet
