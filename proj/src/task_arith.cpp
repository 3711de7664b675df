// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/task_arith.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tvmerge/error.hpp"

namespace tvmerge {

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(Errc::AlphaOutOfRange, "alpha must lie in [0, 1], got " + std::to_string(alpha));
}

void check_beta(double beta, std::string_view who) {
  if (!std::isfinite(beta) || beta < 0.0)
    throw Error(Errc::InvalidBeta, "beta for '" + std::string(who) + "' must be finite and >= 0, got " +
                                       std::to_string(beta));
}

ParameterSet merged_copy(const ParameterSet& target_syn) {
  ParameterSet out(target_syn.dtype());
  out.metadata() = target_syn.metadata();
  out.metadata()["role"] = "merged";
  return out;
}

TaskVector difference(const ParameterSet& a, const ParameterSet& b, std::string minuend, std::string subtrahend) {
  TaskVector tv;
  tv.minuend = std::move(minuend);
  tv.subtrahend = std::move(subtrahend);
  tv.params.metadata()["role"] = "task_vector";
  tv.params.metadata()["minuend"] = tv.minuend;
  tv.params.metadata()["subtrahend"] = tv.subtrahend;
  for (const auto& [name, ta] : a.entries()) {
    const auto& tb = b.at(name);
    tv.params.set(name, Tensor(ta.shape, ta.data - tb.data));
  }
  return tv;
}

}  // namespace

std::string_view beta_mode_name(BetaMode mode) noexcept {
  switch (mode) {
    case BetaMode::unit: return "unit";
    case BetaMode::uniform: return "uniform";
    case BetaMode::kl: return "kl";
    case BetaMode::hellinger: return "hellinger";
    case BetaMode::jaccard: return "jaccard";
  }
  return "unit";
}

BetaMode parse_beta_mode(std::string_view name) {
  if (name == "unit") return BetaMode::unit;
  if (name == "uniform") return BetaMode::uniform;
  if (name == "kl") return BetaMode::kl;
  if (name == "hellinger") return BetaMode::hellinger;
  if (name == "jaccard") return BetaMode::jaccard;
  throw Error(Errc::InvalidPlan, "unknown beta_mode '" + std::string(name) + "'");
}

std::optional<SimilarityMetric> beta_mode_metric(BetaMode mode) noexcept {
  switch (mode) {
    case BetaMode::kl: return SimilarityMetric::kl;
    case BetaMode::hellinger: return SimilarityMetric::hellinger;
    case BetaMode::jaccard: return SimilarityMetric::jaccard;
    default: return std::nullopt;
  }
}

void MergePlan::validate() const {
  if (sources.empty()) throw Error(Errc::InvalidPlan, "source set is empty");
  std::set<std::string> seen;
  for (const auto& s : sources) {
    if (s == target) throw Error(Errc::InvalidPlan, "target '" + target + "' appears among the sources");
    if (!seen.insert(s).second) throw Error(Errc::InvalidPlan, "duplicate source '" + s + "'");
  }
  if (betas.size() != sources.size())
    throw Error(Errc::InvalidPlan, "expected one beta per source");
  for (const auto& s : sources) {
    auto it = betas.find(s);
    if (it == betas.end()) throw Error(Errc::InvalidPlan, "no beta for source '" + s + "'");
    check_beta(it->second, s);
  }
  check_alpha(alpha);
}

TaskVector task_vector(const ParameterSet& fine_tuned, const ParameterSet& ancestor) {
  check_compatible(fine_tuned, ancestor);
  return difference(fine_tuned, ancestor, checkpoint_id(fine_tuned), checkpoint_id(ancestor));
}

TaskVector s2r_delta(const TaskVector& real_tv, const TaskVector& syn_tv) {
  check_compatible(real_tv.params, syn_tv.params, false);
  auto id = [](const TaskVector& v) { return "(" + v.minuend + " - " + v.subtrahend + ")"; };
  return difference(real_tv.params, syn_tv.params, id(real_tv), id(syn_tv));
}

TaskVector scale(const TaskVector& v, double factor) {
  TaskVector out;
  out.minuend = v.minuend;
  out.subtrahend = v.subtrahend;
  out.params.metadata() = v.params.metadata();
  for (const auto& [name, t] : v.params.entries()) out.params.set(name, Tensor(t.shape, factor * t.data));
  return out;
}

ParameterSet apply_single_analogy(const ParameterSet& target_syn, const TaskVector& delta, double alpha,
                                  double beta) {
  check_compatible(target_syn, delta.params, false);
  check_alpha(alpha);
  check_beta(beta, "delta");
  ParameterSet out = merged_copy(target_syn);
  for (const auto& [name, t] : target_syn.entries()) {
    if (alpha == 0.0) {
      out.set(name, t);
      continue;
    }
    const Tensor::Vector scaled = beta * delta.params.at(name).data;
    out.set(name, Tensor(t.shape, t.data + alpha * scaled));
  }
  return out;
}

ParameterSet apply_multi_analogy(const ParameterSet& target_syn, const std::map<std::string, TaskVector>& deltas,
                                 const MergePlan& plan) {
  plan.validate();
  std::vector<std::string> order = plan.sources;
  std::sort(order.begin(), order.end());
  {
    std::vector<std::string> keys;
    for (const auto& [k, _] : deltas) keys.push_back(k);
    if (keys != order) {
      std::string msg = "deltas do not match the plan's sources;";
      for (const auto& s : order)
        if (!deltas.contains(s)) msg += " missing '" + s + "'";
      for (const auto& k : keys)
        if (std::find(order.begin(), order.end(), k) == order.end()) msg += " unexpected '" + k + "'";
      throw Error(Errc::SourceSetMismatch, msg);
    }
  }
  for (const auto& s : order) check_compatible(target_syn, deltas.at(s).params, false);

  ParameterSet out = merged_copy(target_syn);
  for (const auto& [name, t] : target_syn.entries()) {
    if (plan.alpha == 0.0) {
      out.set(name, t);
      continue;
    }
    Tensor::Vector acc = plan.betas.at(order.front()) * deltas.at(order.front()).params.at(name).data;
    for (std::size_t k = 1; k < order.size(); ++k)
      acc += plan.betas.at(order[k]) * deltas.at(order[k]).params.at(name).data;
    out.set(name, Tensor(t.shape, t.data + plan.alpha * acc));
  }
  return out;
}

std::map<std::string, double> resolve_betas(BetaMode mode, const std::vector<std::string>& sources,
                                            const std::string& target, const SimilarityMatrix* sim) {
  std::map<std::string, double> betas;
  if (sources.empty()) throw Error(Errc::InvalidPlan, "source set is empty");
  const auto metric = beta_mode_metric(mode);
  if (metric) {
    if (!sim) throw Error(Errc::MissingSimilarity, "beta_mode '" + std::string(beta_mode_name(mode)) +
                                                       "' needs a similarity matrix");
    if (sim->metric != *metric) {
      throw Error(Errc::MissingSimilarity, "beta_mode '" + std::string(beta_mode_name(mode)) +
                                               "' given a '" + std::string(metric_name(sim->metric)) + "' matrix");
    }
  }
  for (const auto& s : sources) {
    switch (mode) {
      case BetaMode::unit: betas[s] = 1.0; break;
      case BetaMode::uniform: betas[s] = 1.0 / static_cast<double>(sources.size()); break;
      default: betas[s] = sim->score(s, target); break;
    }
  }
  return betas;
}

std::pair<std::string, double> select_informed_source(const std::vector<std::string>& sources,
                                                      const std::string& target, const SimilarityMatrix& sim) {
  if (sources.empty()) throw Error(Errc::InvalidPlan, "source set is empty");
  std::vector<std::string> order = sources;
  std::sort(order.begin(), order.end());
  std::pair<std::string, double> best{order.front(), sim.score(order.front(), target)};
  for (std::size_t k = 1; k < order.size(); ++k) {
    const double b = sim.score(order[k], target);
    if (b > best.second) best = {order[k], b};
  }
  return best;
}

std::string_view alpha_mode_name(AlphaMode mode) noexcept {
  switch (mode) {
    case AlphaMode::fixed: return "fixed";
    case AlphaMode::heldout: return "heldout";
    case AlphaMode::oracle: return "oracle";
  }
  return "fixed";
}

MergePlanConfig parse_merge_plan(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(Errc::InvalidPlan, "plan must be a JSON object");
    MergePlanConfig plan;
    plan.target = j.at("target").get<std::string>();
    plan.sources = j.at("sources").get<std::vector<std::string>>();
    plan.beta_mode = parse_beta_mode(j.at("beta_mode").get<std::string>());
    const auto& alpha = j.at("alpha");
    const auto mode = alpha.at("mode").get<std::string>();
    if (mode == "fixed") plan.alpha_mode = AlphaMode::fixed;
    else if (mode == "heldout") plan.alpha_mode = AlphaMode::heldout;
    else if (mode == "oracle") plan.alpha_mode = AlphaMode::oracle;
    else throw Error(Errc::InvalidPlan, "unknown alpha mode '" + mode + "'");
    if (alpha.contains("value")) plan.alpha_value = alpha.at("value").get<double>();
    if (plan.alpha_mode == AlphaMode::fixed && !plan.alpha_value)
      throw Error(Errc::InvalidPlan, "alpha mode 'fixed' requires a value");
    if (j.contains("similarity_file")) plan.similarity_file = j.at("similarity_file").get<std::string>();
    if (plan.sources.empty()) throw Error(Errc::InvalidPlan, "source set is empty");
    if (std::find(plan.sources.begin(), plan.sources.end(), plan.target) != plan.sources.end())
      throw Error(Errc::InvalidPlan, "target '" + plan.target + "' appears among the sources");
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidPlan, e.what());
  }
}

nlohmann::json to_json(const MergePlanConfig& plan) {
  nlohmann::json j;
  j["target"] = plan.target;
  j["sources"] = plan.sources;
  j["beta_mode"] = beta_mode_name(plan.beta_mode);
  j["alpha"]["mode"] = alpha_mode_name(plan.alpha_mode);
  if (plan.alpha_value) j["alpha"]["value"] = *plan.alpha_value;
  if (plan.similarity_file) j["similarity_file"] = *plan.similarity_file;
  return j;
}

}  // namespace tvmerge
