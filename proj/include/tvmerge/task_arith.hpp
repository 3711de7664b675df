// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tvmerge/checkpoint.hpp"
#include "tvmerge/lang_sim.hpp"

namespace tvmerge {

/// A parameter-space displacement (a task vector or a synthetic-to-real
/// delta). `params` always holds f64 tensors.
struct TaskVector {
  ParameterSet params{Dtype::f64};
  std::string minuend;
  std::string subtrahend;
};

enum class BetaMode { unit, uniform, kl, hellinger, jaccard };

std::string_view beta_mode_name(BetaMode mode) noexcept;
BetaMode parse_beta_mode(std::string_view name);
/// The similarity metric behind a similarity-driven mode; nullopt for unit/uniform.
std::optional<SimilarityMetric> beta_mode_metric(BetaMode mode) noexcept;

/// A fully resolved multi-source merge.
struct MergePlan {
  std::string target;
  std::vector<std::string> sources;
  BetaMode beta_mode = BetaMode::unit;
  std::map<std::string, double> betas;
  double alpha = 0.0;

  /// Throws InvalidPlan, InvalidBeta or AlphaOutOfRange.
  void validate() const;
};

/// fine_tuned - ancestor, elementwise.
TaskVector task_vector(const ParameterSet& fine_tuned, const ParameterSet& ancestor);

/// real_tv - syn_tv: the synthetic-to-real displacement of one source.
TaskVector s2r_delta(const TaskVector& real_tv, const TaskVector& syn_tv);

TaskVector scale(const TaskVector& v, double factor);

/// target_syn + alpha * (beta * delta). The result keeps target_syn's dtype and
/// metadata, with role set to "merged".
ParameterSet apply_single_analogy(const ParameterSet& target_syn, const TaskVector& delta, double alpha,
                                  double beta);

/// target_syn + alpha * sum_s betas[s] * deltas[s]. Sources are accumulated in
/// lexicographic order; a singleton plan matches apply_single_analogy bit for bit.
ParameterSet apply_multi_analogy(const ParameterSet& target_syn, const std::map<std::string, TaskVector>& deltas,
                                 const MergePlan& plan);

/// unit: 1 each; uniform: 1/|sources|; similarity modes: raw sim(s, target).
std::map<std::string, double> resolve_betas(BetaMode mode, const std::vector<std::string>& sources,
                                            const std::string& target, const SimilarityMatrix* sim);

/// Source with the largest beta(s, target); ties go to the smallest id.
std::pair<std::string, double> select_informed_source(const std::vector<std::string>& sources,
                                                      const std::string& target, const SimilarityMatrix& sim);

enum class AlphaMode { fixed, heldout, oracle };

std::string_view alpha_mode_name(AlphaMode mode) noexcept;

/// The on-disk merge plan: a MergePlan before beta and alpha resolution.
struct MergePlanConfig {
  std::string target;
  std::vector<std::string> sources;
  BetaMode beta_mode = BetaMode::unit;
  AlphaMode alpha_mode = AlphaMode::fixed;
  std::optional<double> alpha_value;
  std::optional<std::string> similarity_file;
};

/// Throws InvalidPlan on schema violations.
MergePlanConfig parse_merge_plan(const nlohmann::json& j);
nlohmann::json to_json(const MergePlanConfig& plan);

}  // namespace tvmerge
