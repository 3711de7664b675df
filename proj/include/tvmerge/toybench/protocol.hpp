// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tvmerge/lang_sim.hpp"
#include "tvmerge/metrics.hpp"
#include "tvmerge/selection.hpp"
#include "tvmerge/task_arith.hpp"
#include "tvmerge/toybench/language.hpp"
#include "tvmerge/toybench/recognizer.hpp"

namespace tvmerge::toybench {

enum class MergeKind { single, multi };

/// One row of the results table.
///
/// single + unit/uniform: the source whose analogy scores best on the
/// held-out languages, with beta = 1. single + similarity mode: the source
/// with the largest beta(s, T), scaled by that beta. multi: every source.
struct MergeConfig {
  std::string name;
  MergeKind kind = MergeKind::multi;
  BetaMode beta_mode = BetaMode::unit;
  AlphaMode alpha_mode = AlphaMode::heldout;
  double alpha_value = 0.0;  // used when alpha_mode == fixed
  /// Restricts the source pool; empty means every non-target language.
  std::vector<std::string> sources;
};

struct StageOptions {
  int epochs = 10;
  double lr = 0.1;
};

struct ExperimentConfig {
  std::vector<std::string> languages = {"en", "fr", "it", "es", "de"};
  int alphabet_size = 16;
  int feature_dim = 32;
  int hidden = 24;
  std::size_t train_sequences = 2000;
  std::size_t test_sequences = 500;
  std::size_t corpus_sequences = 500;
  std::size_t seq_len = 12;

  double ancestor_noise = 0.01;
  double child_noise = 0.05;
  double real_noise = 2.0;
  double shift_matrix_strength = 0.8;
  double shift_bias_strength = 0.5;
  double per_lang_shift_scale = 0.2;

  std::size_t batch_size = 64;
  StageOptions ancestor{8, 0.1};
  StageOptions child{2, 0.05};
  StageOptions real{3, 0.05};
  StageOptions probe{2, 0.05};

  std::vector<int> orders = {1, 2, 3, 4, 5};
  double kl_epsilon = kDefaultKlEpsilon;

  std::vector<double> grid = AlphaGrid().values();
  bool per_target_alpha = false;
  /// Coefficient of the single-source transfer analysis.
  double transfer_alpha = 1.0;
  bool linear_probe = true;
  int num_seeds = 5;

  std::vector<MergeConfig> merges = default_merges();

  static std::vector<MergeConfig> default_merges();
  /// Throws ConfigInvalid.
  void validate() const;
};

/// Throws ConfigInvalid on unknown keys or bad values. Absent keys keep defaults.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& c);

/// Everything trained for one seed.
struct World {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::map<std::string, ToyLanguageSpec> languages;
  Eigen::MatrixXd glyphs;
  DomainSpec real_domain;
  std::map<std::string, FrameSet> real_train;
  std::map<std::string, FrameSet> real_test;
  std::map<std::string, std::vector<std::string>> corpora;
  ToyRecognizer ancestor{ToyRecognizer::initialize(1, 1, 2, 0)};
  std::map<std::string, ToyRecognizer> syn;
  std::map<std::string, ToyRecognizer> real;
  std::map<std::string, TaskVector> deltas;
  std::map<SimilarityMetric, SimilarityMatrix> similarity;
};

/// Data generation, ancestor / child / real training, synthetic-to-real
/// deltas and similarity matrices.
World build_world(const ExperimentConfig& config, std::uint64_t seed);

ParameterSet merge_single(const World& w, const std::string& target, const std::string& source, double alpha,
                          double beta);
ParameterSet merge_multi(const World& w, const std::string& target, const std::map<std::string, double>& betas,
                         double alpha);

struct TargetResult {
  std::vector<std::string> sources;
  std::map<std::string, double> betas;
  double alpha = 0.0;
  EvalReport eval;
  double oracle_alpha = 0.0;
  EvalReport oracle_eval;
};

struct ConfigResult {
  MergeConfig config;
  std::map<std::string, TargetResult> targets;
  std::vector<SelectionResult> selections;
  double mean_cer = 0.0;
  double mean_wer = 0.0;
  double oracle_mean_cer = 0.0;
  double oracle_mean_wer = 0.0;
};

struct TransferResult {
  double alpha = 1.0;
  /// improvement[source][target]: relative CER decrease of T's synthetic model
  /// after adding alpha * delta_source, on T's real test data.
  std::map<std::string, std::map<std::string, double>> improvement;
  double matched_mean = 0.0;
  double mismatched_mean = 0.0;
  /// Mean over (S, T != S) of the relative decrease of theta_T^syn + alpha
  /// delta_S against theta_T^syn, evaluated on S, on T, and on every other Q.
  double on_source_mean = 0.0;
  double on_target_mean = 0.0;
  double on_other_mean = 0.0;
};

struct ProbeResult {
  std::string config;
  std::map<std::string, double> cer;
  std::map<std::string, double> wer;
  double mean_cer = 0.0;
  double mean_wer = 0.0;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::map<std::string, EvalReport> in_domain;
  std::map<std::string, EvalReport> baseline;
  double in_domain_mean_cer = 0.0, in_domain_mean_wer = 0.0;
  double baseline_mean_cer = 0.0, baseline_mean_wer = 0.0;
  std::vector<ConfigResult> configs;
  TransferResult transfer;
  std::vector<ProbeResult> probes;  // baseline first, then merged models
  std::map<SimilarityMetric, SimilarityMatrix> similarity;

  const ConfigResult* find_config(const std::string& name) const;
};

RunReport evaluate_world(const World& w);
RunReport run_protocol(const ExperimentConfig& config, std::uint64_t seed);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RunReport> runs;
};

/// Runs seeds base_seed, base_seed + 1, ... (config.num_seeds of them).
ExperimentReport run_experiment(const ExperimentConfig& config, std::uint64_t base_seed);

nlohmann::ordered_json to_json(const RunReport& r);
/// Per-run tables plus a "summary" with seed-averaged results tables, the
/// held-out vs oracle gap, transfer analysis and probing.
nlohmann::ordered_json to_json(const ExperimentReport& r);

}  // namespace tvmerge::toybench
