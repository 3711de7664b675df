// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace tvmerge {

/// Candidate scaling coefficients: strictly increasing values in [0, 1].
class AlphaGrid {
 public:
  /// {0, 0.125, ..., 1}: nine points.
  AlphaGrid();
  /// Throws InvalidGrid.
  explicit AlphaGrid(std::vector<double> values);

  const std::vector<double>& values() const noexcept { return values_; }
  bool contains(double alpha) const;

 private:
  std::vector<double> values_;
};

enum class SelectionMode { heldout, oracle };

struct SelectionResult {
  double chosen_alpha = 0.0;
  /// alpha -> evaluation key -> CER. Keys are language ids (heldout), the
  /// target id (oracle), or "target/language" pairs (shared heldout).
  std::map<double, std::map<std::string, double>> per_alpha_scores;
  /// alpha -> value that was minimized.
  std::map<double, double> objective;
  SelectionMode mode = SelectionMode::heldout;
  std::string target;
  std::vector<std::string> heldout_languages;
};

using HeldoutEvaluator = std::function<double(double alpha, const std::string& language)>;
using OracleEvaluator = std::function<double(double alpha)>;
using SharedEvaluator =
    std::function<double(double alpha, const std::string& target, const std::string& language)>;

/// Minimizes the mean CER over `candidates` (which must exclude `target`).
/// Ties go to the smaller alpha. Throws EmptyHeldout, InvalidArgument, or
/// EvaluatorFailure carrying the alpha and language of a failed evaluation.
SelectionResult select_alpha_heldout(const AlphaGrid& grid, const std::string& target,
                                     const std::vector<std::string>& candidates, const HeldoutEvaluator& evaluate);

/// Minimizes the target's own CER.
SelectionResult select_alpha_oracle(const AlphaGrid& grid, const std::string& target,
                                    const OracleEvaluator& evaluate);

/// One alpha for a whole merge configuration: for each target t, the mean of
/// evaluate(alpha, t, l) over languages l != t; the objective is the mean of
/// those per-target means.
SelectionResult select_alpha_shared(const AlphaGrid& grid, const std::vector<std::string>& targets,
                                    const std::vector<std::string>& languages, const SharedEvaluator& evaluate);

/// Shortest decimal form that round-trips (0.125 -> "0.125").
std::string format_alpha(double alpha);

nlohmann::ordered_json to_json(const SelectionResult& r);

}  // namespace tvmerge
