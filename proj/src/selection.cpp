// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "tvmerge/error.hpp"

namespace tvmerge {

namespace {

double checked_call(const std::function<double()>& fn, double alpha, const std::string& context) {
  double v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    throw Error(Errc::EvaluatorFailure, "alpha=" + format_alpha(alpha) + " " + context + ": " + e.what());
  }
  if (!std::isfinite(v))
    throw Error(Errc::EvaluatorFailure, "alpha=" + format_alpha(alpha) + " " + context + ": non-finite score");
  return v;
}

// First grid point attaining the minimum: ties resolve to the smallest alpha.
double argmin(const std::map<double, double>& objective) {
  auto best = objective.begin();
  for (auto it = objective.begin(); it != objective.end(); ++it)
    if (it->second < best->second) best = it;
  return best->first;
}

}  // namespace

AlphaGrid::AlphaGrid() {
  for (int k = 0; k <= 8; ++k) values_.push_back(0.125 * k);
}

AlphaGrid::AlphaGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(Errc::InvalidGrid, "alpha grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0))
      throw Error(Errc::InvalidGrid, "alpha grid value " + format_alpha(values_[i]) + " outside [0, 1]");
    if (i && !(values_[i] > values_[i - 1])) throw Error(Errc::InvalidGrid, "alpha grid not strictly increasing");
  }
}

bool AlphaGrid::contains(double alpha) const {
  return std::find(values_.begin(), values_.end(), alpha) != values_.end();
}

SelectionResult select_alpha_heldout(const AlphaGrid& grid, const std::string& target,
                                     const std::vector<std::string>& candidates, const HeldoutEvaluator& evaluate) {
  if (candidates.empty()) throw Error(Errc::EmptyHeldout, "no held-out languages for target '" + target + "'");
  if (std::find(candidates.begin(), candidates.end(), target) != candidates.end())
    throw Error(Errc::InvalidArgument, "target '" + target + "' is among its own held-out languages");
  SelectionResult r;
  r.mode = SelectionMode::heldout;
  r.target = target;
  r.heldout_languages = candidates;
  for (double alpha : grid.values()) {
    auto& row = r.per_alpha_scores[alpha];
    double sum = 0.0;
    for (const auto& lang : candidates) {
      const double v = checked_call([&] { return evaluate(alpha, lang); }, alpha, "language '" + lang + "'");
      row[lang] = v;
      sum += v;
    }
    r.objective[alpha] = sum / static_cast<double>(candidates.size());
  }
  r.chosen_alpha = argmin(r.objective);
  return r;
}

SelectionResult select_alpha_oracle(const AlphaGrid& grid, const std::string& target,
                                    const OracleEvaluator& evaluate) {
  SelectionResult r;
  r.mode = SelectionMode::oracle;
  r.target = target;
  for (double alpha : grid.values()) {
    const double v = checked_call([&] { return evaluate(alpha); }, alpha, "target '" + target + "'");
    r.per_alpha_scores[alpha][target] = v;
    r.objective[alpha] = v;
  }
  r.chosen_alpha = argmin(r.objective);
  return r;
}

SelectionResult select_alpha_shared(const AlphaGrid& grid, const std::vector<std::string>& targets,
                                    const std::vector<std::string>& languages, const SharedEvaluator& evaluate) {
  if (targets.empty()) throw Error(Errc::EmptyHeldout, "no targets");
  SelectionResult r;
  r.mode = SelectionMode::heldout;
  r.heldout_languages = languages;
  for (double alpha : grid.values()) {
    auto& row = r.per_alpha_scores[alpha];
    double total = 0.0;
    for (const auto& t : targets) {
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& lang : languages) {
        if (lang == t) continue;
        const double v = checked_call([&] { return evaluate(alpha, t, lang); }, alpha,
                                      "target '" + t + "' language '" + lang + "'");
        row[t + "/" + lang] = v;
        sum += v;
        ++count;
      }
      if (count == 0) throw Error(Errc::EmptyHeldout, "no held-out languages for target '" + t + "'");
      total += sum / static_cast<double>(count);
    }
    r.objective[alpha] = total / static_cast<double>(targets.size());
  }
  r.chosen_alpha = argmin(r.objective);
  return r;
}

std::string format_alpha(double alpha) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, alpha);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json to_json(const SelectionResult& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode == SelectionMode::heldout ? "heldout" : "oracle";
  if (!r.target.empty()) j["target"] = r.target;
  j["chosen_alpha"] = r.chosen_alpha;
  j["heldout_languages"] = r.heldout_languages;
  nlohmann::ordered_json table = nlohmann::ordered_json::object();
  for (const auto& [alpha, row] : r.per_alpha_scores) {
    nlohmann::ordered_json entry;
    entry["objective"] = r.objective.at(alpha);
    entry["scores"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : row) entry["scores"][k] = v;
    table[format_alpha(alpha)] = std::move(entry);
  }
  j["per_alpha"] = std::move(table);
  return j;
}

}  // namespace tvmerge
