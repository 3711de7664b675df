// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace tvmerge {

/// Levenshtein distance with unit costs over any random-access sequence.
template <typename Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  const std::size_t n = std::size(a), m = std::size(b);
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Corpus-level edit totals for one unit (characters or words).
struct ErrorTotals {
  std::size_t num_samples = 0;
  std::size_t edits = 0;
  std::size_t ref_length = 0;

  double rate() const { return static_cast<double>(edits) / static_cast<double>(ref_length); }
};

/// Edits over Unicode scalar values. Throws LengthMismatch or EmptyReferenceCorpus.
ErrorTotals cer(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);
/// Edits over whitespace-separated words. Same errors as cer.
ErrorTotals wer(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

struct EvalReport {
  std::string dataset;
  std::string model;
  std::size_t num_samples = 0;
  double cer = 0.0;
  double wer = 0.0;
  std::size_t total_char_edits = 0;
  std::size_t total_ref_chars = 0;
  std::size_t total_word_edits = 0;
  std::size_t total_ref_words = 0;
};

EvalReport evaluate(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                    std::string dataset, std::string model);

nlohmann::ordered_json to_json(const EvalReport& r);
std::string csv_header();
std::string csv_row(const EvalReport& r);

}  // namespace tvmerge
