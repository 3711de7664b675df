// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace tvmerge::toybench {

/// A toy language: a first-order Markov chain over a small alphabet. Symbol 0
/// renders as a space, so label strings contain words.
struct ToyLanguageSpec {
  std::string id;
  int alphabet_size = 16;
  Eigen::MatrixXd bigram_matrix;  // row-stochastic: P(next = j | current = i)
  Eigen::VectorXd unigram_init;   // distribution of the first symbol

  /// Throws InvalidArgument if rows or the initial vector are not stochastic.
  void validate() const;
  /// Stationary distribution of the chain: solves pi (P - I) = 0 with sum(pi) = 1.
  Eigen::VectorXd stationary() const;
};

inline constexpr int kMaxAlphabet = 27;

/// Deterministic in (seed, id). Every row puts some mass on the space symbol
/// (except the space row itself) and spreads the rest over a random sparse
/// subset of letters.
ToyLanguageSpec gen_language(std::uint64_t seed, const std::string& id, int alphabet_size = 16);

char symbol_char(int symbol);
std::string render_labels(const std::vector<int>& labels);

enum class DomainKind { synthetic, real };

/// How glyphs turn into feature frames.
struct DomainSpec {
  DomainKind kind = DomainKind::synthetic;
  int feature_dim = 32;
  Eigen::MatrixXd glyph_templates;  // alphabet_size x feature_dim
  double noise_sigma = 0.01;
  Eigen::MatrixXd shift_matrix;  // feature_dim x feature_dim
  Eigen::VectorXd shift_bias;    // feature_dim
  /// Size of each language's private shift relative to the shared one.
  double per_lang_shift_scale = 0.0;
  /// Seeds the per-language shift directions.
  std::uint64_t shift_seed = 0;

  /// Throws InvalidArgument on inconsistent sizes or a shifted synthetic domain.
  void validate() const;
};

Eigen::MatrixXd make_glyph_templates(std::uint64_t seed, int alphabet_size, int feature_dim);

DomainSpec synthetic_domain(const Eigen::MatrixXd& templates, double noise_sigma);

/// Shared shift: A = I + matrix_strength * G / sqrt(d), b = bias_strength * g,
/// with G, g standard normal.
DomainSpec real_domain(const Eigen::MatrixXd& templates, std::uint64_t seed, double noise_sigma,
                       double matrix_strength, double bias_strength, double per_lang_shift_scale);

/// Per-language part of a real domain shift: a matrix and a bias with the same
/// norms as (A - I) and b, times per_lang_shift_scale. Zero for synthetic domains.
struct LanguageShift {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd bias;
};
LanguageShift language_shift(const DomainSpec& domain, const std::string& language_id);

struct Sample {
  Eigen::MatrixXd features;  // seq_len x feature_dim, one frame per row
  std::vector<int> labels;
  std::string text;
};

using Dataset = std::vector<Sample>;

/// Labels follow the language's chain; frame t is
/// (A + dA_l) * template[c_t] + b + db_l + N(0, sigma^2 I).
Dataset sample_dataset(const ToyLanguageSpec& lang, const DomainSpec& domain, std::size_t n, std::size_t seq_len,
                       std::uint64_t seed);

}  // namespace tvmerge::toybench
