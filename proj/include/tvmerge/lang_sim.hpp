// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvmerge {

using NgramDistribution = std::map<std::u32string, double>;

/// Character n-gram frequency distributions of one language, one per order.
struct NgramProfile {
  std::string language;
  std::vector<int> orders;
  std::map<int, NgramDistribution> dists;
  std::map<int, std::size_t> total_counts;

  /// Set of distinct n-grams observed at order n.
  std::set<std::u32string> vocab(int n) const;
};

inline const std::vector<int> kDefaultOrders = {1, 2, 3, 4, 5};
inline constexpr double kDefaultKlEpsilon = 1e-10;

/// Counts every length-n window inside each line. Lines never contribute
/// cross-line n-grams; a trailing '\r' is dropped. Throws InvalidArgument for
/// bad orders, InvalidUtf8, and EmptyCorpus when some order sees no window.
NgramProfile build_profile(std::istream& corpus, std::string language,
                           const std::vector<int>& orders = kDefaultOrders);
NgramProfile build_profile(std::span<const std::string> lines, std::string language,
                           const std::vector<int>& orders = kDefaultOrders);

/// Mean over orders of D_KL(a || b') in nats, where b' gives every n-gram of a
/// missing from b mass epsilon and is renormalized. Not symmetric.
double kl_divergence(const NgramProfile& a, const NgramProfile& b, double epsilon = kDefaultKlEpsilon);

/// 1 - ||sqrt(V_a) - sqrt(V_b)||_2 / sqrt(2), with V the concatenation of the
/// per-order distributions each scaled by 1/(number of orders).
double hellinger_similarity(const NgramProfile& a, const NgramProfile& b);

/// |V_a ∩ V_b| / |V_a ∪ V_b| over the order-tagged pooled vocabularies.
double jaccard_similarity(const NgramProfile& a, const NgramProfile& b);

enum class SimilarityMetric { kl, hellinger, jaccard };

std::string_view metric_name(SimilarityMetric m) noexcept;
SimilarityMetric parse_metric(std::string_view name);

/// Pairwise importance scores. Row index is the source language, column the
/// target: score(s, t) is beta(s, T=t).
struct SimilarityMatrix {
  SimilarityMetric metric = SimilarityMetric::kl;
  std::vector<std::string> languages;
  Eigen::MatrixXd scores;
  std::optional<Eigen::MatrixXd> raw_divergences;
  /// Set when every pairwise KL divergence is zero and scores are all 1.
  bool degenerate = false;

  std::optional<std::size_t> index_of(std::string_view language) const;
  /// Throws MissingSimilarity if either language is absent.
  double score(std::string_view source, std::string_view target) const;
};

SimilarityMatrix build_kl_matrix(std::span<const NgramProfile> profiles, double epsilon = kDefaultKlEpsilon);
SimilarityMatrix build_hellinger_matrix(std::span<const NgramProfile> profiles);
SimilarityMatrix build_jaccard_matrix(std::span<const NgramProfile> profiles);
SimilarityMatrix build_similarity_matrix(SimilarityMetric metric, std::span<const NgramProfile> profiles,
                                         double epsilon = kDefaultKlEpsilon);

/// TSV with a leading "# metric: <name>" line, a "# degenerate" line when the
/// flag is set, then a header row and one row per source language. Values use
/// six decimals.
std::string format_similarity_tsv(const SimilarityMatrix& m);
SimilarityMatrix parse_similarity_tsv(std::istream& in);

}  // namespace tvmerge
