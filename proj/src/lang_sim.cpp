// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/lang_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

#include "tvmerge/error.hpp"
#include "tvmerge/utf8.hpp"

namespace tvmerge {

namespace {

void validate_orders(const std::vector<int>& orders) {
  if (orders.empty()) throw Error(Errc::InvalidArgument, "n-gram order list is empty");
  for (int n : orders)
    if (n < 1) throw Error(Errc::InvalidArgument, "n-gram order must be >= 1, got " + std::to_string(n));
}

void require_same_orders(const NgramProfile& a, const NgramProfile& b) {
  if (a.orders != b.orders)
    throw Error(Errc::OrderMismatch, "profiles '" + a.language + "' and '" + b.language + "' use different orders");
}

class ProfileBuilder {
 public:
  ProfileBuilder(std::string language, const std::vector<int>& orders) {
    validate_orders(orders);
    profile_.language = std::move(language);
    for (int n : orders)
      if (std::find(profile_.orders.begin(), profile_.orders.end(), n) == profile_.orders.end())
        profile_.orders.push_back(n);
    std::sort(profile_.orders.begin(), profile_.orders.end());
  }

  void add_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::u32string chars = decode_utf8(line);
    for (int n : profile_.orders) {
      const auto un = static_cast<std::size_t>(n);
      if (chars.size() < un) continue;
      auto& table = counts_[n];
      for (std::size_t i = 0; i + un <= chars.size(); ++i) ++table[chars.substr(i, un)];
      profile_.total_counts[n] += chars.size() - un + 1;
    }
  }

  NgramProfile finish() && {
    for (int n : profile_.orders) {
      const std::size_t total = profile_.total_counts[n];
      if (total == 0)
        throw Error(Errc::EmptyCorpus,
                    "corpus for '" + profile_.language + "' has no " + std::to_string(n) + "-gram");
      auto& dist = profile_.dists[n];
      for (const auto& [gram, count] : counts_[n])
        dist.emplace(gram, static_cast<double>(count) / static_cast<double>(total));
    }
    return std::move(profile_);
  }

 private:
  NgramProfile profile_;
  std::map<int, std::map<std::u32string, std::size_t>> counts_;
};

double kl_order(const NgramDistribution& p, const NgramDistribution& q, double epsilon) {
  std::size_t missing = 0;
  for (const auto& [gram, _] : p)
    if (!q.contains(gram)) ++missing;
  const double z = 1.0 + epsilon * static_cast<double>(missing);
  double sum = 0.0;
  for (const auto& [gram, pa] : p) {
    auto it = q.find(gram);
    const double qb = (it == q.end() ? epsilon : it->second) / z;
    sum += pa * std::log(pa / qb);
  }
  return sum;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

template <typename PairFn>
SimilarityMatrix symmetric_matrix(SimilarityMetric metric, std::span<const NgramProfile> profiles, PairFn fn) {
  if (profiles.size() < 2) throw Error(Errc::InvalidArgument, "need at least two profiles");
  SimilarityMatrix m;
  m.metric = metric;
  const auto n = static_cast<Eigen::Index>(profiles.size());
  m.scores = Eigen::MatrixXd::Identity(n, n);
  for (const auto& p : profiles) m.languages.push_back(p.language);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = clamp01(fn(profiles[static_cast<std::size_t>(i)], profiles[static_cast<std::size_t>(j)]));
      m.scores(i, j) = s;
      m.scores(j, i) = s;
    }
  }
  return m;
}

}  // namespace

std::set<std::u32string> NgramProfile::vocab(int n) const {
  std::set<std::u32string> out;
  if (auto it = dists.find(n); it != dists.end())
    for (const auto& [gram, _] : it->second) out.insert(gram);
  return out;
}

NgramProfile build_profile(std::istream& corpus, std::string language, const std::vector<int>& orders) {
  ProfileBuilder builder(std::move(language), orders);
  std::string line;
  while (std::getline(corpus, line)) builder.add_line(line);
  return std::move(builder).finish();
}

NgramProfile build_profile(std::span<const std::string> lines, std::string language, const std::vector<int>& orders) {
  ProfileBuilder builder(std::move(language), orders);
  for (const auto& line : lines) builder.add_line(line);
  return std::move(builder).finish();
}

double kl_divergence(const NgramProfile& a, const NgramProfile& b, double epsilon) {
  require_same_orders(a, b);
  if (!(epsilon > 0.0)) throw Error(Errc::InvalidArgument, "KL epsilon must be > 0");
  double total = 0.0;
  for (int n : a.orders) total += kl_order(a.dists.at(n), b.dists.at(n), epsilon);
  return total / static_cast<double>(a.orders.size());
}

double hellinger_similarity(const NgramProfile& a, const NgramProfile& b) {
  require_same_orders(a, b);
  const double scale = 1.0 / static_cast<double>(a.orders.size());
  double sq = 0.0;
  for (int n : a.orders) {
    const auto& pa = a.dists.at(n);
    const auto& pb = b.dists.at(n);
    // Merge walk over the sorted union of supports.
    auto ia = pa.begin();
    auto ib = pb.begin();
    while (ia != pa.end() || ib != pb.end()) {
      double va = 0.0, vb = 0.0;
      if (ib == pb.end() || (ia != pa.end() && ia->first < ib->first)) {
        va = ia++->second;
      } else if (ia == pa.end() || ib->first < ia->first) {
        vb = ib++->second;
      } else {
        va = ia++->second;
        vb = ib++->second;
      }
      const double d = std::sqrt(va * scale) - std::sqrt(vb * scale);
      sq += d * d;
    }
  }
  return clamp01(1.0 - std::sqrt(sq) / std::sqrt(2.0));
}

double jaccard_similarity(const NgramProfile& a, const NgramProfile& b) {
  require_same_orders(a, b);
  std::size_t inter = 0, uni = 0;
  for (int n : a.orders) {
    const auto& pa = a.dists.at(n);
    const auto& pb = b.dists.at(n);
    for (const auto& [gram, _] : pa)
      if (pb.contains(gram)) ++inter;
    uni += pa.size() + pb.size();
  }
  uni -= inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string_view metric_name(SimilarityMetric m) noexcept {
  switch (m) {
    case SimilarityMetric::kl: return "kl";
    case SimilarityMetric::hellinger: return "hellinger";
    case SimilarityMetric::jaccard: return "jaccard";
  }
  return "kl";
}

SimilarityMetric parse_metric(std::string_view name) {
  if (name == "kl") return SimilarityMetric::kl;
  if (name == "hellinger") return SimilarityMetric::hellinger;
  if (name == "jaccard") return SimilarityMetric::jaccard;
  throw Error(Errc::InvalidArgument, "unknown similarity metric '" + std::string(name) + "'");
}

std::optional<std::size_t> SimilarityMatrix::index_of(std::string_view language) const {
  for (std::size_t i = 0; i < languages.size(); ++i)
    if (languages[i] == language) return i;
  return std::nullopt;
}

double SimilarityMatrix::score(std::string_view source, std::string_view target) const {
  const auto i = index_of(source);
  const auto j = index_of(target);
  if (!i || !j) {
    throw Error(Errc::MissingSimilarity, std::string(metric_name(metric)) + " matrix has no entry for (" +
                                             std::string(source) + ", " + std::string(target) + ")");
  }
  return scores(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

SimilarityMatrix build_kl_matrix(std::span<const NgramProfile> profiles, double epsilon) {
  if (profiles.size() < 2) throw Error(Errc::InvalidArgument, "need at least two profiles");
  const auto n = static_cast<Eigen::Index>(profiles.size());
  SimilarityMatrix m;
  m.metric = SimilarityMetric::kl;
  for (const auto& p : profiles) m.languages.push_back(p.language);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  double max_div = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      raw(i, j) = kl_divergence(profiles[static_cast<std::size_t>(i)], profiles[static_cast<std::size_t>(j)], epsilon);
      max_div = std::max(max_div, raw(i, j));
    }
  }
  if (max_div > 0.0) {
    m.scores = (1.0 - raw.array() / max_div).cwiseMax(0.0).cwiseMin(1.0).matrix();
  } else {
    m.scores = Eigen::MatrixXd::Ones(n, n);
    m.degenerate = true;
  }
  m.scores.diagonal().setOnes();
  m.raw_divergences = std::move(raw);
  return m;
}

SimilarityMatrix build_hellinger_matrix(std::span<const NgramProfile> profiles) {
  return symmetric_matrix(SimilarityMetric::hellinger, profiles, hellinger_similarity);
}

SimilarityMatrix build_jaccard_matrix(std::span<const NgramProfile> profiles) {
  return symmetric_matrix(SimilarityMetric::jaccard, profiles, jaccard_similarity);
}

SimilarityMatrix build_similarity_matrix(SimilarityMetric metric, std::span<const NgramProfile> profiles,
                                         double epsilon) {
  switch (metric) {
    case SimilarityMetric::kl: return build_kl_matrix(profiles, epsilon);
    case SimilarityMetric::hellinger: return build_hellinger_matrix(profiles);
    case SimilarityMetric::jaccard: return build_jaccard_matrix(profiles);
  }
  return build_kl_matrix(profiles, epsilon);
}

std::string format_similarity_tsv(const SimilarityMatrix& m) {
  std::string out = "# metric: " + std::string(metric_name(m.metric)) + "\n";
  if (m.degenerate) out += "# degenerate\n";
  out += "lang";
  for (const auto& l : m.languages) out += "\t" + l;
  out += "\n";
  char buf[32];
  for (std::size_t i = 0; i < m.languages.size(); ++i) {
    out += m.languages[i];
    for (std::size_t j = 0; j < m.languages.size(); ++j) {
      std::snprintf(buf, sizeof buf, "\t%.6f",
                    m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

SimilarityMatrix parse_similarity_tsv(std::istream& in) {
  SimilarityMatrix m;
  bool have_metric = false;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> row_labels;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    return cells;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      constexpr std::string_view kMetric = "# metric: ";
      if (line.starts_with(kMetric)) {
        m.metric = parse_metric(std::string_view(line).substr(kMetric.size()));
        have_metric = true;
      } else if (line == "# degenerate") {
        m.degenerate = true;
      }
      continue;
    }
    auto cells = split(line);
    if (!have_header) {
      m.languages.assign(cells.begin() + 1, cells.end());
      have_header = true;
      continue;
    }
    if (cells.size() != m.languages.size() + 1)
      throw Error(Errc::InvalidArgument, "similarity TSV row '" + cells[0] + "' has wrong width");
    row_labels.push_back(cells[0]);
    std::vector<double> values;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      try {
        values.push_back(std::stod(cells[k]));
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "similarity TSV has non-numeric cell '" + cells[k] + "'");
      }
    }
    rows.push_back(std::move(values));
  }
  if (!have_metric) throw Error(Errc::InvalidArgument, "similarity TSV lacks '# metric:' line");
  if (!have_header || row_labels != m.languages)
    throw Error(Errc::InvalidArgument, "similarity TSV row labels do not match header");
  const auto n = static_cast<Eigen::Index>(m.languages.size());
  m.scores.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m.scores(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

}  // namespace tvmerge
