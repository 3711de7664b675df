// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/toybench/language.hpp"

#include <cmath>

#include <Eigen/LU>

#include "tvmerge/error.hpp"
#include "tvmerge/toybench/random.hpp"

namespace tvmerge::toybench {

namespace {

// Distinct letters (symbols 1..alphabet-1), drawn without replacement.
std::vector<int> pick_letters(Rng& rng, int alphabet_size, int count) {
  std::vector<int> letters;
  for (int c = 1; c < alphabet_size; ++c) letters.push_back(c);
  rng.shuffle(letters);
  letters.resize(static_cast<std::size_t>(std::min<int>(count, static_cast<int>(letters.size()))));
  return letters;
}

void spread(Rng& rng, Eigen::VectorXd& row, const std::vector<int>& support, double mass) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(support.size()));
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const double u = rng.uniform();
    w(k) = 0.05 + u * u;
  }
  w *= mass / w.sum();
  for (Eigen::Index k = 0; k < w.size(); ++k) row(support[static_cast<std::size_t>(k)]) += w(k);
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

void ToyLanguageSpec::validate() const {
  const auto k = static_cast<Eigen::Index>(alphabet_size);
  if (alphabet_size < 2 || alphabet_size > kMaxAlphabet)
    throw Error(Errc::InvalidArgument, "alphabet size must lie in [2, 27]");
  if (bigram_matrix.rows() != k || bigram_matrix.cols() != k || unigram_init.size() != k)
    throw Error(Errc::InvalidArgument, "language '" + id + "' has inconsistent sizes");
  if ((bigram_matrix.array() < 0.0).any() || (unigram_init.array() < 0.0).any())
    throw Error(Errc::InvalidArgument, "language '" + id + "' has negative probabilities");
  for (Eigen::Index i = 0; i < k; ++i)
    if (std::abs(bigram_matrix.row(i).sum() - 1.0) > 1e-9)
      throw Error(Errc::InvalidArgument, "language '" + id + "' bigram row " + std::to_string(i) + " not stochastic");
  if (std::abs(unigram_init.sum() - 1.0) > 1e-9)
    throw Error(Errc::InvalidArgument, "language '" + id + "' initial distribution not stochastic");
}

Eigen::VectorXd ToyLanguageSpec::stationary() const {
  const auto k = static_cast<Eigen::Index>(alphabet_size);
  // Replace one balance equation with the normalization constraint.
  Eigen::MatrixXd a = bigram_matrix.transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd pi = lu.solve(rhs);
  // Two rounds of refinement keep the residual at rounding level.
  for (int it = 0; it < 2; ++it) pi += lu.solve(rhs - a * pi);
  return pi.cwiseMax(0.0) / pi.cwiseMax(0.0).sum();
}

ToyLanguageSpec gen_language(std::uint64_t seed, const std::string& id, int alphabet_size) {
  Rng rng(derive_seed(seed, "language:" + id));
  ToyLanguageSpec spec;
  spec.id = id;
  spec.alphabet_size = alphabet_size;
  const auto k = static_cast<Eigen::Index>(alphabet_size);
  spec.bigram_matrix = Eigen::MatrixXd::Zero(k, k);
  const int letters = alphabet_size - 1;
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(k);
    if (i == 0) {
      spread(rng, row, pick_letters(rng, alphabet_size, std::min(letters, 5 + static_cast<int>(rng.below(4)))), 1.0);
    } else {
      const double p_space = 0.10 + 0.15 * rng.uniform();
      row(0) = p_space;
      spread(rng, row, pick_letters(rng, alphabet_size, std::min(letters, 3 + static_cast<int>(rng.below(4)))),
             1.0 - p_space);
    }
    spec.bigram_matrix.row(i) = row.transpose();
  }
  spec.unigram_init = Eigen::VectorXd::Zero(k);
  spread(rng, spec.unigram_init, pick_letters(rng, alphabet_size, std::min(letters, 6)), 1.0);
  spec.validate();
  return spec;
}

char symbol_char(int symbol) { return symbol == 0 ? ' ' : static_cast<char>('a' + symbol - 1); }

std::string render_labels(const std::vector<int>& labels) {
  std::string s;
  s.reserve(labels.size());
  for (int c : labels) s.push_back(symbol_char(c));
  return s;
}

void DomainSpec::validate() const {
  const auto d = static_cast<Eigen::Index>(feature_dim);
  if (glyph_templates.cols() != d || shift_matrix.rows() != d || shift_matrix.cols() != d || shift_bias.size() != d)
    throw Error(Errc::InvalidArgument, "domain has inconsistent feature dimensions");
  if (noise_sigma < 0.0) throw Error(Errc::InvalidArgument, "noise_sigma must be >= 0");
  if (kind == DomainKind::synthetic &&
      (shift_matrix != Eigen::MatrixXd::Identity(d, d) || !shift_bias.isZero(0.0) || per_lang_shift_scale != 0.0))
    throw Error(Errc::InvalidArgument, "a synthetic domain cannot carry a shift");
}

Eigen::MatrixXd make_glyph_templates(std::uint64_t seed, int alphabet_size, int feature_dim) {
  Rng rng(derive_seed(seed, "glyphs"));
  return gaussian_matrix(rng, alphabet_size, feature_dim);
}

DomainSpec synthetic_domain(const Eigen::MatrixXd& templates, double noise_sigma) {
  DomainSpec d;
  d.kind = DomainKind::synthetic;
  d.feature_dim = static_cast<int>(templates.cols());
  d.glyph_templates = templates;
  d.noise_sigma = noise_sigma;
  d.shift_matrix = Eigen::MatrixXd::Identity(templates.cols(), templates.cols());
  d.shift_bias = Eigen::VectorXd::Zero(templates.cols());
  d.validate();
  return d;
}

DomainSpec real_domain(const Eigen::MatrixXd& templates, std::uint64_t seed, double noise_sigma,
                       double matrix_strength, double bias_strength, double per_lang_shift_scale) {
  Rng rng(derive_seed(seed, "real-shift"));
  const auto dim = templates.cols();
  DomainSpec d;
  d.kind = DomainKind::real;
  d.feature_dim = static_cast<int>(dim);
  d.glyph_templates = templates;
  d.noise_sigma = noise_sigma;
  d.shift_matrix = Eigen::MatrixXd::Identity(dim, dim) +
                   (matrix_strength / std::sqrt(static_cast<double>(dim))) * gaussian_matrix(rng, dim, dim);
  d.shift_bias = bias_strength * gaussian_vector(rng, dim);
  d.per_lang_shift_scale = per_lang_shift_scale;
  d.shift_seed = derive_seed(seed, "real-shift-per-language");
  d.validate();
  return d;
}

LanguageShift language_shift(const DomainSpec& domain, const std::string& language_id) {
  const auto dim = static_cast<Eigen::Index>(domain.feature_dim);
  LanguageShift s{Eigen::MatrixXd::Zero(dim, dim), Eigen::VectorXd::Zero(dim)};
  if (domain.kind == DomainKind::synthetic || domain.per_lang_shift_scale == 0.0) return s;
  Rng rng(derive_seed(domain.shift_seed, language_id));
  const Eigen::MatrixXd g = gaussian_matrix(rng, dim, dim);
  const Eigen::VectorXd h = gaussian_vector(rng, dim);
  const double matrix_norm = (domain.shift_matrix - Eigen::MatrixXd::Identity(dim, dim)).norm();
  const double bias_norm = domain.shift_bias.norm();
  s.matrix = (domain.per_lang_shift_scale * matrix_norm / g.norm()) * g;
  s.bias = (domain.per_lang_shift_scale * bias_norm / h.norm()) * h;
  return s;
}

Dataset sample_dataset(const ToyLanguageSpec& lang, const DomainSpec& domain, std::size_t n, std::size_t seq_len,
                       std::uint64_t seed) {
  if (n == 0 || seq_len == 0) throw Error(Errc::InvalidArgument, "dataset size and sequence length must be >= 1");
  lang.validate();
  domain.validate();
  if (domain.glyph_templates.rows() != lang.alphabet_size)
    throw Error(Errc::InvalidArgument, "glyph templates do not match the alphabet");

  const LanguageShift extra = language_shift(domain, lang.id);
  const Eigen::MatrixXd transform = domain.shift_matrix + extra.matrix;
  const Eigen::VectorXd offset = domain.shift_bias + extra.bias;
  // Row c: the noise-free frame of glyph c.
  const Eigen::MatrixXd clean = (domain.glyph_templates * transform.transpose()).rowwise() + offset.transpose();

  Rng rng(seed);
  Dataset data;
  data.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    Sample sample;
    sample.labels.resize(seq_len);
    int c = rng.categorical(lang.unigram_init, 1.0);
    for (std::size_t t = 0; t < seq_len; ++t) {
      if (t > 0) c = rng.categorical(lang.bigram_matrix.row(c), 1.0);
      sample.labels[t] = c;
    }
    sample.features.resize(static_cast<Eigen::Index>(seq_len), domain.feature_dim);
    for (std::size_t t = 0; t < seq_len; ++t) {
      auto frame = sample.features.row(static_cast<Eigen::Index>(t));
      frame = clean.row(sample.labels[t]);
      if (domain.noise_sigma > 0.0)
        for (Eigen::Index j = 0; j < frame.size(); ++j) frame(j) += domain.noise_sigma * rng.normal();
    }
    sample.text = render_labels(sample.labels);
    data.push_back(std::move(sample));
  }
  return data;
}

}  // namespace tvmerge::toybench
