// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace tvmerge::toybench {

/// Mixes a base seed with a string tag into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) noexcept;

/// Seeded generator whose output is identical on every platform: only the
/// raw mt19937_64 stream (fully specified by the standard) is consumed, and
/// distributions are implemented here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal (Box-Muller).
  double normal();
  /// Index drawn from a discrete distribution given by non-negative weights.
  template <typename Weights>
  int categorical(const Weights& w, double total) {
    double u = uniform() * total;
    const int n = static_cast<int>(w.size());
    for (int i = 0; i < n; ++i) {
      u -= w[i];
      if (u < 0.0) return i;
    }
    for (int i = n - 1; i >= 0; --i)
      if (w[i] > 0.0) return i;
    return n - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tvmerge::toybench
