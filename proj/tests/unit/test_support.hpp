// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvmerge/checkpoint.hpp"
#include "tvmerge/error.hpp"
#include "tvmerge/toybench/random.hpp"

namespace tvmerge::testing {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tvmerge_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random checkpoint with a fixed layout: "a" [4,4], "b" [16], "c" [2,3,2].
inline ParameterSet random_params(toybench::Rng& rng, Dtype dtype = Dtype::f64, double scale = 1.0) {
  ParameterSet p(dtype);
  for (const auto& [name, shape] : std::vector<std::pair<std::string, Shape>>{
           {"a", {4, 4}}, {"b", {16}}, {"c", {2, 3, 2}}}) {
    Tensor t = Tensor::zeros(shape);
    for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data(i) = scale * rng.normal();
    p.set(name, std::move(t));
  }
  return p;
}

/// Max over elements of |x - y| / max(1, |y|).
inline double max_rel_diff(const ParameterSet& x, const ParameterSet& y) {
  double worst = 0.0;
  for (const auto& [name, t] : x.entries()) {
    const auto& u = y.at(name);
    for (Eigen::Index i = 0; i < t.data.size(); ++i)
      worst = std::max(worst, std::abs(t.data(i) - u.data(i)) / std::max(1.0, std::abs(u.data(i))));
  }
  return worst;
}

template <typename F>
Errc error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected a tvmerge::Error");
}

}  // namespace tvmerge::testing
