// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvmerge {

/// On-disk element type. In memory every tensor is held in f64.
enum class Dtype { f32, f64 };

std::string_view dtype_name(Dtype dtype) noexcept;
std::size_t dtype_size(Dtype dtype) noexcept;

using Shape = std::vector<std::size_t>;

/// Product of extents; 1 for rank-0.
std::size_t shape_numel(std::span<const std::size_t> shape) noexcept;
std::string shape_string(std::span<const std::size_t> shape);

/// Dense row-major tensor. `data` is flat; `shape` gives its interpretation.
template <typename Scalar>
struct BasicTensor {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Shape shape;
  Vector data;

  BasicTensor() : shape{0}, data() {}
  BasicTensor(Shape s, Vector d) : shape(std::move(s)), data(std::move(d)) {}

  static BasicTensor zeros(Shape s) {
    const auto n = static_cast<Eigen::Index>(shape_numel(s));
    return BasicTensor(std::move(s), Vector::Zero(n));
  }

  static BasicTensor from_values(Shape s, std::initializer_list<Scalar> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (Scalar x : values) v(i++) = x;
    return BasicTensor(std::move(s), std::move(v));
  }

  std::size_t numel() const noexcept { return static_cast<std::size_t>(data.size()); }
  bool consistent() const noexcept { return shape_numel(shape) == numel(); }
};

using Tensor = BasicTensor<double>;

/// One model checkpoint: tensors keyed by name (kept in lexicographic order)
/// plus free-form string metadata. Conventional metadata keys are "role",
/// "lang" and "domain"; none of them is interpreted by the arithmetic.
///
/// Values of an f32 set are rounded to float precision on insertion, so the
/// in-memory contents always equal what a save/load cycle produces.
class ParameterSet {
 public:
  using Entries = std::map<std::string, Tensor, std::less<>>;
  using Metadata = std::map<std::string, std::string, std::less<>>;

  explicit ParameterSet(Dtype dtype = Dtype::f64) : dtype_(dtype) {}

  /// Adds or replaces a tensor. Throws InvalidTensor on an empty name or a
  /// shape/data length disagreement.
  void set(std::string name, Tensor tensor);

  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

  const Entries& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  Dtype dtype() const noexcept { return dtype_; }

  const Metadata& metadata() const noexcept { return metadata_; }
  Metadata& metadata() noexcept { return metadata_; }
  std::string meta(std::string_view key, std::string_view fallback = {}) const;

  /// Total element count over all tensors.
  std::size_t num_elements() const noexcept;

 private:
  Dtype dtype_;
  Entries entries_;
  Metadata metadata_;
};

/// Same dtype, metadata, names and shapes, and bit-identical element data.
bool bitwise_equal(const ParameterSet& a, const ParameterSet& b);
/// As bitwise_equal, but metadata is not compared.
bool tensors_bitwise_equal(const ParameterSet& a, const ParameterSet& b);

/// Short human-readable identity used for provenance records: the "id"
/// metadata entry if present, otherwise role/lang/domain joined by '/'.
std::string checkpoint_id(const ParameterSet& p);

/// Throws KeySetMismatch, ShapeMismatch or DtypeMismatch unless `a` and `b`
/// have the same tensor names, shapes and (optionally) dtype.
void check_compatible(const ParameterSet& a, const ParameterSet& b, bool require_same_dtype = true);

// Checkpoint file format: "TVC1" | u32le header length | JSON header | payload.
std::vector<std::uint8_t> serialize_checkpoint(const ParameterSet& p);
ParameterSet parse_checkpoint(std::span<const std::uint8_t> bytes);

ParameterSet load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const ParameterSet& p, const std::filesystem::path& path);

}  // namespace tvmerge
