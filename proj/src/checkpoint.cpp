// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tvmerge/error.hpp"

namespace tvmerge {

namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'V', 'C', '1'};

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

double narrow_to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

Dtype parse_dtype(const std::string& s) {
  if (s == "f32") return Dtype::f32;
  if (s == "f64") return Dtype::f64;
  throw Error(Errc::DtypeUnsupported, "dtype '" + s + "'");
}

std::string key_list(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += ", ";
    out += "'" + n + "'";
  }
  return out;
}

}  // namespace

std::string_view dtype_name(Dtype dtype) noexcept { return dtype == Dtype::f32 ? "f32" : "f64"; }

std::size_t dtype_size(Dtype dtype) noexcept { return dtype == Dtype::f32 ? 4 : 8; }

std::size_t shape_numel(std::span<const std::size_t> shape) noexcept {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void ParameterSet::set(std::string name, Tensor tensor) {
  if (name.empty()) throw Error(Errc::InvalidTensor, "tensor name must be non-empty");
  if (!tensor.consistent()) {
    throw Error(Errc::InvalidTensor, "tensor '" + name + "' has shape " + shape_string(tensor.shape) +
                                         " but " + std::to_string(tensor.numel()) + " elements");
  }
  if (dtype_ == Dtype::f32) tensor.data = tensor.data.unaryExpr(&narrow_to_f32);
  entries_.insert_or_assign(std::move(name), std::move(tensor));
}

const Tensor& ParameterSet::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error(Errc::KeySetMismatch, "no tensor named '" + std::string(name) + "'");
  return it->second;
}

std::string ParameterSet::meta(std::string_view key, std::string_view fallback) const {
  auto it = metadata_.find(key);
  return it == metadata_.end() ? std::string(fallback) : it->second;
}

std::size_t ParameterSet::num_elements() const noexcept {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

bool bitwise_equal(const ParameterSet& a, const ParameterSet& b) {
  return a.metadata() == b.metadata() && tensors_bitwise_equal(a, b);
}

bool tensors_bitwise_equal(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  // An empty set carries no dtype on disk.
  if (!a.empty() && a.dtype() != b.dtype()) return false;
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  for (; ia != a.entries().end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.shape != ib->second.shape) return false;
    const auto n = ia->second.numel();
    if (n != ib->second.numel()) return false;
    if (n && std::memcmp(ia->second.data.data(), ib->second.data.data(), n * sizeof(double)) != 0) return false;
  }
  return true;
}

std::string checkpoint_id(const ParameterSet& p) {
  if (auto id = p.meta("id"); !id.empty()) return id;
  std::string out;
  for (const char* key : {"role", "lang", "domain"}) {
    auto v = p.meta(key);
    if (v.empty()) continue;
    if (!out.empty()) out += "/";
    out += v;
  }
  return out.empty() ? "anonymous" : out;
}

void check_compatible(const ParameterSet& a, const ParameterSet& b, bool require_same_dtype) {
  std::vector<std::string> missing, extra;
  for (const auto& [name, _] : a.entries())
    if (!b.contains(name)) missing.push_back(name);
  for (const auto& [name, _] : b.entries())
    if (!a.contains(name)) extra.push_back(name);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "tensor name sets differ";
    if (!missing.empty()) msg += "; missing from second: " + key_list(missing);
    if (!extra.empty()) msg += "; extra in second: " + key_list(extra);
    throw Error(Errc::KeySetMismatch, msg);
  }
  for (const auto& [name, ta] : a.entries()) {
    const auto& tb = b.at(name);
    if (ta.shape != tb.shape) {
      throw Error(Errc::ShapeMismatch, "tensor '" + name + "' has shape " + shape_string(ta.shape) + " vs " +
                                           shape_string(tb.shape));
    }
  }
  if (require_same_dtype && !a.empty() && a.dtype() != b.dtype()) {
    throw Error(Errc::DtypeMismatch,
                std::string(dtype_name(a.dtype())) + " vs " + std::string(dtype_name(b.dtype())));
  }
}

std::vector<std::uint8_t> serialize_checkpoint(const ParameterSet& p) {
  const auto esize = dtype_size(p.dtype());
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : p.entries()) {
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["dtype"] = dtype_name(p.dtype());
    entry["shape"] = t.shape;
    entry["offset"] = offset;
    tensors.push_back(std::move(entry));
    offset += t.numel() * esize;
  }
  nlohmann::ordered_json header;
  header["tensors"] = std::move(tensors);
  header["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : p.metadata()) header["metadata"][k] = v;

  const std::string text = header.dump();
  if (text.size() > std::numeric_limits<std::uint32_t>::max())
    throw Error(Errc::IoFailure, "header too large");

  std::vector<std::uint8_t> out;
  out.reserve(8 + text.size() + offset);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [_, t] : p.entries()) {
    for (Eigen::Index i = 0; i < t.data.size(); ++i) {
      if (p.dtype() == Dtype::f32)
        put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(t.data(i))));
      else
        put_u64le(out, std::bit_cast<std::uint64_t>(t.data(i)));
    }
  }
  return out;
}

ParameterSet parse_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(Errc::MagicMismatch, "missing TVC1 magic");
  if (bytes.size() < 8) throw Error(Errc::HeaderCorrupt, "truncated header length");
  const std::uint64_t header_len = get_u32le(bytes.data() + 4);
  if (8 + header_len > bytes.size()) throw Error(Errc::HeaderCorrupt, "header length exceeds file size");

  const auto* header_begin = reinterpret_cast<const char*>(bytes.data() + 8);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_begin, header_begin + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::HeaderCorrupt, std::string("unparsable JSON header: ") + e.what());
  }
  const auto payload = bytes.subspan(8 + header_len);

  try {
    if (!header.is_object() || !header.contains("tensors") || !header["tensors"].is_array())
      throw Error(Errc::HeaderCorrupt, "header lacks a 'tensors' array");

    struct Entry {
      std::string name;
      Dtype dtype;
      Shape shape;
      std::uint64_t offset;
    };
    std::vector<Entry> parsed;
    for (const auto& t : header["tensors"]) {
      if (!t.is_object()) throw Error(Errc::HeaderCorrupt, "tensor entry is not an object");
      Entry e;
      e.name = t.at("name").get<std::string>();
      e.dtype = parse_dtype(t.at("dtype").get<std::string>());
      for (const auto& extent : t.at("shape")) {
        if (!extent.is_number_unsigned()) throw Error(Errc::HeaderCorrupt, "shape extent is not an unsigned integer");
        e.shape.push_back(extent.get<std::size_t>());
      }
      if (!t.at("offset").is_number_unsigned()) throw Error(Errc::HeaderCorrupt, "offset is not an unsigned integer");
      e.offset = t.at("offset").get<std::uint64_t>();
      if (e.name.empty()) throw Error(Errc::HeaderCorrupt, "empty tensor name");
      if (!parsed.empty() && !(parsed.back().name < e.name))
        throw Error(Errc::HeaderCorrupt, "tensor names not strictly sorted at '" + e.name + "'");
      if (!parsed.empty() && parsed.back().dtype != e.dtype)
        throw Error(Errc::HeaderCorrupt, "mixed dtypes in one checkpoint");
      parsed.push_back(std::move(e));
    }

    ParameterSet out(parsed.empty() ? Dtype::f64 : parsed.front().dtype);
    for (const auto& e : parsed) {
      const std::size_t esize = dtype_size(e.dtype);
      const std::size_t n = shape_numel(e.shape);
      if (esize && n > payload.size() / esize)
        throw Error(Errc::HeaderCorrupt, "tensor '" + e.name + "' larger than payload");
      const std::uint64_t nbytes = n * esize;
      if (e.offset > payload.size() || nbytes > payload.size() - e.offset)
        throw Error(Errc::HeaderCorrupt, "tensor '" + e.name + "' offset out of bounds");
      Tensor t(e.shape, Tensor::Vector(static_cast<Eigen::Index>(n)));
      const std::uint8_t* src = payload.data() + e.offset;
      for (std::size_t i = 0; i < n; ++i) {
        t.data(static_cast<Eigen::Index>(i)) =
            e.dtype == Dtype::f32 ? static_cast<double>(std::bit_cast<float>(get_u32le(src + 4 * i)))
                                  : std::bit_cast<double>(get_u64le(src + 8 * i));
      }
      out.set(e.name, std::move(t));
    }

    if (header.contains("metadata")) {
      const auto& md = header["metadata"];
      if (!md.is_object()) throw Error(Errc::HeaderCorrupt, "'metadata' is not an object");
      for (const auto& [k, v] : md.items()) out.metadata()[k] = v.get<std::string>();
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::HeaderCorrupt, std::string("malformed header: ") + e.what());
  }
}

ParameterSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::IoFailure, "read error on '" + path.string() + "'");
  return parse_checkpoint(bytes);
}

void save_checkpoint(const ParameterSet& p, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(p);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
}

}  // namespace tvmerge
