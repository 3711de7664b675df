// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tvmerge {

enum class Errc {
  IoFailure,
  MagicMismatch,
  HeaderCorrupt,
  DtypeUnsupported,
  InvalidTensor,
  KeySetMismatch,
  ShapeMismatch,
  DtypeMismatch,
  AlphaOutOfRange,
  InvalidBeta,
  SourceSetMismatch,
  MissingSimilarity,
  InvalidPlan,
  InvalidUtf8,
  EmptyCorpus,
  OrderMismatch,
  DegenerateCorpus,
  LengthMismatch,
  EmptyReferenceCorpus,
  EmptyHeldout,
  InvalidGrid,
  EvaluatorFailure,
  DivergedLoss,
  InvalidArgument,
  ConfigInvalid,
};

std::string_view errc_name(Errc code) noexcept;

/// Library-wide exception. what() is "<ErrcName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace tvmerge
