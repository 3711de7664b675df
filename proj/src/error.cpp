// Copyright 2026 The tvmerge Authors
// SPDX-License-Identifier: Apache-2.0

#include "tvmerge/error.hpp"

namespace tvmerge {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::IoFailure: return "IoFailure";
    case Errc::MagicMismatch: return "MagicMismatch";
    case Errc::HeaderCorrupt: return "HeaderCorrupt";
    case Errc::DtypeUnsupported: return "DtypeUnsupported";
    case Errc::InvalidTensor: return "InvalidTensor";
    case Errc::KeySetMismatch: return "KeySetMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::DtypeMismatch: return "DtypeMismatch";
    case Errc::AlphaOutOfRange: return "AlphaOutOfRange";
    case Errc::InvalidBeta: return "InvalidBeta";
    case Errc::SourceSetMismatch: return "SourceSetMismatch";
    case Errc::MissingSimilarity: return "MissingSimilarity";
    case Errc::InvalidPlan: return "InvalidPlan";
    case Errc::InvalidUtf8: return "InvalidUtf8";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::OrderMismatch: return "OrderMismatch";
    case Errc::DegenerateCorpus: return "DegenerateCorpus";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyReferenceCorpus: return "EmptyReferenceCorpus";
    case Errc::EmptyHeldout: return "EmptyHeldout";
    case Errc::InvalidGrid: return "InvalidGrid";
    case Errc::EvaluatorFailure: return "EvaluatorFailure";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace tvmerge
