#include "fmparts/error.hpp"

namespace fmparts {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateLayer: return "DuplicateLayer";
    case ErrorCode::InvalidStack: return "InvalidStack";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorCode::UnknownLayer: return "UnknownLayer";
    case ErrorCode::EmptyLayerSet: return "EmptyLayerSet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::TooFewCandidates: return "TooFewCandidates";
    case ErrorCode::DegenerateClustering: return "DegenerateClustering";
    case ErrorCode::DegenerateRegion: return "DegenerateRegion";
    case ErrorCode::WrongPartCount: return "WrongPartCount";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::InvisiblePart: return "InvisiblePart";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::NoAnnotations: return "NoAnnotations";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace fmparts
