#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fmparts {

enum class ErrorCode {
  // tensorio
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  NonFiniteValue,
  DuplicateLayer,
  InvalidStack,
  IoFailure,
  UnsupportedFormat,
  CorruptHeader,
  InvalidManifest,
  // maskops
  EmptyGrid,
  ThresholdOutOfRange,
  UnknownLayer,
  EmptyLayerSet,
  DimensionMismatch,
  // partdetect / modelselect
  EmptyRegion,
  TooFewCandidates,
  DegenerateClustering,
  // posecrop
  DegenerateRegion,
  WrongPartCount,
  EmptyMask,
  // evalkit
  MissingGroundTruth,
  InvisiblePart,
  DegenerateBox,
  NoAnnotations,
  // pipeline
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code so
/// batch drivers can record it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fmparts
