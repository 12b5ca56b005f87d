#pragma once

#include <stdexcept>
#include <string>

namespace pcsel {

// Every failure the library can raise, one code per distinct condition so
// callers (and tests) can react to the condition rather than parse a message.
enum class ErrorCode {
  // point cloud / KITTI file parsing
  length_not_multiple_of_16,
  non_finite_value,
  malformed_line,
  field_out_of_range,
  missing_key,
  malformed_matrix,
  degenerate_dims,
  // degradation operators
  non_positive_edge,
  fraction_out_of_range,
  negative_sigma,
  empty_reference,
  // feature extraction
  empty_corpus,
  empty_stream,
  too_few_points,
  // registry / selector
  duplicate_id,
  unknown_enum,
  unknown_class,
  no_candidate,
  config_out_of_range,
  // evaluation
  mixed_classes,
  frame_id_mismatch,
  // wire protocol
  bad_magic,
  unsupported_version,
  truncated,
  unknown_type,
  trailing_bytes,
  // transport / service
  timeout,
  protocol_violation,
  io_failure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::length_not_multiple_of_16: return "LengthNotMultipleOf16";
    case ErrorCode::non_finite_value: return "NonFiniteValue";
    case ErrorCode::malformed_line: return "MalformedLine";
    case ErrorCode::field_out_of_range: return "FieldOutOfRange";
    case ErrorCode::missing_key: return "MissingKey";
    case ErrorCode::malformed_matrix: return "MalformedMatrix";
    case ErrorCode::degenerate_dims: return "DegenerateDims";
    case ErrorCode::non_positive_edge: return "NonPositiveEdge";
    case ErrorCode::fraction_out_of_range: return "FractionOutOfRange";
    case ErrorCode::negative_sigma: return "NegativeSigma";
    case ErrorCode::empty_reference: return "EmptyReference";
    case ErrorCode::empty_corpus: return "EmptyCorpus";
    case ErrorCode::empty_stream: return "EmptyStream";
    case ErrorCode::too_few_points: return "TooFewPoints";
    case ErrorCode::duplicate_id: return "DuplicateId";
    case ErrorCode::unknown_enum: return "UnknownEnum";
    case ErrorCode::unknown_class: return "UnknownClass";
    case ErrorCode::no_candidate: return "NoCandidate";
    case ErrorCode::config_out_of_range: return "ConfigOutOfRange";
    case ErrorCode::mixed_classes: return "MixedClasses";
    case ErrorCode::frame_id_mismatch: return "FrameIdMismatch";
    case ErrorCode::bad_magic: return "BadMagic";
    case ErrorCode::unsupported_version: return "UnsupportedVersion";
    case ErrorCode::truncated: return "Truncated";
    case ErrorCode::unknown_type: return "UnknownType";
    case ErrorCode::trailing_bytes: return "TrailingBytes";
    case ErrorCode::timeout: return "Timeout";
    case ErrorCode::protocol_violation: return "ProtocolViolation";
    case ErrorCode::io_failure: return "IoFailure";
  }
  return "UnknownError";
}

}  // namespace pcsel
