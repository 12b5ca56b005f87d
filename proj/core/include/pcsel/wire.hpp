#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pcsel/degrade.hpp"
#include "pcsel/features.hpp"
#include "pcsel/registry.hpp"
#include "pcsel/selector.hpp"

// The selection wire protocol.  Frames are
//
//   magic 0x50 0x43 | version 0x01 | type byte | payload length (u32 BE) | payload
//
// with type 0x01 SelectionRequest, 0x02 FeatureReport, 0x03 ModelAssignment,
// 0x04 ErrorReply, 0x05 Ack.  Payload primitives, always big-endian:
// strings are u16 length + UTF-8 bytes, byte blobs are u32 length + bytes,
// lists are u32 count + elements, reals are IEEE-754 binary64, integers are
// u64 unless stated, optionals are one presence byte then the value, enums
// are one byte, and fields appear in declared order.  encode/decode is a
// bit-exact identity in both directions.

namespace pcsel::wire {

struct SelectionRequest {
  std::vector<std::string> target_classes;
  std::optional<double> latency_budget_s;
  std::vector<std::vector<std::uint8_t>> sample_frames;  // velodyne-bin blobs
  std::optional<double> declared_noise_sigma;

  bool operator==(const SelectionRequest&) const = default;
};

struct FeatureReport {
  DataFeatures features;

  bool operator==(const FeatureReport&) const = default;
};

struct ModelAssignment {
  std::string model_id;
  MethodFeatures method;
  DegradationSpec train;
  std::vector<BranchStep> branch_trace;
  // Optional opaque weight payload; the assignment normally carries only
  // the descriptor.
  std::optional<std::vector<std::uint8_t>> weights;

  bool operator==(const ModelAssignment&) const = default;
};

struct ErrorReply {
  // 1: no candidate model; 2: malformed request or frames
  std::uint32_t code = 0;
  std::string message;

  bool operator==(const ErrorReply&) const = default;
};

struct Ack {
  bool operator==(const Ack&) const = default;
};

using WireMessage =
    std::variant<SelectionRequest, FeatureReport, ModelAssignment, ErrorReply,
                 Ack>;

std::vector<std::uint8_t> encode(const WireMessage& msg);

// Decodes exactly one complete frame.  Throws Truncated when the buffer
// stops short anywhere (header, declared payload length, or any field),
// BadMagic / UnsupportedVersion / UnknownType for a bad header, and
// TrailingBytes when bytes remain after the message.
WireMessage decode(const std::vector<std::uint8_t>& bytes);

}  // namespace pcsel::wire
