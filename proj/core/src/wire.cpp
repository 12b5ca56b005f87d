#include "pcsel/wire.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "pcsel/errors.hpp"

namespace pcsel::wire {
namespace {

constexpr std::uint8_t kMagic0 = 0x50;
constexpr std::uint8_t kMagic1 = 0x43;
constexpr std::uint8_t kVersion = 0x01;

constexpr std::uint8_t kTypeSelectionRequest = 0x01;
constexpr std::uint8_t kTypeFeatureReport = 0x02;
constexpr std::uint8_t kTypeModelAssignment = 0x03;
constexpr std::uint8_t kTypeErrorReply = 0x04;
constexpr std::uint8_t kTypeAck = 0x05;

// --- writing ---------------------------------------------------------------

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) {
  out.push_back(v);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::protocol_violation,
                "string field exceeds 65535 bytes");
  }
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_blob(std::vector<std::uint8_t>& out,
              const std::vector<std::uint8_t>& b) {
  if (b.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::protocol_violation, "blob exceeds u32 length");
  }
  put_u32(out, static_cast<std::uint32_t>(b.size()));
  out.insert(out.end(), b.begin(), b.end());
}

template <typename T, typename Fn>
void put_list(std::vector<std::uint8_t>& out, const std::vector<T>& items,
              Fn&& put_item) {
  if (items.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::protocol_violation, "list exceeds u32 count");
  }
  put_u32(out, static_cast<std::uint32_t>(items.size()));
  for (const T& item : items) put_item(out, item);
}

template <typename T, typename Fn>
void put_optional(std::vector<std::uint8_t>& out, const std::optional<T>& v,
                  Fn&& put_value) {
  put_u8(out, v.has_value() ? 1 : 0);
  if (v.has_value()) put_value(out, *v);
}

void put_method_features(std::vector<std::uint8_t>& out,
                         const MethodFeatures& m) {
  put_string(out, m.method_id);
  put_u8(out, static_cast<std::uint8_t>(m.num_stages));
  put_u8(out, static_cast<std::uint8_t>(m.stage1_unit));
  put_u8(out, static_cast<std::uint8_t>(m.stage2_unit));
  put_u8(out, static_cast<std::uint8_t>(m.box_strategy));
}

void put_degradation(std::vector<std::uint8_t>& out,
                     const DegradationSpec& d) {
  put_u8(out, static_cast<std::uint8_t>(d.kind));
  put_f64(out, d.param);
  put_u64(out, d.seed);
}

void put_branch_step(std::vector<std::uint8_t>& out, const BranchStep& s) {
  put_string(out, s.branch);
  put_string(out, s.option);
  put_string(out, s.reason);
}

void put_payload(std::vector<std::uint8_t>& out, const SelectionRequest& m) {
  put_list(out, m.target_classes,
           [](auto& o, const std::string& s) { put_string(o, s); });
  put_optional(out, m.latency_budget_s,
               [](auto& o, double v) { put_f64(o, v); });
  put_list(out, m.sample_frames,
           [](auto& o, const std::vector<std::uint8_t>& b) { put_blob(o, b); });
  put_optional(out, m.declared_noise_sigma,
               [](auto& o, double v) { put_f64(o, v); });
}

void put_payload(std::vector<std::uint8_t>& out, const FeatureReport& m) {
  put_f64(out, m.features.normalized_point_count);
  put_optional(out, m.features.noise_sigma,
               [](auto& o, double v) { put_f64(o, v); });
  put_u64(out, m.features.frames_analyzed);
}

void put_payload(std::vector<std::uint8_t>& out, const ModelAssignment& m) {
  put_string(out, m.model_id);
  put_method_features(out, m.method);
  put_degradation(out, m.train);
  put_list(out, m.branch_trace,
           [](auto& o, const BranchStep& s) { put_branch_step(o, s); });
  put_optional(out, m.weights, [](auto& o, const std::vector<std::uint8_t>& b) {
    put_blob(o, b);
  });
}

void put_payload(std::vector<std::uint8_t>& out, const ErrorReply& m) {
  put_u32(out, m.code);
  put_string(out, m.message);
}

void put_payload(std::vector<std::uint8_t>&, const Ack&) {}

std::uint8_t type_byte(const WireMessage& msg) {
  switch (msg.index()) {
    case 0: return kTypeSelectionRequest;
    case 1: return kTypeFeatureReport;
    case 2: return kTypeModelAssignment;
    case 3: return kTypeErrorReply;
    default: return kTypeAck;
  }
}

// --- reading ---------------------------------------------------------------

// Cursor over one payload; every read is bounds-checked and overruns
// surface as Truncated.
class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size)
      : data_(data), size_(size) {}

  std::size_t remaining() const { return size_ - pos_; }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(
        (static_cast<std::uint16_t>(data_[pos_]) << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + i];
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_ + i];
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string string() {
    std::uint16_t n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  std::vector<std::uint8_t> blob() {
    std::uint32_t n = u32();
    need(n);
    std::vector<std::uint8_t> b(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return b;
  }

  template <typename T, typename Fn>
  std::vector<T> list(Fn&& read_item) {
    std::uint32_t n = u32();
    std::vector<T> items;
    items.reserve(std::min<std::uint32_t>(n, 1024));
    for (std::uint32_t i = 0; i < n; ++i) items.push_back(read_item(*this));
    return items;
  }

  template <typename T, typename Fn>
  std::optional<T> optional(Fn&& read_value) {
    std::uint8_t present = u8();
    if (present == 0) return std::nullopt;
    if (present != 1) {
      throw Error(ErrorCode::protocol_violation,
                  "optional presence byte must be 0 or 1");
    }
    return read_value(*this);
  }

 private:
  void need(std::size_t n) const {
    if (size_ - pos_ < n) {
      throw Error(ErrorCode::truncated, "payload ends mid-field");
    }
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

template <typename E>
E read_enum_byte(Reader& r, std::uint8_t max_value, const char* what) {
  std::uint8_t v = r.u8();
  if (v > max_value) {
    throw Error(ErrorCode::unknown_enum,
                std::string(what) + " byte out of range");
  }
  return static_cast<E>(v);
}

MethodFeatures read_method_features(Reader& r) {
  MethodFeatures m;
  m.method_id = r.string();
  m.num_stages = r.u8();
  m.stage1_unit = read_enum_byte<StageUnit>(r, 3, "stage unit");
  m.stage2_unit = read_enum_byte<StageUnit>(r, 3, "stage unit");
  m.box_strategy = read_enum_byte<BoxStrategy>(r, 1, "box strategy");
  return m;
}

DegradationSpec read_degradation(Reader& r) {
  DegradationSpec d;
  d.kind = read_enum_byte<DegradationKind>(r, 4, "degradation kind");
  d.param = r.f64();
  d.seed = r.u64();
  return d;
}

BranchStep read_branch_step(Reader& r) {
  BranchStep s;
  s.branch = r.string();
  s.option = r.string();
  s.reason = r.string();
  return s;
}

WireMessage read_payload(std::uint8_t type, Reader& r) {
  switch (type) {
    case kTypeSelectionRequest: {
      SelectionRequest m;
      m.target_classes = r.list<std::string>(
          [](Reader& rr) { return rr.string(); });
      m.latency_budget_s =
          r.optional<double>([](Reader& rr) { return rr.f64(); });
      m.sample_frames = r.list<std::vector<std::uint8_t>>(
          [](Reader& rr) { return rr.blob(); });
      m.declared_noise_sigma =
          r.optional<double>([](Reader& rr) { return rr.f64(); });
      return m;
    }
    case kTypeFeatureReport: {
      FeatureReport m;
      m.features.normalized_point_count = r.f64();
      m.features.noise_sigma =
          r.optional<double>([](Reader& rr) { return rr.f64(); });
      m.features.frames_analyzed = r.u64();
      return m;
    }
    case kTypeModelAssignment: {
      ModelAssignment m;
      m.model_id = r.string();
      m.method = read_method_features(r);
      m.train = read_degradation(r);
      m.branch_trace =
          r.list<BranchStep>([](Reader& rr) { return read_branch_step(rr); });
      m.weights = r.optional<std::vector<std::uint8_t>>(
          [](Reader& rr) { return rr.blob(); });
      return m;
    }
    case kTypeErrorReply: {
      ErrorReply m;
      m.code = r.u32();
      m.message = r.string();
      return m;
    }
    default: {  // kTypeAck; the type byte was validated by the caller
      return Ack{};
    }
  }
}

}  // namespace

std::vector<std::uint8_t> encode(const WireMessage& msg) {
  std::vector<std::uint8_t> payload;
  std::visit([&payload](const auto& m) { put_payload(payload, m); }, msg);
  if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::protocol_violation, "payload exceeds u32 length");
  }

  std::vector<std::uint8_t> frame;
  frame.reserve(8 + payload.size());
  put_u8(frame, kMagic0);
  put_u8(frame, kMagic1);
  put_u8(frame, kVersion);
  put_u8(frame, type_byte(msg));
  put_u32(frame, static_cast<std::uint32_t>(payload.size()));
  frame.insert(frame.end(), payload.begin(), payload.end());
  return frame;
}

WireMessage decode(const std::vector<std::uint8_t>& bytes) {
  // An incomplete header cannot be validated at all, so it is Truncated
  // regardless of content.
  if (bytes.size() < 8) {
    throw Error(ErrorCode::truncated, "frame shorter than the 8-byte header");
  }
  if (bytes[0] != kMagic0 || bytes[1] != kMagic1) {
    throw Error(ErrorCode::bad_magic, "frame does not start with 0x50 0x43");
  }
  if (bytes[2] != kVersion) {
    throw Error(ErrorCode::unsupported_version,
                "unsupported protocol version " + std::to_string(bytes[2]));
  }
  std::uint8_t type = bytes[3];
  if (type < kTypeSelectionRequest || type > kTypeAck) {
    throw Error(ErrorCode::unknown_type,
                "unknown message type " + std::to_string(type));
  }
  std::uint32_t declared = 0;
  for (int i = 0; i < 4; ++i) declared = (declared << 8) | bytes[4 + i];

  std::size_t actual = bytes.size() - 8;
  if (actual < declared) {
    throw Error(ErrorCode::truncated, "payload shorter than declared length");
  }
  if (actual > declared) {
    throw Error(ErrorCode::trailing_bytes,
                "bytes remain after the declared payload");
  }

  Reader r(bytes.data() + 8, declared);
  WireMessage msg = read_payload(type, r);
  if (r.remaining() != 0) {
    throw Error(ErrorCode::trailing_bytes,
                "payload bytes remain after the message fields");
  }
  return msg;
}

}  // namespace pcsel::wire
