#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fleetloop/condition.hpp"
#include "fleetloop/predictor.hpp"
#include "fleetloop/watchdog.hpp"

namespace fleetloop {

inline constexpr std::int64_t kProtocolVersion = 1;
inline constexpr std::size_t kMaxPayloadBytes = 1 << 20;  // 1 MiB
inline constexpr std::size_t kFrameHeaderBytes = 4;

/// Request for the parameter set matching the vehicle's external conditions.
struct ParamRequest {
  std::string vehicle_id;
  ConditionKey condition;

  bool operator==(const ParamRequest&) const = default;
};

/// Reply to a parameter request. Empty params is the NOT_FOUND marker: the
/// vehicle keeps its basic or last-known set instead of blocking.
struct ParamReply {
  std::optional<ParameterSet> params;

  bool operator==(const ParamReply&) const = default;
};

using Message = std::variant<MeasurementPackage, ParamRequest, ParamReply>;

/// Frame layout: 4-byte big-endian payload length, then a UTF-8 JSON object
/// with alphabetically ordered keys.  Deterministic: equal messages encode to
/// equal bytes.
std::vector<std::uint8_t> encode(const Message& msg);

enum class DecodeStatus : std::uint8_t {
  kOk,
  kIncomplete,   // need more bytes
  kOversized,    // declared length above kMaxPayloadBytes
  kUnsupported,  // unknown message type or protocol version
  kMalformed     // payload not valid JSON or missing/ill-typed fields
};

std::string_view to_string(DecodeStatus s);

struct DecodeResult {
  DecodeStatus status{DecodeStatus::kIncomplete};
  std::optional<Message> message;  // set iff status == kOk
  std::size_t consumed{0};         // bytes this frame occupies, 0 if unknown
  std::size_t error_offset{0};     // offending byte offset from frame start
  std::string detail;
};

/// Decodes one frame from the front of the buffer.
DecodeResult decode(std::span<const std::uint8_t> bytes);

/// Incremental reader for a framed byte stream; tolerant of arbitrary chunk
/// boundaries. kIncomplete from next() means "feed more bytes". Frames with
/// a valid length but bad payload are skipped so the stream can continue;
/// oversized lengths are unrecoverable.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  DecodeResult next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_{0};
};

}  // namespace fleetloop
