#include "fleetloop/protocol.hpp"

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>  // vendored single header
#endif

namespace fleetloop {

using json = nlohmann::json;

namespace {

json condition_to_json(const ConditionKey& key) {
  return json{{"speed_bucket", to_string(key.speed_bucket)},
              {"weather", to_string(key.weather)}};
}

ConditionKey condition_from_json(const json& j) {
  if (!j.is_object()) throw std::runtime_error("condition must be an object");
  const auto weather = parse_weather(j.at("weather").get<std::string>());
  const auto bucket = parse_speed_bucket(j.at("speed_bucket").get<std::string>());
  if (!weather || !bucket) {
    throw std::runtime_error("unknown condition value");
  }
  return ConditionKey{*weather, *bucket};
}

json params_to_json(const ParameterSet& p) {
  json j{{"released_at", p.released_at},
         {"version", p.version},
         {"weights", p.weights}};
  j["condition"] = p.condition ? condition_to_json(*p.condition) : json(nullptr);
  return j;
}

ParameterSet params_from_json(const json& j) {
  ParameterSet p;
  j.at("weights").get_to(p.weights);
  p.version = j.at("version").get<std::int64_t>();
  p.released_at = j.at("released_at").get<double>();
  const auto& cond = j.at("condition");
  p.condition = cond.is_null() ? std::nullopt
                               : std::optional(condition_from_json(cond));
  return p;
}

json measurement_to_json(const MeasurementPackage& m) {
  return json{{"a_lat", m.features.a_lat},
              {"a_lon", m.features.a_lon},
              {"actual_d", m.actual.d},
              {"actual_s", m.actual.s},
              {"captured_at", m.features.captured_at},
              {"condition", condition_to_json(m.features.condition)},
              {"d_offset", m.features.d_offset},
              {"delta_d", m.displacement.delta_d},
              {"delta_s", m.displacement.delta_s},
              {"e_x", m.e_x},
              {"e_y", m.e_y},
              {"horizon", m.displacement.horizon},
              {"issued_at", m.issued_at},
              {"observed_at", m.observed_at},
              {"param_version", m.param_version},
              {"pred_d", m.predicted.d},
              {"pred_s", m.predicted.s},
              {"target_id", m.target_id},
              {"v_lat", m.features.v_lat},
              {"v_lon", m.features.v_lon},
              {"vehicle_id", m.vehicle_id}};
}

MeasurementPackage measurement_from_json(const json& j) {
  MeasurementPackage m;
  m.vehicle_id = j.at("vehicle_id").get<std::string>();
  m.target_id = j.at("target_id").get<std::string>();
  m.features.v_lon = j.at("v_lon").get<double>();
  m.features.v_lat = j.at("v_lat").get<double>();
  m.features.a_lon = j.at("a_lon").get<double>();
  m.features.a_lat = j.at("a_lat").get<double>();
  m.features.d_offset = j.at("d_offset").get<double>();
  m.features.condition = condition_from_json(j.at("condition"));
  m.features.captured_at = j.at("captured_at").get<double>();
  m.predicted = FrenetPose{j.at("pred_s").get<double>(),
                           j.at("pred_d").get<double>()};
  m.actual = FrenetPose{j.at("actual_s").get<double>(),
                        j.at("actual_d").get<double>()};
  m.displacement = PredictedDisplacement{j.at("delta_s").get<double>(),
                                         j.at("delta_d").get<double>(),
                                         j.at("horizon").get<double>()};
  m.e_x = j.at("e_x").get<double>();
  m.e_y = j.at("e_y").get<double>();
  m.param_version = j.at("param_version").get<std::int64_t>();
  m.issued_at = j.at("issued_at").get<double>();
  m.observed_at = j.at("observed_at").get<double>();
  return m;
}

std::vector<std::uint8_t> frame(const json& payload) {
  const std::string body = payload.dump();
  if (body.size() > kMaxPayloadBytes) {
    throw std::length_error("payload exceeds the 1 MiB frame limit");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

DecodeResult fail(DecodeStatus status, std::size_t consumed,
                  std::size_t offset, std::string detail) {
  DecodeResult r;
  r.status = status;
  r.consumed = consumed;
  r.error_offset = offset;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

std::string_view to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::kOk: return "ok";
    case DecodeStatus::kIncomplete: return "incomplete";
    case DecodeStatus::kOversized: return "oversized";
    case DecodeStatus::kUnsupported: return "unsupported";
    case DecodeStatus::kMalformed: return "malformed";
  }
  return "?";
}

std::vector<std::uint8_t> encode(const Message& msg) {
  json payload = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MeasurementPackage>) {
          json j = measurement_to_json(m);
          j["type"] = "measurement";
          return j;
        } else if constexpr (std::is_same_v<T, ParamRequest>) {
          return json{{"condition", condition_to_json(m.condition)},
                      {"type", "param_request"},
                      {"vehicle_id", m.vehicle_id}};
        } else {
          json j{{"found", m.params.has_value()}, {"type", "param_reply"}};
          if (m.params) j["params"] = params_to_json(*m.params);
          return j;
        }
      },
      msg);
  payload["v"] = kProtocolVersion;
  return frame(payload);
}

DecodeResult decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderBytes) {
    return fail(DecodeStatus::kIncomplete, 0, bytes.size(),
                "frame header needs 4 bytes, have " +
                    std::to_string(bytes.size()));
  }
  const std::size_t length = (std::size_t{bytes[0]} << 24) |
                             (std::size_t{bytes[1]} << 16) |
                             (std::size_t{bytes[2]} << 8) | std::size_t{bytes[3]};
  if (length > kMaxPayloadBytes) {
    return fail(DecodeStatus::kOversized, 0, 0,
                "declared payload length " + std::to_string(length) +
                    " exceeds 1 MiB");
  }
  const std::size_t total = kFrameHeaderBytes + length;
  if (bytes.size() < total) {
    return fail(DecodeStatus::kIncomplete, 0, bytes.size(),
                "declared payload length " + std::to_string(length) +
                    ", have " + std::to_string(bytes.size() - kFrameHeaderBytes));
  }

  json payload;
  try {
    payload = json::parse(bytes.begin() + kFrameHeaderBytes,
                          bytes.begin() + static_cast<std::ptrdiff_t>(total));
  } catch (const json::parse_error& e) {
    return fail(DecodeStatus::kMalformed, total,
                kFrameHeaderBytes + (e.byte > 0 ? e.byte - 1 : 0),
                std::string("payload is not valid JSON: ") + e.what());
  }
  if (!payload.is_object()) {
    return fail(DecodeStatus::kMalformed, total, kFrameHeaderBytes,
                "payload is not a JSON object");
  }

  try {
    if (!payload.contains("v") || !payload["v"].is_number_integer() ||
        payload["v"].get<std::int64_t>() != kProtocolVersion) {
      return fail(DecodeStatus::kUnsupported, total, kFrameHeaderBytes,
                  "protocol version is not " + std::to_string(kProtocolVersion));
    }
    const std::string type = payload.at("type").get<std::string>();
    DecodeResult r;
    r.status = DecodeStatus::kOk;
    r.consumed = total;
    if (type == "measurement") {
      r.message = measurement_from_json(payload);
    } else if (type == "param_request") {
      r.message = ParamRequest{payload.at("vehicle_id").get<std::string>(),
                               condition_from_json(payload.at("condition"))};
    } else if (type == "param_reply") {
      ParamReply reply;
      if (payload.at("found").get<bool>()) {
        reply.params = params_from_json(payload.at("params"));
      }
      r.message = reply;
    } else {
      return fail(DecodeStatus::kUnsupported, total, kFrameHeaderBytes,
                  "unknown message type \"" + type + "\"");
    }
    return r;
  } catch (const json::exception& e) {
    return fail(DecodeStatus::kMalformed, total, kFrameHeaderBytes,
                std::string("payload field error: ") + e.what());
  } catch (const std::exception& e) {
    return fail(DecodeStatus::kMalformed, total, kFrameHeaderBytes, e.what());
  }
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  // Compact occasionally so long-lived sessions do not grow without bound.
  if (pos_ > 0 && pos_ >= buf_.size() / 2) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

DecodeResult FrameReader::next() {
  auto r = decode(std::span(buf_).subspan(pos_));
  if (r.consumed > 0) pos_ += r.consumed;
  return r;
}

}  // namespace fleetloop
