#include "fleetloop/condition.hpp"

namespace fleetloop {

namespace {
constexpr std::array<std::string_view, 4> kWeatherNames = {"CLEAR", "RAIN",
                                                           "SNOW", "FOG"};
constexpr std::array<std::string_view, 4> kBucketNames = {
    "URBAN_50", "RURAL_100", "HIGHWAY_120", "UNLIMITED"};
}  // namespace

std::string_view to_string(Weather w) {
  return kWeatherNames[static_cast<std::size_t>(w)];
}

std::string_view to_string(SpeedBucket b) {
  return kBucketNames[static_cast<std::size_t>(b)];
}

std::optional<Weather> parse_weather(std::string_view s) {
  for (std::size_t i = 0; i < kWeatherNames.size(); ++i) {
    if (s == kWeatherNames[i]) return static_cast<Weather>(i);
  }
  return std::nullopt;
}

std::optional<SpeedBucket> parse_speed_bucket(std::string_view s) {
  for (std::size_t i = 0; i < kBucketNames.size(); ++i) {
    if (s == kBucketNames[i]) return static_cast<SpeedBucket>(i);
  }
  return std::nullopt;
}

std::string to_string(const ConditionKey& key) {
  std::string out{to_string(key.weather)};
  out += '/';
  out += to_string(key.speed_bucket);
  return out;
}

std::optional<ConditionKey> parse_condition_key(std::string_view s) {
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto weather = parse_weather(s.substr(0, slash));
  const auto bucket = parse_speed_bucket(s.substr(slash + 1));
  if (!weather || !bucket) return std::nullopt;
  return ConditionKey{*weather, *bucket};
}

const std::array<ConditionKey, kConditionKeyCount>& all_condition_keys() {
  static const auto keys = [] {
    std::array<ConditionKey, kConditionKeyCount> out{};
    std::size_t i = 0;
    for (std::size_t w = 0; w < 4; ++w) {
      for (std::size_t b = 0; b < 4; ++b) {
        out[i++] = ConditionKey{static_cast<Weather>(w),
                                static_cast<SpeedBucket>(b)};
      }
    }
    return out;
  }();
  return keys;
}

}  // namespace fleetloop
