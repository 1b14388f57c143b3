#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fleetloop {

enum class Weather : std::uint8_t { kClear = 0, kRain, kSnow, kFog };

enum class SpeedBucket : std::uint8_t {
  kUrban50 = 0,
  kRural100,
  kHighway120,
  kUnlimited
};

/// Discrete external-condition descriptor keying the parameter store.
/// 4 weather values x 4 speed-limit buckets = 16 keys total.
struct ConditionKey {
  Weather weather{Weather::kClear};
  SpeedBucket speed_bucket{SpeedBucket::kUrban50};

  auto operator<=>(const ConditionKey&) const = default;
};

inline constexpr int kConditionKeyCount = 16;

std::string_view to_string(Weather w);
std::string_view to_string(SpeedBucket b);
std::optional<Weather> parse_weather(std::string_view s);
std::optional<SpeedBucket> parse_speed_bucket(std::string_view s);

// "RAIN/HIGHWAY_120" form, used in config files, CLI flags and logs.
std::string to_string(const ConditionKey& key);
std::optional<ConditionKey> parse_condition_key(std::string_view s);

// All 16 keys in canonical (weather, speed bucket) order.
const std::array<ConditionKey, kConditionKeyCount>& all_condition_keys();

}  // namespace fleetloop
