#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fleetloop/condition.hpp"

namespace fleetloop {

struct ConditionPhase {
  double start{};  // s, first phase must start at 0
  ConditionKey key;
};

struct NoiseSigma {
  double a_lon{0.0};  // m/s^2, std dev of additive accel noise per tick
  double a_lat{0.0};
};

/// Deterministic multi-vehicle scenario description. Same seed, same log.
struct ScenarioConfig {
  int n_vehicles{1};
  double duration{60.0};    // s
  double tick_rate{25.0};   // Hz
  std::filesystem::path lane_file;  // empty -> auto-sized straight lane
  double lane_length{0.0};          // used when lane_file is empty; 0 -> auto
  std::vector<ConditionPhase> schedule{{0.0, ConditionKey{}}};
  double lane_change_rate{0.0};  // events per minute per vehicle
  double braking_rate{0.0};      // events per minute per vehicle
  /// Lateral dynamics distortion: realized a_lat = kappa(condition) *
  /// commanded a_lat + noise. Missing keys default to 1.
  std::map<ConditionKey, double> kappa;
  NoiseSigma noise;
  std::uint64_t seed{0};
  double initial_speed{25.0};  // m/s
  bool multi_target{false};    // predict all vehicles from each ego

  // Maneuver shape: a lane change is +A then -A for half_duration each; a
  // braking event is -B then +B likewise.
  double lane_change_accel{0.14};     // m/s^2
  double lane_change_half_s{7.0};     // s
  double braking_accel{1.5};          // m/s^2
  double braking_half_s{4.0};         // s

  double kappa_for(const ConditionKey& key) const;
  double dt() const { return 1.0 / tick_rate; }
  std::int64_t tick_count() const;
  const ConditionKey& condition_at(double t) const;
};

/// Store-and-forward behavior of the mobile link.
struct ChannelConfig {
  std::vector<std::pair<double, double>> offline_windows;  // [start, end)
  double latency{0.0};            // s until a received set becomes active
  std::size_t queue_capacity{10000};  // drop-oldest beyond this

  bool online_at(double t) const;
};

struct ScenarioFile {
  ScenarioConfig scenario;
  ChannelConfig channel;
};

/// Loads and validates a scenario JSON file (see README for the schema).
/// Throws std::runtime_error with a descriptive message on any problem.
ScenarioFile load_scenario_file(const std::filesystem::path& path);

void validate(const ScenarioConfig& cfg);
void validate(const ChannelConfig& cfg);

}  // namespace fleetloop
