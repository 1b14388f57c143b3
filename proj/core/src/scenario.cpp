#include "fleetloop/scenario.hpp"

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fleetloop {

using json = nlohmann::json;

double ScenarioConfig::kappa_for(const ConditionKey& key) const {
  if (const auto it = kappa.find(key); it != kappa.end()) return it->second;
  return 1.0;
}

std::int64_t ScenarioConfig::tick_count() const {
  return std::llround(duration * tick_rate);
}

const ConditionKey& ScenarioConfig::condition_at(double t) const {
  const ConditionKey* current = &schedule.front().key;
  for (const auto& phase : schedule) {
    if (phase.start <= t) current = &phase.key;
  }
  return *current;
}

bool ChannelConfig::online_at(double t) const {
  for (const auto& [start, end] : offline_windows) {
    if (t >= start && t < end) return false;
  }
  return true;
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.n_vehicles < 0) throw std::runtime_error("n_vehicles must be >= 0");
  if (!(cfg.duration > 0.0)) throw std::runtime_error("duration must be > 0");
  if (!(cfg.tick_rate > 0.0)) throw std::runtime_error("tick_rate must be > 0");
  if (cfg.schedule.empty()) {
    throw std::runtime_error("condition schedule must not be empty");
  }
  if (cfg.schedule.front().start != 0.0) {
    throw std::runtime_error("the first schedule phase must start at t=0");
  }
  for (std::size_t i = 1; i < cfg.schedule.size(); ++i) {
    if (!(cfg.schedule[i].start > cfg.schedule[i - 1].start)) {
      throw std::runtime_error("schedule start times must strictly increase");
    }
  }
  if (cfg.lane_change_rate < 0.0 || cfg.braking_rate < 0.0) {
    throw std::runtime_error("maneuver rates must be >= 0");
  }
  if (cfg.noise.a_lon < 0.0 || cfg.noise.a_lat < 0.0) {
    throw std::runtime_error("noise sigmas must be >= 0");
  }
  if (!(cfg.initial_speed >= 0.0)) {
    throw std::runtime_error("initial_speed must be >= 0");
  }
  for (const auto& [key, k] : cfg.kappa) {
    (void)key;
    if (!std::isfinite(k)) throw std::runtime_error("kappa must be finite");
  }
}

void validate(const ChannelConfig& cfg) {
  for (const auto& [start, end] : cfg.offline_windows) {
    if (!(end > start)) {
      throw std::runtime_error("offline windows must have end > start");
    }
  }
  for (std::size_t i = 1; i < cfg.offline_windows.size(); ++i) {
    if (cfg.offline_windows[i].first < cfg.offline_windows[i - 1].second) {
      throw std::runtime_error("offline windows must not overlap");
    }
  }
  if (cfg.latency < 0.0) throw std::runtime_error("latency must be >= 0");
  if (cfg.queue_capacity == 0) {
    throw std::runtime_error("queue_capacity must be >= 1");
  }
}

namespace {

ConditionKey parse_key_or_throw(const std::string& s, const std::string& ctx) {
  const auto key = parse_condition_key(s);
  if (!key) {
    throw std::runtime_error(ctx + ": unknown condition key \"" + s + "\"");
  }
  return *key;
}

}  // namespace

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario file: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("scenario file " + path.string() +
                             " is not valid JSON: " + e.what());
  }

  ScenarioFile out;
  auto& cfg = out.scenario;
  try {
    cfg.n_vehicles = j.at("n_vehicles").get<int>();
    cfg.duration = j.at("duration").get<double>();
    cfg.tick_rate = j.value("tick_rate", 25.0);
    if (j.contains("lane_file")) {
      cfg.lane_file = j["lane_file"].get<std::string>();
    }
    cfg.lane_length = j.value("lane_length", 0.0);
    if (j.contains("condition_schedule")) {
      cfg.schedule.clear();
      for (const auto& item : j["condition_schedule"]) {
        ConditionPhase phase;
        phase.start = item.at("start").get<double>();
        phase.key = parse_key_or_throw(item.at("condition").get<std::string>(),
                                       "condition_schedule");
        cfg.schedule.push_back(phase);
      }
    }
    cfg.lane_change_rate = j.value("lane_change_rate", 0.0);
    cfg.braking_rate = j.value("braking_rate", 0.0);
    if (j.contains("kappa")) {
      for (const auto& [k, v] : j["kappa"].items()) {
        cfg.kappa[parse_key_or_throw(k, "kappa")] = v.get<double>();
      }
    }
    if (j.contains("noise_sigma")) {
      cfg.noise.a_lon = j["noise_sigma"].value("a_lon", 0.0);
      cfg.noise.a_lat = j["noise_sigma"].value("a_lat", 0.0);
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.initial_speed = j.value("initial_speed", 25.0);
    cfg.multi_target = j.value("multi_target", false);
    cfg.lane_change_accel = j.value("lane_change_accel", 0.14);
    cfg.lane_change_half_s = j.value("lane_change_half_s", 7.0);
    cfg.braking_accel = j.value("braking_accel", 1.5);
    cfg.braking_half_s = j.value("braking_half_s", 4.0);

    if (j.contains("channel")) {
      const auto& c = j["channel"];
      if (c.contains("offline_windows")) {
        for (const auto& w : c["offline_windows"]) {
          out.channel.offline_windows.emplace_back(w.at(0).get<double>(),
                                                   w.at(1).get<double>());
        }
      }
      out.channel.latency = c.value("latency", 0.0);
      out.channel.queue_capacity = c.value("queue_capacity", std::size_t{10000});
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("scenario file " + path.string() +
                             " is invalid: " + e.what());
  }

  validate(cfg);
  validate(out.channel);
  return out;
}

}  // namespace fleetloop
