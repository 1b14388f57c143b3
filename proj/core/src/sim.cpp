#include "fleetloop/sim.hpp"

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fleetloop/csv.hpp"
#include "fleetloop/kinematics.hpp"
#include "fleetloop/predictor.hpp"

namespace fleetloop {

using json = nlohmann::json;

namespace {

// Amplitude over the two half-phases of a pulse; 0 outside.
double pulse_value(const std::vector<ManeuverPulse>& pulses, double t,
                   bool invert_first_half) {
  if (pulses.empty()) return 0.0;
  auto it = std::upper_bound(
      pulses.begin(), pulses.end(), t,
      [](double value, const ManeuverPulse& p) { return value < p.start; });
  if (it == pulses.begin()) return 0.0;
  const ManeuverPulse& p = *(it - 1);
  if (t < p.start || t >= p.start + 2.0 * p.half_duration) return 0.0;
  const bool first_half = t < p.start + p.half_duration;
  const double sign = (first_half != invert_first_half) ? 1.0 : -1.0;
  return sign * p.amplitude;
}

}  // namespace

double ManeuverScript::commanded_a_lat(double t) const {
  return pulse_value(lateral, t, /*invert_first_half=*/false);
}

double ManeuverScript::commanded_a_lon(double t) const {
  // Brake first, recover after.
  return pulse_value(longitudinal, t, /*invert_first_half=*/true);
}

std::vector<ManeuverScript> generate_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  std::vector<ManeuverScript> scripts;
  scripts.reserve(static_cast<std::size_t>(cfg.n_vehicles));
  for (int i = 0; i < cfg.n_vehicles; ++i) {
    ManeuverScript script;
    if (cfg.lane_change_rate > 0.0) {
      std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(i),
                        std::uint64_t{0x6c61746572616c}};  // lateral stream
      std::mt19937_64 rng(seq);
      std::exponential_distribution<double> gap(cfg.lane_change_rate / 60.0);
      double dir = (i % 2 == 0) ? 1.0 : -1.0;
      double t = gap(rng);
      while (t < cfg.duration) {
        script.lateral.push_back(
            ManeuverPulse{t, cfg.lane_change_half_s,
                          dir * cfg.lane_change_accel});
        dir = -dir;
        t += 2.0 * cfg.lane_change_half_s + gap(rng);
      }
    }
    if (cfg.braking_rate > 0.0) {
      std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(i),
                        std::uint64_t{0x6272616b65}};  // braking stream
      std::mt19937_64 rng(seq);
      std::exponential_distribution<double> gap(cfg.braking_rate / 60.0);
      double t = gap(rng);
      while (t < cfg.duration) {
        script.longitudinal.push_back(
            ManeuverPulse{t, cfg.braking_half_s, cfg.braking_accel});
        t += 2.0 * cfg.braking_half_s + gap(rng);
      }
    }
    scripts.push_back(std::move(script));
  }
  return scripts;
}

namespace {

struct VehicleSim {
  std::string id;
  VehicleState truth;  // realized dynamics
  FrenetPose fp;       // canonical lane projection at the current tick
  EgoMotion ego;       // motion over the last tick interval
  double sensed_a_lon{0.0};  // onboard estimates: the commanded values
  double sensed_a_lat{0.0};
  PredictionBuffer buffer;
  std::unique_ptr<BackendChannel> channel;
  std::mt19937_64 rng;
  std::map<ConditionKey, ParameterSet> cache;
  std::deque<std::tuple<double, ConditionKey, ParameterSet>> pending;
  std::deque<MeasurementPackage> queue;
  std::size_t schedule_idx{static_cast<std::size_t>(-1)};
  bool prev_online{true};

  VehicleState sensed_state() const {
    VehicleState s = truth;
    s.a_lon = sensed_a_lon;
    s.a_lat = sensed_a_lat;
    return s;
  }
};

class FleetRun {
 public:
  FleetRun(const ScenarioConfig& cfg, const ChannelConfig& channel,
           const ChannelFactory& make_channel, const WatchdogConfig& wd)
      : cfg_(cfg),
        channel_cfg_(channel),
        wd_(wd),
        lane_(make_lane(cfg)),
        scripts_(generate_scenario(cfg)) {
    result_.log.meta.tick_rate = cfg.tick_rate;
    result_.log.meta.duration = cfg.duration;
    result_.log.meta.n_vehicles = cfg.n_vehicles;
    result_.log.meta.multi_target = cfg.multi_target;
    result_.log.meta.seed = cfg.seed;
    result_.log.meta.watchdog = wd;
    result_.log.param_table.push_back(basic_parameters());
    known_versions_.insert(0);

    const double dt = cfg.dt();
    for (int i = 0; i < cfg.n_vehicles; ++i) {
      VehicleSim v{.id = "veh-" + std::to_string(i),
                   .buffer = PredictionBuffer("veh-" + std::to_string(i), wd)};
      const double s0 = 10.0 + 50.0 * i;
      v.truth.id = v.id;
      v.truth.pose = from_frenet(FrenetPose{s0, 0.0}, lane_);
      v.truth.v_lon = cfg.initial_speed;
      v.fp = to_frenet(v.truth.pose, lane_);
      v.ego = EgoMotion{cfg.initial_speed, 0.0, dt};
      std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(i),
                        std::uint64_t{0x6e6f697365}};  // noise stream
      v.rng.seed(seq);
      v.channel = make_channel(v.id);
      if (!v.channel) throw std::runtime_error("channel factory returned null");
      result_.log.meta.vehicle_ids.push_back(v.id);
      vehicles_.push_back(std::move(v));
    }
  }

  SimResult run() {
    const auto wall_start = std::chrono::steady_clock::now();
    const double dt = cfg_.dt();
    const std::int64_t ticks = cfg_.tick_count();
    for (std::int64_t k = 0; k <= ticks; ++k) {
      const double t = static_cast<double>(k) * dt;
      if (k > 0) step_all(k, dt);
      const bool online = channel_cfg_.online_at(t);
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        process_vehicle(static_cast<int>(i), k, t, online);
      }
      ++result_.summary.ticks;
    }
    result_.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
            .count();
    return std::move(result_);
  }

 private:
  static LaneGeometry make_lane(const ScenarioConfig& cfg) {
    if (!cfg.lane_file.empty()) return LaneGeometry::from_csv(cfg.lane_file);
    double length = cfg.lane_length;
    if (length <= 0.0) {
      // Far end: start offset of the last vehicle plus distance at cruise
      // speed plus prediction lookahead headroom.
      length = 10.0 + 50.0 * std::max(0, cfg.n_vehicles - 1) +
               cfg.duration * std::max(1.0, cfg.initial_speed) * 1.25 + 200.0;
    }
    return LaneGeometry::straight(length);
  }

  void step_all(std::int64_t k, double dt) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    const ConditionKey& cond = cfg_.condition_at(t_prev);
    const double kappa = cfg_.kappa_for(cond);
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
      VehicleSim& v = vehicles_[i];
      const double cmd_lon = scripts_[i].commanded_a_lon(t_prev);
      const double cmd_lat = scripts_[i].commanded_a_lat(t_prev);
      double real_lon = cmd_lon;
      double real_lat = kappa * cmd_lat;
      if (cfg_.noise.a_lon > 0.0) {
        real_lon += std::normal_distribution<double>(0.0, cfg_.noise.a_lon)(v.rng);
      }
      if (cfg_.noise.a_lat > 0.0) {
        real_lat += std::normal_distribution<double>(0.0, cfg_.noise.a_lat)(v.rng);
      }
      const FrenetPose prev_fp = v.fp;
      v.truth = step_state(v.truth, real_lon, real_lat, dt, lane_);
      v.fp = to_frenet(v.truth.pose, lane_);
      v.ego = EgoMotion{(v.fp.s - prev_fp.s) / dt, (v.fp.d - prev_fp.d) / dt,
                        dt};
      v.sensed_a_lon = cmd_lon;
      v.sensed_a_lat = cmd_lat;
    }
  }

  void process_vehicle(int index, std::int64_t k, double t, bool online) {
    VehicleSim& v = vehicles_[static_cast<std::size_t>(index)];

    if (online && !v.prev_online) {
      flush_queue(v);
      // Refresh the current condition's set and prefetch the next phase;
      // releases may have happened while offline.
      request(v, index, t, cfg_.condition_at(t));
      prefetch_next(v, index, t);
    }
    v.prev_online = online;

    // Condition schedule activations, with one-phase-ahead prefetch.
    std::size_t idx = (v.schedule_idx == static_cast<std::size_t>(-1))
                          ? 0
                          : v.schedule_idx;
    while (idx + 1 < cfg_.schedule.size() && cfg_.schedule[idx + 1].start <= t) {
      ++idx;
    }
    if (idx != v.schedule_idx) {
      v.schedule_idx = idx;
      if (online) {
        request(v, index, t, cfg_.schedule[idx].key);
        prefetch_next(v, index, t);
      }
    }
    apply_pending(v, t);

    if (k > 0) {
      auto expired = v.buffer.tick(v.ego);
      for (auto& entry : expired) {
        const VehicleSim& target = vehicle_by_id(entry.target_id);
        const FrenetPose actual_rel{target.fp.s - v.fp.s,
                                    target.fp.d - v.fp.d};
        const ResidualReport report = compare(entry, actual_rel, wd_);
        account(report);
        if (report.triggered) {
          MeasurementPackage pkg = package(report, v.id, t);
          result_.log.packages.push_back(pkg);
          ++result_.summary.triggered;
          dispatch(v, index, t, online, std::move(pkg));
        }
      }
    }

    const ConditionKey& cond = cfg_.condition_at(t);
    const ParameterSet params = active_params(v, cond);
    const auto insert_for = [&](const VehicleSim& target) {
      const FeatureSnapshot features =
          extract_features(target.sensed_state(), lane_, cond);
      const PredictedDisplacement disp = predict(features, params, wd_.horizon);
      const FrenetPose rel_now{target.fp.s - v.fp.s, target.fp.d - v.fp.d};
      v.buffer.insert(target.id, disp, rel_now, features, params.version, t);
      ++result_.summary.inserted;
    };
    if (cfg_.multi_target) {
      for (const VehicleSim& target : vehicles_) insert_for(target);
    } else {
      insert_for(v);
    }

    result_.log.states.push_back(StateRow{t, index, v.fp.s, v.fp.d,
                                          v.truth.v_lon, v.truth.v_lat,
                                          v.sensed_a_lon, v.sensed_a_lat, cond,
                                          params.version});
  }

  const VehicleSim& vehicle_by_id(const std::string& id) const {
    for (const auto& v : vehicles_) {
      if (v.id == id) return v;
    }
    throw std::logic_error("unknown target id: " + id);
  }

  void account(const ResidualReport& report) {
    BucketStats& bucket =
        result_.summary.buckets[report.entry.features.condition];
    ++bucket.expiries;
    ++result_.summary.expired;
    bucket.sum_e_x += report.e_x;
    bucket.sum_e_y += report.e_y;
    bucket.max_e_x = std::max(bucket.max_e_x, report.e_x);
    bucket.max_e_y = std::max(bucket.max_e_y, report.e_y);
    if (report.triggered) {
      ++bucket.triggers;
      bucket.sum_e_y_triggered += report.e_y;
    }
    result_.summary.max_e_x = std::max(result_.summary.max_e_x, report.e_x);
    result_.summary.max_e_y = std::max(result_.summary.max_e_y, report.e_y);
  }

  void dispatch(VehicleSim& v, int index, double t, bool online,
                MeasurementPackage pkg) {
    if (online) {
      flush_queue(v);
      send(v, pkg);
      return;
    }
    if (v.queue.size() >= channel_cfg_.queue_capacity) {
      const MeasurementPackage& dropped = v.queue.front();
      result_.log.drops.push_back(
          DropRow{t, index, dropped.target_id, dropped.issued_at});
      ++result_.summary.drops;
      v.queue.pop_front();
    }
    v.queue.push_back(std::move(pkg));
  }

  void send(VehicleSim& v, const MeasurementPackage& pkg) {
    try {
      v.channel->send_measurement(pkg);
    } catch (const std::exception& e) {
      throw std::runtime_error("backend unreachable while online (" + v.id +
                               "): " + e.what());
    }
  }

  void flush_queue(VehicleSim& v) {
    while (!v.queue.empty()) {
      send(v, v.queue.front());
      v.queue.pop_front();
    }
  }

  void request(VehicleSim& v, int index, double t, const ConditionKey& key) {
    result_.log.requests.push_back(RequestRow{t, index, key, false, -1, false});
    ParamReply reply;
    try {
      reply = v.channel->request_parameters(ParamRequest{v.id, key});
    } catch (const std::exception& e) {
      throw std::runtime_error("backend unreachable while online (" + v.id +
                               "): " + e.what());
    }
    RequestRow row{t, index, key, true, -1, reply.params.has_value()};
    if (reply.params) {
      row.version = reply.params->version;
      if (known_versions_.insert(reply.params->version).second) {
        result_.log.param_table.push_back(*reply.params);
      }
      v.pending.emplace_back(t + channel_cfg_.latency, key, *reply.params);
    }
    result_.log.requests.push_back(row);
  }

  void prefetch_next(VehicleSim& v, int index, double t) {
    if (v.schedule_idx != static_cast<std::size_t>(-1) &&
        v.schedule_idx + 1 < cfg_.schedule.size()) {
      request(v, index, t, cfg_.schedule[v.schedule_idx + 1].key);
    }
  }

  void apply_pending(VehicleSim& v, double t) {
    while (!v.pending.empty() && std::get<0>(v.pending.front()) <= t) {
      auto [apply_at, key, set] = std::move(v.pending.front());
      v.pending.pop_front();
      v.cache[key] = std::move(set);
    }
  }

  ParameterSet active_params(const VehicleSim& v, const ConditionKey& key) const {
    if (const auto it = v.cache.find(key); it != v.cache.end()) {
      return it->second;
    }
    return basic_parameters();
  }

  const ScenarioConfig& cfg_;
  const ChannelConfig& channel_cfg_;
  const WatchdogConfig& wd_;
  LaneGeometry lane_;
  std::vector<ManeuverScript> scripts_;
  std::vector<VehicleSim> vehicles_;
  std::set<std::int64_t> known_versions_;
  SimResult result_;
};

}  // namespace

SimResult run_fleet(const ScenarioConfig& cfg, const ChannelConfig& channel,
                    const ChannelFactory& make_channel,
                    const WatchdogConfig& watchdog) {
  validate(cfg);
  validate(channel);
  FleetRun run(cfg, channel, make_channel, watchdog);
  return run.run();
}

std::vector<MeasurementPackage> replay(const SimLog& log,
                                       const WatchdogConfig& wd) {
  const int n = log.meta.n_vehicles;
  if (n == 0) return {};
  const double dt = 1.0 / log.meta.tick_rate;

  // states are tick-major with every vehicle present each tick.
  if (log.states.size() % static_cast<std::size_t>(n) != 0) {
    throw std::runtime_error("incomplete log: state rows not divisible by vehicle count");
  }
  const std::size_t ticks = log.states.size() / static_cast<std::size_t>(n);
  const auto row = [&](std::size_t k, int vehicle) -> const StateRow& {
    const StateRow& r = log.states[k * static_cast<std::size_t>(n) +
                                   static_cast<std::size_t>(vehicle)];
    if (r.vehicle != vehicle) {
      throw std::runtime_error("incomplete log: state rows out of order");
    }
    return r;
  };

  std::map<std::int64_t, ParameterSet> params;
  for (const auto& p : log.param_table) params[p.version] = p;

  std::vector<MeasurementPackage> out;
  for (int ego = 0; ego < n; ++ego) {
    const int target_begin = log.meta.multi_target ? 0 : ego;
    const int target_end = log.meta.multi_target ? n : ego + 1;
    for (int target = target_begin; target < target_end; ++target) {
      for (std::size_t k = 0; k < ticks; ++k) {
        const StateRow& er = row(k, ego);
        const StateRow& tr = row(k, target);
        const auto pit = params.find(er.param_version);
        if (pit == params.end()) {
          throw std::runtime_error("incomplete log: unknown parameter version " +
                                   std::to_string(er.param_version));
        }
        const FeatureSnapshot features{tr.v_lon, tr.v_lat, tr.a_lon, tr.a_lat,
                                       tr.d, tr.condition, tr.t};
        const PredictedDisplacement disp =
            predict(features, pit->second, wd.horizon);
        FrenetPose rel{(tr.s - er.s) + disp.delta_s,
                       (tr.d - er.d) + disp.delta_d};
        double t_c = wd.horizon;
        for (std::size_t j = k + 1; j < ticks; ++j) {
          const StateRow& prev = row(j - 1, ego);
          const StateRow& cur = row(j, ego);
          const double v_lon = (cur.s - prev.s) / dt;
          const double v_lat = (cur.d - prev.d) / dt;
          rel.s -= v_lon * dt;
          rel.d -= v_lat * dt;
          t_c -= dt;
          if (t_c <= 0.0) {
            rel.s += v_lon * (-t_c);
            const StateRow& tcur = row(j, target);
            const FrenetPose actual{tcur.s - cur.s, tcur.d - cur.d};
            const double e_x = std::fabs(actual.s - rel.s);
            const double e_y = std::fabs(actual.d - rel.d);
            if (e_x > wd.theta_x || e_y > wd.theta_y) {
              out.push_back(MeasurementPackage{
                  log.meta.vehicle_ids[static_cast<std::size_t>(ego)],
                  log.meta.vehicle_ids[static_cast<std::size_t>(target)],
                  features, rel, actual, disp, e_x, e_y, er.param_version,
                  er.t, cur.t});
            }
            break;
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::tuple<const std::string&, const std::string&, double, double> diff_key(
    const MeasurementPackage& p) {
  return {p.vehicle_id, p.target_id, p.issued_at, p.observed_at};
}

bool same_package(const MeasurementPackage& a, const MeasurementPackage& b) {
  return a.vehicle_id == b.vehicle_id && a.target_id == b.target_id &&
         a.features == b.features && a.predicted == b.predicted &&
         a.actual == b.actual && a.displacement == b.displacement &&
         a.e_x == b.e_x && a.e_y == b.e_y &&
         a.param_version == b.param_version && a.issued_at == b.issued_at &&
         a.observed_at == b.observed_at;
}

}  // namespace

PackageDiff diff_packages(const std::vector<MeasurementPackage>& logged,
                          const std::vector<MeasurementPackage>& oracle) {
  auto sorted = [](std::vector<MeasurementPackage> v) {
    std::sort(v.begin(), v.end(),
              [](const MeasurementPackage& a, const MeasurementPackage& b) {
                return diff_key(a) < diff_key(b);
              });
    return v;
  };
  const auto a = sorted(logged);
  const auto b = sorted(oracle);
  PackageDiff diff;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (i == a.size()) {
      diff.missing.push_back(b[j++]);
    } else if (j == b.size()) {
      diff.extra.push_back(a[i++]);
    } else if (diff_key(a[i]) < diff_key(b[j])) {
      diff.extra.push_back(a[i++]);
    } else if (diff_key(b[j]) < diff_key(a[i])) {
      diff.missing.push_back(b[j++]);
    } else {
      if (!same_package(a[i], b[j])) {
        diff.extra.push_back(a[i]);
        diff.missing.push_back(b[j]);
      }
      ++i;
      ++j;
    }
  }
  return diff;
}

std::string describe(const MeasurementPackage& pkg) {
  std::ostringstream os;
  os << pkg.vehicle_id << "->" << pkg.target_id
     << " issued_at=" << format_double(pkg.issued_at)
     << " observed_at=" << format_double(pkg.observed_at)
     << " e_x=" << format_double(pkg.e_x) << " e_y=" << format_double(pkg.e_y)
     << " condition=" << to_string(pkg.features.condition);
  return os.str();
}

namespace {

constexpr std::string_view kPackagesHeader[] = {
    "timestamp", "target_id", "v_lon", "v_lat", "a_lon", "a_lat", "d_offset",
    "condition_weather", "condition_speed_bucket", "pred_s", "pred_d",
    "actual_s", "actual_d", "e_x", "e_y", "param_version"};

std::vector<std::string> package_row(const MeasurementPackage& p) {
  return {format_double(p.observed_at),
          p.target_id,
          format_double(p.features.v_lon),
          format_double(p.features.v_lat),
          format_double(p.features.a_lon),
          format_double(p.features.a_lat),
          format_double(p.features.d_offset),
          std::string(to_string(p.features.condition.weather)),
          std::string(to_string(p.features.condition.speed_bucket)),
          format_double(p.predicted.s),
          format_double(p.predicted.d),
          format_double(p.actual.s),
          format_double(p.actual.d),
          format_double(p.e_x),
          format_double(p.e_y),
          std::to_string(p.param_version)};
}

ConditionKey key_from_cells(const std::string& weather,
                            const std::string& bucket) {
  const auto w = parse_weather(weather);
  const auto b = parse_speed_bucket(bucket);
  if (!w || !b) {
    throw std::runtime_error("unknown condition \"" + weather + "/" + bucket +
                             "\" in log");
  }
  return ConditionKey{*w, *b};
}

}  // namespace

void export_csv(const SimResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const SimLog& log = result.log;

  {
    CsvWriter w(dir / "states.csv",
                {"timestamp", "vehicle_id", "s", "d", "v_lon", "v_lat",
                 "a_lon", "a_lat", "condition_weather",
                 "condition_speed_bucket", "param_version"});
    for (const auto& r : log.states) {
      w.row({format_double(r.t),
             log.meta.vehicle_ids[static_cast<std::size_t>(r.vehicle)],
             format_double(r.s), format_double(r.d), format_double(r.v_lon),
             format_double(r.v_lat), format_double(r.a_lon),
             format_double(r.a_lat),
             std::string(to_string(r.condition.weather)),
             std::string(to_string(r.condition.speed_bucket)),
             std::to_string(r.param_version)});
    }
    w.flush();
  }
  {
    CsvWriter w(dir / "packages.csv",
                std::vector<std::string>(std::begin(kPackagesHeader),
                                         std::end(kPackagesHeader)));
    for (const auto& p : log.packages) w.row(package_row(p));
    w.flush();
  }
  {
    CsvWriter w(dir / "packages_full.csv",
                {"observed_at", "vehicle_id", "target_id", "issued_at",
                 "captured_at", "v_lon", "v_lat", "a_lon", "a_lat", "d_offset",
                 "condition_weather", "condition_speed_bucket", "pred_s",
                 "pred_d", "actual_s", "actual_d", "delta_s", "delta_d",
                 "horizon", "e_x", "e_y", "param_version"});
    for (const auto& p : log.packages) {
      w.row({format_double(p.observed_at), p.vehicle_id, p.target_id,
             format_double(p.issued_at), format_double(p.features.captured_at),
             format_double(p.features.v_lon), format_double(p.features.v_lat),
             format_double(p.features.a_lon), format_double(p.features.a_lat),
             format_double(p.features.d_offset),
             std::string(to_string(p.features.condition.weather)),
             std::string(to_string(p.features.condition.speed_bucket)),
             format_double(p.predicted.s), format_double(p.predicted.d),
             format_double(p.actual.s), format_double(p.actual.d),
             format_double(p.displacement.delta_s),
             format_double(p.displacement.delta_d),
             format_double(p.displacement.horizon), format_double(p.e_x),
             format_double(p.e_y), std::to_string(p.param_version)});
    }
    w.flush();
  }
  {
    CsvWriter w(dir / "requests.csv",
                {"timestamp", "vehicle_id", "kind", "condition_weather",
                 "condition_speed_bucket", "version", "found"});
    for (const auto& r : log.requests) {
      w.row({format_double(r.t),
             log.meta.vehicle_ids[static_cast<std::size_t>(r.vehicle)],
             r.is_reply ? "reply" : "request",
             std::string(to_string(r.key.weather)),
             std::string(to_string(r.key.speed_bucket)),
             std::to_string(r.version), r.found ? "1" : "0"});
    }
    w.flush();
  }
  {
    CsvWriter w(dir / "params.csv",
                {"version", "condition", "w0", "w1", "w2", "w3",
                 "released_at"});
    for (const auto& p : log.param_table) {
      w.row({std::to_string(p.version),
             p.condition ? to_string(*p.condition) : "BASIC",
             format_double(p.weights[0]), format_double(p.weights[1]),
             format_double(p.weights[2]), format_double(p.weights[3]),
             format_double(p.released_at)});
    }
    w.flush();
  }
  {
    CsvWriter w(dir / "drops.csv",
                {"timestamp", "vehicle_id", "target_id", "pkg_issued_at"});
    for (const auto& d : log.drops) {
      w.row({format_double(d.t),
             log.meta.vehicle_ids[static_cast<std::size_t>(d.vehicle)],
             d.target_id, format_double(d.pkg_issued_at)});
    }
    w.flush();
  }
  {
    json meta{{"tick_rate", log.meta.tick_rate},
              {"duration", log.meta.duration},
              {"n_vehicles", log.meta.n_vehicles},
              {"multi_target", log.meta.multi_target},
              {"seed", log.meta.seed},
              {"vehicle_ids", log.meta.vehicle_ids},
              {"watchdog",
               {{"theta_x", log.meta.watchdog.theta_x},
                {"theta_y", log.meta.watchdog.theta_y},
                {"horizon", log.meta.watchdog.horizon},
                {"tick_rate", log.meta.watchdog.tick_rate}}}};
    std::ofstream out(dir / "meta.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write meta.json");
    out << meta.dump(2) << '\n';
  }
  write_summary_json(result.summary, dir / "summary.json");
}

void write_summary_json(const SimSummary& summary,
                        const std::filesystem::path& file) {
  json buckets = json::object();
  for (const auto& [key, b] : summary.buckets) {
    buckets[to_string(key)] = json{{"expiries", b.expiries},
                                   {"triggers", b.triggers},
                                   {"mean_e_x", b.mean_e_x()},
                                   {"mean_e_y", b.mean_e_y()},
                                   {"mean_e_y_triggered", b.mean_e_y_triggered()},
                                   {"max_e_x", b.max_e_x},
                                   {"max_e_y", b.max_e_y}};
  }
  const json j{{"buckets", buckets},
               {"ticks", summary.ticks},
               {"inserted", summary.inserted},
               {"expired", summary.expired},
               {"triggered", summary.triggered},
               {"drops", summary.drops},
               {"max_e_x", summary.max_e_x},
               {"max_e_y", summary.max_e_y},
               {"wall_seconds", summary.wall_seconds}};
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

SimLog import_csv(const std::filesystem::path& dir) {
  SimLog log;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) {
      throw std::runtime_error("missing meta.json in " + dir.string());
    }
    json meta;
    in >> meta;
    log.meta.tick_rate = meta.at("tick_rate").get<double>();
    log.meta.duration = meta.at("duration").get<double>();
    log.meta.n_vehicles = meta.at("n_vehicles").get<int>();
    log.meta.multi_target = meta.at("multi_target").get<bool>();
    log.meta.seed = meta.at("seed").get<std::uint64_t>();
    log.meta.vehicle_ids =
        meta.at("vehicle_ids").get<std::vector<std::string>>();
    const auto& wd = meta.at("watchdog");
    log.meta.watchdog.theta_x = wd.at("theta_x").get<double>();
    log.meta.watchdog.theta_y = wd.at("theta_y").get<double>();
    log.meta.watchdog.horizon = wd.at("horizon").get<double>();
    log.meta.watchdog.tick_rate = wd.at("tick_rate").get<double>();
  }
  std::map<std::string, int> vehicle_index;
  for (std::size_t i = 0; i < log.meta.vehicle_ids.size(); ++i) {
    vehicle_index[log.meta.vehicle_ids[i]] = static_cast<int>(i);
  }
  const auto index_of = [&](const std::string& id) {
    const auto it = vehicle_index.find(id);
    if (it == vehicle_index.end()) {
      throw std::runtime_error("unknown vehicle id in log: " + id);
    }
    return it->second;
  };

  {
    const CsvTable t = read_csv(dir / "states.csv");
    for (const auto& r : t.rows) {
      StateRow row;
      row.t = parse_double(r[0]);
      row.vehicle = index_of(r[1]);
      row.s = parse_double(r[2]);
      row.d = parse_double(r[3]);
      row.v_lon = parse_double(r[4]);
      row.v_lat = parse_double(r[5]);
      row.a_lon = parse_double(r[6]);
      row.a_lat = parse_double(r[7]);
      row.condition = key_from_cells(r[8], r[9]);
      row.param_version = parse_int(r[10]);
      log.states.push_back(row);
    }
  }
  {
    const CsvTable t = read_csv(dir / "packages_full.csv");
    for (const auto& r : t.rows) {
      MeasurementPackage p;
      p.observed_at = parse_double(r[0]);
      p.vehicle_id = r[1];
      p.target_id = r[2];
      p.issued_at = parse_double(r[3]);
      p.features.captured_at = parse_double(r[4]);
      p.features.v_lon = parse_double(r[5]);
      p.features.v_lat = parse_double(r[6]);
      p.features.a_lon = parse_double(r[7]);
      p.features.a_lat = parse_double(r[8]);
      p.features.d_offset = parse_double(r[9]);
      p.features.condition = key_from_cells(r[10], r[11]);
      p.predicted = FrenetPose{parse_double(r[12]), parse_double(r[13])};
      p.actual = FrenetPose{parse_double(r[14]), parse_double(r[15])};
      p.displacement = PredictedDisplacement{
          parse_double(r[16]), parse_double(r[17]), parse_double(r[18])};
      p.e_x = parse_double(r[19]);
      p.e_y = parse_double(r[20]);
      p.param_version = parse_int(r[21]);
      log.packages.push_back(std::move(p));
    }
  }
  {
    const CsvTable t = read_csv(dir / "params.csv");
    for (const auto& r : t.rows) {
      ParameterSet p;
      p.version = parse_int(r[0]);
      if (r[1] != "BASIC") {
        const auto key = parse_condition_key(r[1]);
        if (!key) throw std::runtime_error("bad condition in params.csv");
        p.condition = *key;
      }
      p.weights = {parse_double(r[2]), parse_double(r[3]), parse_double(r[4]),
                   parse_double(r[5])};
      p.released_at = parse_double(r[6]);
      log.param_table.push_back(p);
    }
  }
  if (std::filesystem::exists(dir / "drops.csv")) {
    const CsvTable t = read_csv(dir / "drops.csv");
    for (const auto& r : t.rows) {
      log.drops.push_back(
          DropRow{parse_double(r[0]), index_of(r[1]), r[2], parse_double(r[3])});
    }
  }
  if (std::filesystem::exists(dir / "requests.csv")) {
    const CsvTable t = read_csv(dir / "requests.csv");
    for (const auto& r : t.rows) {
      RequestRow row;
      row.t = parse_double(r[0]);
      row.vehicle = index_of(r[1]);
      row.is_reply = r[2] == "reply";
      row.key = key_from_cells(r[3], r[4]);
      row.version = parse_int(r[5]);
      row.found = r[6] == "1";
      log.requests.push_back(row);
    }
  }
  return log;
}

}  // namespace fleetloop
