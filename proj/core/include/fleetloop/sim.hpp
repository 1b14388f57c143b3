#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fleetloop/scenario.hpp"
#include "fleetloop/transport.hpp"
#include "fleetloop/watchdog.hpp"

namespace fleetloop {

/// One symmetric acceleration pulse: +amplitude for half_duration seconds,
/// then -amplitude for another half_duration. Net velocity change is zero.
struct ManeuverPulse {
  double start{};
  double half_duration{};
  double amplitude{};
};

/// Per-vehicle maneuver timeline, piecewise constant between pulses.
struct ManeuverScript {
  std::vector<ManeuverPulse> lateral;       // lane changes
  std::vector<ManeuverPulse> longitudinal;  // brake-then-recover events

  double commanded_a_lat(double t) const;
  double commanded_a_lon(double t) const;
};

/// Draws the deterministic maneuver scripts for every vehicle. Pure in the
/// scenario config; condition schedule and kappa do not affect the commands.
std::vector<ManeuverScript> generate_scenario(const ScenarioConfig& cfg);

struct StateRow {
  double t{};
  int vehicle{};  // index into SimMeta::vehicle_ids
  double s{};
  double d{};
  double v_lon{};
  double v_lat{};
  double a_lon{};  // onboard estimate (commanded), not realized
  double a_lat{};
  ConditionKey condition;
  std::int64_t param_version{};

  bool operator==(const StateRow&) const = default;
};

struct RequestRow {
  double t{};
  int vehicle{};
  ConditionKey key;
  bool is_reply{};
  std::int64_t version{-1};  // reply only
  bool found{};

  bool operator==(const RequestRow&) const = default;
};

struct DropRow {
  double t{};
  int vehicle{};
  std::string target_id;
  double pkg_issued_at{};

  bool operator==(const DropRow&) const = default;
};

struct SimMeta {
  double tick_rate{25.0};
  double duration{};
  int n_vehicles{};
  bool multi_target{};
  std::uint64_t seed{};
  std::vector<std::string> vehicle_ids;
  WatchdogConfig watchdog;
};

/// Complete, replayable record of one fleet run. packages holds every
/// triggered sample (queue drops are channel-level and listed separately).
struct SimLog {
  SimMeta meta;
  std::vector<StateRow> states;  // tick-major, vehicle order within a tick
  std::vector<MeasurementPackage> packages;
  std::vector<RequestRow> requests;
  std::vector<ParameterSet> param_table;  // every version seen, basic included
  std::vector<DropRow> drops;
};

struct BucketStats {
  std::uint64_t expiries{};
  std::uint64_t triggers{};
  double sum_e_x{};
  double sum_e_y{};
  double sum_e_y_triggered{};
  double max_e_x{};
  double max_e_y{};

  double mean_e_x() const { return expiries ? sum_e_x / double(expiries) : 0.0; }
  double mean_e_y() const { return expiries ? sum_e_y / double(expiries) : 0.0; }
  double mean_e_y_triggered() const {
    return triggers ? sum_e_y_triggered / double(triggers) : 0.0;
  }
};

struct SimSummary {
  std::map<ConditionKey, BucketStats> buckets;  // keyed by condition at issue
  std::uint64_t ticks{};
  std::uint64_t inserted{};
  std::uint64_t expired{};
  std::uint64_t triggered{};
  std::uint64_t drops{};
  double max_e_x{};
  double max_e_y{};
  double wall_seconds{};
};

struct SimResult {
  SimLog log;
  SimSummary summary;
};

using ChannelFactory =
    std::function<std::unique_ptr<BackendChannel>(const std::string& vehicle_id)>;

/// Runs the full closed-loop simulation: per tick and vehicle, advance the
/// dynamics, dead-reckon the prediction buffer, compare expiries and ship
/// triggered packages (green loop), request condition-fitting parameters on
/// schedule changes with one-phase lookahead (blue loop). During offline
/// windows vehicles keep predicting on cached or basic parameters and queue
/// outgoing packages up to the configured capacity, dropping oldest.
SimResult run_fleet(const ScenarioConfig& cfg, const ChannelConfig& channel,
                    const ChannelFactory& make_channel,
                    const WatchdogConfig& watchdog);

/// Brute-force trigger oracle: recomputes every prediction, dead-reckoning
/// update, correction and residual straight from the logged states, without
/// the buffer machinery. Returns the package set the run should have emitted.
std::vector<MeasurementPackage> replay(const SimLog& log,
                                       const WatchdogConfig& watchdog);

struct PackageDiff {
  std::vector<MeasurementPackage> missing;  // in oracle, not in log
  std::vector<MeasurementPackage> extra;    // in log, not in oracle

  bool empty() const { return missing.empty() && extra.empty(); }
};

/// Exact (bit-level) set comparison keyed by (vehicle, target, issue time).
PackageDiff diff_packages(const std::vector<MeasurementPackage>& logged,
                          const std::vector<MeasurementPackage>& oracle);

std::string describe(const MeasurementPackage& pkg);

/// Writes states.csv, packages.csv (triggered-sample schema),
/// packages_full.csv, requests.csv, params.csv, drops.csv, meta.json and
/// summary.json into dir.
void export_csv(const SimResult& result, const std::filesystem::path& dir);

/// Loads what export_csv wrote (summary not included). Number round trips
/// are exact.
SimLog import_csv(const std::filesystem::path& dir);

void write_summary_json(const SimSummary& summary,
                        const std::filesystem::path& file);

}  // namespace fleetloop
