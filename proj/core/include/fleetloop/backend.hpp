#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fleetloop/condition.hpp"
#include "fleetloop/predictor.hpp"
#include "fleetloop/watchdog.hpp"

namespace fleetloop {

/// One training sample reconstructed from a triggered measurement package.
/// desired_delta_d = predicted_delta_d + signed lateral residual, i.e. the
/// lateral displacement the vehicle actually performed over the horizon.
struct SituationRecord {
  FeatureSnapshot features;
  double desired_delta_d{};
  double predicted_delta_d{};
  double horizon{};
  ConditionKey condition;
  double e_x{};
  double e_y{};
  double received_at{};
  std::string source_vehicle;
  std::string target_id;
  double issued_at{};
};

/// Append-only situation store. Optionally persisted as one JSON record per
/// line; an existing file is loaded on construction. Packages repeating a
/// (vehicle, timestamp, target) triple are deduplicated.
class SituationDatabase {
 public:
  SituationDatabase() = default;
  explicit SituationDatabase(std::filesystem::path file);

  // Returns the stored record, or nullopt for a duplicate package.
  std::optional<SituationRecord> store_measurement(
      const MeasurementPackage& pkg);

  std::size_t size() const { return records_.size(); }
  const std::vector<SituationRecord>& records() const { return records_; }
  std::vector<const SituationRecord*> records_for(const ConditionKey& key) const;
  std::vector<ConditionKey> condition_keys_with_records() const;

 private:
  void append_to_file(const SituationRecord& rec);

  std::vector<SituationRecord> records_;
  std::set<std::tuple<std::string, std::string, double>> seen_;
  std::optional<std::filesystem::path> file_;
};

inline constexpr std::size_t kMinFitRecords = 20;

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitResult {
  ParameterSet candidate;
  int rank{4};
  bool rank_deficient{false};
  std::size_t record_count{};
};

/// Ordinary least squares of desired_delta_d on the lateral regressors over
/// the records of one condition, solved by a rank-revealing orthogonal
/// decomposition (minimum-norm solution when rank deficient). Throws
/// InsufficientData below min_records.
FitResult fit_parameters(const SituationDatabase& db, const ConditionKey& key,
                         std::int64_t next_version,
                         std::size_t min_records = kMinFitRecords);

struct GateBucketReport {
  ConditionKey key;
  std::size_t records{};
  double mean_before{};
  double mean_after{};
};

/// Non-regression verdict for one candidate: accepted iff no bucket's mean
/// absolute lateral error grows by more than epsilon and the candidate's own
/// bucket strictly improves.
struct GateReport {
  std::int64_t candidate_version{};
  std::optional<ConditionKey> condition;
  std::array<double, 4> weights{};
  std::vector<GateBucketReport> buckets;
  bool accepted{};
  std::string reason;
  double released_at{};
};

inline constexpr double kGateEpsilon = 1e-6;  // m

/// Per-condition released sets plus the release history. The basic set
/// (version 0) is always resolvable and never replaced. Optionally persisted:
/// snapshot file rewritten atomically on install, history appended one line
/// per gate attempt.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(std::filesystem::path snapshot_file,
                 std::filesystem::path history_file);

  /// Released set for the key, else the basic set.
  ParameterSet lookup(const ConditionKey& key) const;
  std::optional<ParameterSet> released(const ConditionKey& key) const;
  const std::map<ConditionKey, ParameterSet>& released_sets() const {
    return released_;
  }
  std::int64_t next_version() const { return next_version_; }

  void install(const ParameterSet& set, const GateReport& report);
  void record_rejection(const GateReport& report);
  const std::vector<GateReport>& history() const { return history_; }

 private:
  void persist_snapshot() const;
  void append_history(const GateReport& report);

  std::map<ConditionKey, ParameterSet> released_;
  std::vector<GateReport> history_;
  std::int64_t next_version_{1};
  std::optional<std::filesystem::path> snapshot_file_;
  std::optional<std::filesystem::path> history_file_;
};

/// Evaluates the candidate on every condition bucket with stored records,
/// using the parameter set each bucket would resolve to after the release.
/// On acceptance the candidate is installed and the report appended to the
/// history; rejection is recorded as well.
GateReport release_gate(const ParameterSet& candidate,
                        const SituationDatabase& db, ParameterStore& store);

struct BackendPaths {
  std::filesystem::path db_file;
  std::filesystem::path store_file;
  std::filesystem::path history_file;
};

struct TrainOutcome {
  ConditionKey key;
  std::optional<GateReport> report;  // empty when the fit was not possible
  std::string error;
};

/// Thread-safe facade combining the situation database and parameter store;
/// this is what the transports and the CLI talk to.
class BackendCore {
 public:
  BackendCore() = default;  // ephemeral, in-memory only
  explicit BackendCore(const BackendPaths& paths);

  std::optional<SituationRecord> store_measurement(
      const MeasurementPackage& pkg);
  ParameterSet lookup_parameters(const ConditionKey& key) const;
  std::size_t record_count() const;

  TrainOutcome train_one(const ConditionKey& key);
  std::vector<TrainOutcome> train_all();

  // Unsynchronized access for setup and assertions in tests.
  SituationDatabase& db() { return db_; }
  ParameterStore& store() { return store_; }

 private:
  mutable std::mutex mu_;
  SituationDatabase db_;
  ParameterStore store_;
};

}  // namespace fleetloop
