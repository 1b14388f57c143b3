#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "fleetloop/lane.hpp"
#include "fleetloop/predictor.hpp"

namespace fleetloop {

struct WatchdogConfig {
  double theta_x{1.0};     // longitudinal trigger threshold, m
  double theta_y{0.2};     // lateral trigger threshold, m
  double horizon{3.0};     // prediction horizon t_h, s
  double tick_rate{25.0};  // system frequency, Hz
};

/// One memorized prediction, held in ego-relative lane coordinates until its
/// countdown runs out. rel_pred is dead-reckoned against the ego's motion on
/// every tick; after expiry t_c keeps the (negative) tick overshoot.
struct BufferedPrediction {
  std::string target_id;
  FrenetPose rel_pred;
  double t_c{};
  FeatureSnapshot features;
  PredictedDisplacement displacement;  // raw model output at issue time
  std::int64_t param_version{};
  double issued_at{};
};

/// Ego movement since the last update, as measured over the interval.
struct EgoMotion {
  double v_lon{};  // m/s
  double v_lat{};  // m/s
  double dt{};     // s
};

struct ResidualReport {
  double e_x{};  // m, >= 0
  double e_y{};  // m, >= 0
  bool triggered{};
  BufferedPrediction entry;
  FrenetPose actual;
};

/// The green-loop payload: inputs, predicted output, desired output,
/// residuals and provenance of one triggered sample.
struct MeasurementPackage {
  std::string vehicle_id;
  std::string target_id;
  FeatureSnapshot features;
  FrenetPose predicted;  // corrected rel_pred at expiry
  FrenetPose actual;     // ego-relative actual position at expiry
  PredictedDisplacement displacement;
  double e_x{};
  double e_y{};
  std::int64_t param_version{};
  double issued_at{};
  double observed_at{};
};

/// Prediction buffer of one vehicle. insert/tick must be called from that
/// vehicle's loop only; returned packages are safe to hand to other threads.
class PredictionBuffer {
 public:
  PredictionBuffer(std::string vehicle_id, WatchdogConfig config);

  const WatchdogConfig& config() const { return config_; }
  const std::string& vehicle_id() const { return vehicle_id_; }
  std::size_t live_count() const { return entries_.size(); }
  const std::deque<BufferedPrediction>& entries() const { return entries_; }

  /// Memorizes a prediction: rel_pred = rel_now + displacement, countdown
  /// initialized to the horizon. For ego self-prediction rel_now is the
  /// origin. Rejects a second insertion for the same target and timestamp,
  /// and displacements whose horizon differs from the configured one.
  const BufferedPrediction& insert(const std::string& target_id,
                                   const PredictedDisplacement& displacement,
                                   const FrenetPose& rel_now,
                                   const FeatureSnapshot& features,
                                   std::int64_t param_version, double now);

  /// Dead-reckons every live entry against the ego motion and counts the
  /// horizon down. Entries reaching t_c <= 0 are removed and returned with
  /// the constant-velocity longitudinal correction applied; the lateral
  /// coordinate is left uncorrected.
  std::vector<BufferedPrediction> tick(const EgoMotion& ego);

 private:
  std::string vehicle_id_;
  WatchdogConfig config_;
  std::deque<BufferedPrediction> entries_;
  std::unordered_map<std::string, double> last_issued_;
};

/// Residuals of an expired entry against the actual ego-relative position.
/// Triggers on strict threshold exceedance in either direction.
ResidualReport compare(const BufferedPrediction& expired,
                       const FrenetPose& actual_rel,
                       const WatchdogConfig& config);

/// Builds the backend package for a triggered report. Throws
/// std::logic_error when the report did not trigger.
MeasurementPackage package(const ResidualReport& report,
                           const std::string& vehicle_id, double now);

}  // namespace fleetloop
