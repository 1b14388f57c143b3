#include "fleetloop/watchdog.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace fleetloop {

PredictionBuffer::PredictionBuffer(std::string vehicle_id,
                                   WatchdogConfig config)
    : vehicle_id_(std::move(vehicle_id)), config_(config) {
  if (!(config_.theta_x > 0.0) || !(config_.theta_y > 0.0)) {
    throw std::invalid_argument("watchdog thresholds must be positive");
  }
  if (!(config_.horizon > 0.0) || !(config_.tick_rate > 0.0)) {
    throw std::invalid_argument("watchdog horizon and tick rate must be positive");
  }
}

const BufferedPrediction& PredictionBuffer::insert(
    const std::string& target_id, const PredictedDisplacement& displacement,
    const FrenetPose& rel_now, const FeatureSnapshot& features,
    std::int64_t param_version, double now) {
  if (displacement.horizon != config_.horizon) {
    throw std::invalid_argument(
        "displacement horizon does not match the watchdog horizon");
  }
  if (auto it = last_issued_.find(target_id);
      it != last_issued_.end() && it->second == now) {
    throw std::invalid_argument("duplicate prediction for target \"" +
                                target_id + "\" at t=" + std::to_string(now));
  }
  last_issued_[target_id] = now;
  entries_.push_back(BufferedPrediction{
      target_id,
      FrenetPose{rel_now.s + displacement.delta_s,
                 rel_now.d + displacement.delta_d},
      config_.horizon, features, displacement, param_version, now});
  return entries_.back();
}

std::vector<BufferedPrediction> PredictionBuffer::tick(const EgoMotion& ego) {
  if (!(ego.dt > 0.0)) {
    throw std::invalid_argument("tick requires dt > 0");
  }
  for (auto& entry : entries_) {
    entry.rel_pred.s -= ego.v_lon * ego.dt;
    entry.rel_pred.d -= ego.v_lat * ego.dt;
    entry.t_c -= ego.dt;
  }
  std::vector<BufferedPrediction> expired;
  // Shared horizon means entries expire in insertion order.
  while (!entries_.empty() && entries_.front().t_c <= 0.0) {
    BufferedPrediction e = std::move(entries_.front());
    entries_.pop_front();
    // Undo the longitudinal integration past the exact horizon instant; the
    // overshoot -t_c is below one tick.
    e.rel_pred.s += ego.v_lon * (-e.t_c);
    expired.push_back(std::move(e));
  }
  return expired;
}

ResidualReport compare(const BufferedPrediction& expired,
                       const FrenetPose& actual_rel,
                       const WatchdogConfig& config) {
  if (expired.t_c > 0.0) {
    throw std::logic_error("compare called on a live entry");
  }
  const double e_x = std::fabs(actual_rel.s - expired.rel_pred.s);
  const double e_y = std::fabs(actual_rel.d - expired.rel_pred.d);
  const bool triggered = e_x > config.theta_x || e_y > config.theta_y;
  return ResidualReport{e_x, e_y, triggered, expired, actual_rel};
}

MeasurementPackage package(const ResidualReport& report,
                           const std::string& vehicle_id, double now) {
  if (!report.triggered) {
    throw std::logic_error("package requires a triggered report");
  }
  return MeasurementPackage{vehicle_id,
                            report.entry.target_id,
                            report.entry.features,
                            report.entry.rel_pred,
                            report.actual,
                            report.entry.displacement,
                            report.e_x,
                            report.e_y,
                            report.entry.param_version,
                            report.entry.issued_at,
                            now};
}

}  // namespace fleetloop
