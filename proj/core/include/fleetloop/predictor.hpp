#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "fleetloop/condition.hpp"
#include "fleetloop/kinematics.hpp"

namespace fleetloop {

/// The inputs the prediction model consumed, frozen at capture time. This is
/// exactly what the buffer memorizes and what a measurement package ships.
struct FeatureSnapshot {
  double v_lon{};     // m/s
  double v_lat{};     // m/s
  double a_lon{};     // m/s^2
  double a_lat{};     // m/s^2
  double d_offset{};  // current lateral offset, m
  ConditionKey condition;
  double captured_at{};  // s

  bool operator==(const FeatureSnapshot&) const = default;
};

/// Versioned lateral-model weights. The model form is fixed; only the four
/// weights are adjusted remotely. Version 0 is reserved for the basic set,
/// which has no condition attached (condition == nullopt).
struct ParameterSet {
  std::array<double, 4> weights{0.0, 1.0, 1.0, 0.0};
  std::int64_t version{0};
  std::optional<ConditionKey> condition;  // nullopt = BASIC
  double released_at{0.0};                // s

  bool operator==(const ParameterSet&) const = default;
};

struct PredictedDisplacement {
  double delta_s{};   // m
  double delta_d{};   // m
  double horizon{};   // s

  bool operator==(const PredictedDisplacement&) const = default;
};

/// The version-0 fallback: weights [0, 1, 1, 0], equal to
/// constant-acceleration physics in the lateral channel.
ParameterSet basic_parameters();

/// Builds the feature snapshot from a fused state. d_offset comes from the
/// lane projection of the pose; kinematic fields are copied through.
FeatureSnapshot extract_features(const VehicleState& state,
                                 const LaneGeometry& lane,
                                 const ConditionKey& condition,
                                 double capture_distance =
                                     kDefaultCaptureDistance);

/// Lateral regressor vector [1, v_lat*t_h, a_lat*t_h^2/2, d_offset]. Shared
/// between predict() and the backend fit so both sides use one model form.
std::array<double, 4> lateral_regressors(const FeatureSnapshot& f,
                                         double horizon);

/// Displacement over the horizon. The lateral channel is the weighted
/// regressor sum; the longitudinal channel is fixed constant-acceleration
/// physics and ignores the weights.
PredictedDisplacement predict(const FeatureSnapshot& f, const ParameterSet& p,
                              double horizon);

}  // namespace fleetloop
