#pragma once

#include <string>

#include "fleetloop/lane.hpp"

namespace fleetloop {

/// Physical bound on commanded accelerations; step_state clamps to this.
inline constexpr double kMaxAccel = 8.0;  // m/s^2

/// Fused state of one vehicle as the onboard modules see it. Velocities and
/// accelerations are split into lane-frame longitudinal/lateral components.
struct VehicleState {
  std::string id;
  WorldPose pose;
  double v_lon{};      // m/s
  double v_lat{};      // m/s
  double a_lon{};      // m/s^2
  double a_lat{};      // m/s^2
  double timestamp{};  // s
};

/// Advances the state by one closed-form constant-acceleration step in the
/// lane frame:
///   s += v_lon*dt + a_lon*dt^2/2,  d += v_lat*dt + a_lat*dt^2/2,
/// velocities integrated likewise. Accelerations are clamped to +-kMaxAccel.
/// The caller guarantees the lane covers the resulting arclength.
VehicleState step_state(const VehicleState& state, double a_lon, double a_lat,
                        double dt, const LaneGeometry& lane);

}  // namespace fleetloop
