#include "fleetloop/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fleetloop {

VehicleState step_state(const VehicleState& state, double a_lon, double a_lat,
                        double dt, const LaneGeometry& lane) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_state requires dt > 0");
  }
  if (!std::isfinite(state.v_lon) || !std::isfinite(state.v_lat)) {
    throw std::invalid_argument("step_state requires finite velocities");
  }
  a_lon = std::clamp(a_lon, -kMaxAccel, kMaxAccel);
  a_lat = std::clamp(a_lat, -kMaxAccel, kMaxAccel);

  FrenetPose fp = to_frenet(state.pose, lane);
  fp.s += state.v_lon * dt + 0.5 * a_lon * dt * dt;
  fp.d += state.v_lat * dt + 0.5 * a_lat * dt * dt;

  VehicleState out = state;
  out.pose = from_frenet(fp, lane);
  out.v_lon = state.v_lon + a_lon * dt;
  out.v_lat = state.v_lat + a_lat * dt;
  out.a_lon = a_lon;
  out.a_lat = a_lat;
  out.timestamp = state.timestamp + dt;
  return out;
}

}  // namespace fleetloop
