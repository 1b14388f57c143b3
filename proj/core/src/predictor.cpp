#include "fleetloop/predictor.hpp"

#include <cmath>
#include <stdexcept>

namespace fleetloop {

ParameterSet basic_parameters() {
  return ParameterSet{{0.0, 1.0, 1.0, 0.0}, 0, std::nullopt, 0.0};
}

FeatureSnapshot extract_features(const VehicleState& state,
                                 const LaneGeometry& lane,
                                 const ConditionKey& condition,
                                 double capture_distance) {
  const FrenetPose fp = to_frenet(state.pose, lane, capture_distance);
  return FeatureSnapshot{state.v_lon, state.v_lat,    state.a_lon,
                         state.a_lat, fp.d,           condition,
                         state.timestamp};
}

std::array<double, 4> lateral_regressors(const FeatureSnapshot& f,
                                         double horizon) {
  return {1.0, f.v_lat * horizon, 0.5 * f.a_lat * horizon * horizon,
          f.d_offset};
}

PredictedDisplacement predict(const FeatureSnapshot& f, const ParameterSet& p,
                              double horizon) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("predict requires horizon > 0");
  }
  const auto reg = lateral_regressors(f, horizon);
  double delta_d = 0.0;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    delta_d += p.weights[i] * reg[i];
  }
  const double delta_s = f.v_lon * horizon + 0.5 * f.a_lon * horizon * horizon;
  return PredictedDisplacement{delta_s, delta_d, horizon};
}

}  // namespace fleetloop
