#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace fleetloop {

/// World-frame pose. Heading is normalized to (-pi, pi].
struct WorldPose {
  double x{};        // m
  double y{};        // m
  double heading{};  // rad

  bool operator==(const WorldPose&) const = default;
};

/// Lane-frame (Frenet) position: arclength along the centerline and signed
/// lateral offset, positive left of the driving direction.
struct FrenetPose {
  double s{};  // m
  double d{};  // m

  bool operator==(const FrenetPose&) const = default;
};

double normalize_heading(double rad);

/// Thrown when a pose is farther from the centerline than the capture
/// distance allows.
class OffLaneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Piecewise-linear lane centerline with precomputed cumulative arclength
/// and per-segment unit tangents. Immutable after construction.
class LaneGeometry {
 public:
  struct Point {
    double x{};
    double y{};
  };

  // Requires >= 2 points with distinct consecutive entries.
  explicit LaneGeometry(std::vector<Point> centerline);

  // CSV with header "x,y", one centerline point per row, meters.
  static LaneGeometry from_csv(const std::filesystem::path& file);

  // Straight lane along the world x-axis from the origin.
  static LaneGeometry straight(double length);

  double total_length() const { return cumulative_.back(); }
  const std::vector<Point>& centerline() const { return points_; }
  const std::vector<double>& cumulative_arclength() const {
    return cumulative_;
  }
  std::size_t segment_count() const { return points_.size() - 1; }
  Point segment_start(std::size_t i) const { return points_[i]; }
  Point segment_tangent(std::size_t i) const { return tangents_[i]; }
  double segment_length(std::size_t i) const { return lengths_[i]; }

 private:
  std::vector<Point> points_;
  std::vector<double> cumulative_;  // arclength at each point, starts at 0
  std::vector<Point> tangents_;     // unit tangent per segment
  std::vector<double> lengths_;     // length per segment
};

inline constexpr double kDefaultCaptureDistance = 20.0;  // m

/// Projects a world pose onto the lane. s is the arclength of the nearest
/// centerline projection, d the signed perpendicular offset (positive left).
/// Corner ties break toward the lower-arclength segment. Throws OffLaneError
/// beyond the capture distance.
FrenetPose to_frenet(const WorldPose& pose, const LaneGeometry& lane,
                     double capture_distance = kDefaultCaptureDistance);

/// Inverse transform; heading is the tangent direction of the containing
/// segment. Throws std::out_of_range when s is outside [0, total_length].
WorldPose from_frenet(const FrenetPose& fp, const LaneGeometry& lane);

}  // namespace fleetloop
