#include "fleetloop/lane.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace fleetloop {

double normalize_heading(double rad) {
  const double two_pi = 2.0 * std::numbers::pi;
  double h = std::fmod(rad, two_pi);
  if (h <= -std::numbers::pi) h += two_pi;
  if (h > std::numbers::pi) h -= two_pi;
  return h;
}

LaneGeometry::LaneGeometry(std::vector<Point> centerline)
    : points_(std::move(centerline)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("lane centerline needs at least 2 points");
  }
  cumulative_.reserve(points_.size());
  tangents_.reserve(points_.size() - 1);
  lengths_.reserve(points_.size() - 1);
  cumulative_.push_back(0.0);
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const double dx = points_[i + 1].x - points_[i].x;
    const double dy = points_[i + 1].y - points_[i].y;
    const double len = std::hypot(dx, dy);
    if (len <= 0.0) {
      throw std::invalid_argument(
          "lane centerline has duplicate consecutive points at index " +
          std::to_string(i));
    }
    lengths_.push_back(len);
    tangents_.push_back(Point{dx / len, dy / len});
    cumulative_.push_back(cumulative_.back() + len);
  }
}

LaneGeometry LaneGeometry::from_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("cannot open lane file: " + file.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("lane file is empty: " + file.string());
  }
  // Tolerate a UTF-8 BOM and trailing CR.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y") {
    throw std::runtime_error("lane file must start with header \"x,y\": " +
                             file.string());
  }
  std::vector<Point> pts;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("lane file row " + std::to_string(row) +
                               " is not \"x,y\"");
    }
    try {
      pts.push_back(Point{std::stod(line.substr(0, comma)),
                          std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw std::runtime_error("lane file row " + std::to_string(row) +
                               " has a non-numeric coordinate");
    }
  }
  return LaneGeometry(std::move(pts));
}

LaneGeometry LaneGeometry::straight(double length) {
  if (!(length > 0.0)) {
    throw std::invalid_argument("straight lane length must be positive");
  }
  return LaneGeometry({Point{0.0, 0.0}, Point{length, 0.0}});
}

FrenetPose to_frenet(const WorldPose& pose, const LaneGeometry& lane,
                     double capture_distance) {
  double best_dist2 = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  double best_d = 0.0;
  const auto& cum = lane.cumulative_arclength();
  for (std::size_t i = 0; i < lane.segment_count(); ++i) {
    const auto p = lane.segment_start(i);
    const auto u = lane.segment_tangent(i);
    const double rx = pose.x - p.x;
    const double ry = pose.y - p.y;
    const double t =
        std::clamp(rx * u.x + ry * u.y, 0.0, lane.segment_length(i));
    const double dx = rx - u.x * t;
    const double dy = ry - u.y * t;
    const double dist2 = dx * dx + dy * dy;
    // Strict comparison keeps the lower-arclength segment on corner ties.
    if (dist2 < best_dist2) {
      best_dist2 = dist2;
      best_s = cum[i] + t;
      best_d = u.x * ry - u.y * rx;  // perpendicular offset, positive left
    }
  }
  if (std::sqrt(best_dist2) > capture_distance) {
    throw OffLaneError("pose is off-lane: " + std::to_string(std::sqrt(best_dist2)) +
                       " m from the centerline exceeds the capture distance of " +
                       std::to_string(capture_distance) + " m");
  }
  return FrenetPose{best_s, best_d};
}

WorldPose from_frenet(const FrenetPose& fp, const LaneGeometry& lane) {
  const auto& cum = lane.cumulative_arclength();
  if (fp.s < 0.0 || fp.s > lane.total_length()) {
    throw std::out_of_range("frenet s=" + std::to_string(fp.s) +
                            " outside [0, " +
                            std::to_string(lane.total_length()) + "]");
  }
  // Segment i covers [cum[i], cum[i+1]); s == total length maps to the last.
  auto it = std::upper_bound(cum.begin(), cum.end(), fp.s);
  std::size_t i = static_cast<std::size_t>(it - cum.begin());
  i = (i == 0) ? 0 : i - 1;
  if (i >= lane.segment_count()) i = lane.segment_count() - 1;
  const auto p = lane.segment_start(i);
  const auto u = lane.segment_tangent(i);
  const double t = fp.s - cum[i];
  // Left normal of the tangent.
  const double nx = -u.y;
  const double ny = u.x;
  return WorldPose{p.x + u.x * t + nx * fp.d, p.y + u.y * t + ny * fp.d,
                   normalize_heading(std::atan2(u.y, u.x))};
}

}  // namespace fleetloop
