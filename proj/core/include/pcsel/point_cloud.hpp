#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pcsel/errors.hpp"

namespace pcsel {

// One LIDAR return: sensor-frame position in meters plus reflectance.
// Stored as 32-bit floats to match the on-disk velodyne record exactly, so a
// read/write round trip is bit-identical.
struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;

  bool operator==(const Point&) const = default;
};

// Points of one frame in the sensor frame (x forward, y left, z up).
struct PointCloud {
  std::string frame_id;
  std::vector<Point> points;

  bool operator==(const PointCloud&) const = default;
};

// Normalizes an angle to the half-open interval (-pi, pi].
inline double normalize_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

// Upright 3D bounding box in the sensor frame.  `center` is the geometric
// center (not the bottom face), dims are (length, width, height) with
// length measured along the heading axis, and yaw rotates about +z.
struct OrientedBox3D {
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double length = 0.0, width = 0.0, height = 0.0;
  double yaw = 0.0;  // always kept in (-pi, pi]

  static OrientedBox3D make(double cx, double cy, double cz, double length,
                            double width, double height, double yaw) {
    if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
      throw Error(ErrorCode::degenerate_dims,
                  "box dims must be strictly positive");
    }
    return OrientedBox3D{cx, cy, cz, length, width, height,
                         normalize_angle(yaw)};
  }

  double volume() const { return length * width * height; }

  // The four BEV footprint corners, counter-clockwise.
  void footprint(double xs[4], double ys[4]) const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    const double hl = 0.5 * length, hw = 0.5 * width;
    const double ex[4] = {hl, -hl, -hl, hl};
    const double ey[4] = {hw, hw, -hw, -hw};
    for (int i = 0; i < 4; ++i) {
      xs[i] = cx + ex[i] * c - ey[i] * s;
      ys[i] = cy + ex[i] * s + ey[i] * c;
    }
  }

  bool operator==(const OrientedBox3D&) const = default;
};

}  // namespace pcsel
