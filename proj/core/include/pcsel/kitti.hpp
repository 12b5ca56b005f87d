#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pcsel/point_cloud.hpp"

// Readers and writers for the KITTI object-detection interchange formats:
// velodyne binary scans, label text files, and calibration files, plus the
// camera-frame to sensor-frame box conversion they imply.

namespace pcsel {

// One line of a KITTI label file.  Positions are in the camera frame
// (x right, y down, z forward); `location` is the center of the box bottom
// face and dims are (height, width, length).
struct ObjectLabel {
  std::string class_name;
  double truncation = 0.0;   // [0, 1]
  int occlusion = 0;         // {0, 1, 2, 3}
  double alpha = 0.0;
  double bbox_left = 0.0, bbox_top = 0.0, bbox_right = 0.0, bbox_bottom = 0.0;
  double height = 0.0, width = 0.0, length = 0.0;  // meters
  double x = 0.0, y = 0.0, z = 0.0;                // camera frame, meters
  double rotation_y = 0.0;                         // yaw about camera y

  bool dont_care = false;  // DontCare rows are retained but never evaluated

  double bbox_height() const { return bbox_bottom - bbox_top; }
};

// Sensor-to-camera calibration: the rigid transform `Tr_velo_to_cam` and the
// rectifying rotation `R0_rect`.  A camera-frame (rectified) position is
// r0 * (tr_rot * p_velo + tr_trans).
struct Calibration {
  std::array<std::array<double, 3>, 3> tr_rot{};
  std::array<double, 3> tr_trans{};
  std::array<std::array<double, 3>, 3> r0{};

  std::array<double, 3> velo_to_cam(const std::array<double, 3>& p) const;
  std::array<double, 3> cam_to_velo(const std::array<double, 3>& p) const;
};

// The standard sensor/camera mounting: camera x = -sensor y,
// camera y = -sensor z, camera z = sensor x, no offset, identity rectification.
Calibration nominal_calibration();

// Parses a velodyne scan: consecutive 16-byte records of four little-endian
// IEEE-754 floats (x, y, z, intensity).
// Throws LengthNotMultipleOf16 and NonFiniteValue.
PointCloud read_velodyne_bin(const std::vector<std::uint8_t>& bytes,
                             std::string frame_id = "");

// Exact inverse of read_velodyne_bin (bit-identical round trip).
std::vector<std::uint8_t> write_velodyne_bin(const PointCloud& cloud);

// Parses a KITTI label file (15 whitespace-separated fields per line).
// DontCare rows are retained with `dont_care` set and are exempt from the
// range checks, matching how the published files encode them (-1 fields).
// Throws MalformedLine and FieldOutOfRange.
std::vector<ObjectLabel> read_labels(const std::string& text);

std::string write_labels(const std::vector<ObjectLabel>& labels);

// Parses a KITTI calibration file: `key: v1 v2 ...` lines, of which
// Tr_velo_to_cam (3x4) and R0_rect (3x3) are required; other keys are
// ignored.  Rotation blocks must be orthonormal within 1e-6.
// Throws MissingKey and MalformedMatrix.
Calibration read_calibration(const std::string& text);

std::string write_calibration(const Calibration& calib);

// Converts a camera-frame label to a sensor-frame box: the bottom-face
// center maps through the inverse calibration, the center lifts by height/2
// along the sensor z axis, and yaw = -rotation_y - pi/2 (normalized).
// Throws DegenerateDims for non-positive dims (e.g. raw DontCare rows).
OrientedBox3D label_to_lidar_box(const ObjectLabel& label,
                                 const Calibration& calib);

// Inverse of label_to_lidar_box for the fields a box determines: fills
// location, dims and rotation_y of a label with the given class name.  The
// image-plane fields are zeroed (this library does not project to image
// space).
ObjectLabel lidar_box_to_label(const OrientedBox3D& box,
                               const std::string& class_name,
                               const Calibration& calib);

}  // namespace pcsel
