#include "pcsel/kitti.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

namespace pcsel {
namespace {

float load_le_f32(const std::uint8_t* p) {
  std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                    static_cast<std::uint32_t>(p[1]) << 8 |
                    static_cast<std::uint32_t>(p[2]) << 16 |
                    static_cast<std::uint32_t>(p[3]) << 24;
  return std::bit_cast<float>(u);
}

void store_le_f32(float f, std::uint8_t* p) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  p[0] = static_cast<std::uint8_t>(u);
  p[1] = static_cast<std::uint8_t>(u >> 8);
  p[2] = static_cast<std::uint8_t>(u >> 16);
  p[3] = static_cast<std::uint8_t>(u >> 24);
}

// Shortest decimal form that round-trips the exact double value.
std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::array<double, 3> mat_vec(const std::array<std::array<double, 3>, 3>& m,
                              const std::array<double, 3>& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

std::array<double, 3> mat_t_vec(const std::array<std::array<double, 3>, 3>& m,
                                const std::array<double, 3>& v) {
  return {m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
          m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
          m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2]};
}

void check_orthonormal(const std::array<std::array<double, 3>, 3>& m,
                       const char* name) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += m[k][i] * m[k][j];
      const double expected = i == j ? 1.0 : 0.0;
      if (std::fabs(dot - expected) > 1e-6) {
        throw Error(ErrorCode::malformed_matrix,
                    std::string(name) + " rotation block is not orthonormal");
      }
    }
  }
}

}  // namespace

std::array<double, 3> Calibration::velo_to_cam(
    const std::array<double, 3>& p) const {
  auto q = mat_vec(tr_rot, p);
  for (int i = 0; i < 3; ++i) q[i] += tr_trans[i];
  return mat_vec(r0, q);
}

std::array<double, 3> Calibration::cam_to_velo(
    const std::array<double, 3>& p) const {
  auto q = mat_t_vec(r0, p);
  for (int i = 0; i < 3; ++i) q[i] -= tr_trans[i];
  return mat_t_vec(tr_rot, q);
}

Calibration nominal_calibration() {
  Calibration c;
  c.tr_rot = {{{0.0, -1.0, 0.0}, {0.0, 0.0, -1.0}, {1.0, 0.0, 0.0}}};
  c.tr_trans = {0.0, 0.0, 0.0};
  c.r0 = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  return c;
}

PointCloud read_velodyne_bin(const std::vector<std::uint8_t>& bytes,
                             std::string frame_id) {
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::length_not_multiple_of_16,
                "velodyne payload is " + std::to_string(bytes.size()) +
                    " bytes");
  }
  PointCloud cloud;
  cloud.frame_id = std::move(frame_id);
  cloud.points.resize(bytes.size() / 16);
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const std::uint8_t* rec = bytes.data() + i * 16;
    Point& pt = cloud.points[i];
    pt.x = load_le_f32(rec);
    pt.y = load_le_f32(rec + 4);
    pt.z = load_le_f32(rec + 8);
    pt.intensity = load_le_f32(rec + 12);
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z) ||
        !std::isfinite(pt.intensity)) {
      throw Error(ErrorCode::non_finite_value,
                  "point " + std::to_string(i) + " is not finite");
    }
  }
  return cloud;
}

std::vector<std::uint8_t> write_velodyne_bin(const PointCloud& cloud) {
  std::vector<std::uint8_t> bytes(cloud.points.size() * 16);
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    std::uint8_t* rec = bytes.data() + i * 16;
    store_le_f32(cloud.points[i].x, rec);
    store_le_f32(cloud.points[i].y, rec + 4);
    store_le_f32(cloud.points[i].z, rec + 8);
    store_le_f32(cloud.points[i].intensity, rec + 12);
  }
  return bytes;
}

std::vector<ObjectLabel> read_labels(const std::string& text) {
  std::vector<ObjectLabel> labels;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    ObjectLabel l;
    double occ = 0.0;
    fields >> l.class_name >> l.truncation >> occ >> l.alpha >> l.bbox_left >>
        l.bbox_top >> l.bbox_right >> l.bbox_bottom >> l.height >> l.width >>
        l.length >> l.x >> l.y >> l.z >> l.rotation_y;
    if (!fields) {
      throw Error(ErrorCode::malformed_line,
                  "label line " + std::to_string(line_no) +
                      " does not have 15 readable fields");
    }
    std::string extra;
    if (fields >> extra) {
      throw Error(ErrorCode::malformed_line,
                  "label line " + std::to_string(line_no) +
                      " has trailing fields");
    }
    l.dont_care = l.class_name == "DontCare";
    if (!l.dont_care) {
      // Published DontCare rows carry -1 sentinels, so the range checks only
      // bind for real objects.
      if (occ != std::floor(occ) || occ < 0.0 || occ > 3.0) {
        throw Error(ErrorCode::field_out_of_range,
                    "line " + std::to_string(line_no) + ": occlusion " +
                        format_double(occ));
      }
      if (l.truncation < 0.0 || l.truncation > 1.0) {
        throw Error(ErrorCode::field_out_of_range,
                    "line " + std::to_string(line_no) + ": truncation " +
                        format_double(l.truncation));
      }
      if (l.bbox_right < l.bbox_left || l.bbox_bottom < l.bbox_top) {
        throw Error(ErrorCode::field_out_of_range,
                    "line " + std::to_string(line_no) + ": inverted bbox2d");
      }
      if (!(l.height > 0.0) || !(l.width > 0.0) || !(l.length > 0.0)) {
        throw Error(ErrorCode::field_out_of_range,
                    "line " + std::to_string(line_no) +
                        ": non-positive dims");
      }
    }
    l.occlusion = static_cast<int>(occ);
    labels.push_back(std::move(l));
  }
  return labels;
}

std::string write_labels(const std::vector<ObjectLabel>& labels) {
  std::string out;
  for (const ObjectLabel& l : labels) {
    out += l.class_name;
    for (double v : {l.truncation, static_cast<double>(l.occlusion), l.alpha,
                     l.bbox_left, l.bbox_top, l.bbox_right, l.bbox_bottom,
                     l.height, l.width, l.length, l.x, l.y, l.z,
                     l.rotation_y}) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

Calibration read_calibration(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  bool have_tr = false, have_r0 = false;
  Calibration calib;
  while (std::getline(lines, line)) {
    const size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    key.erase(key.find_last_not_of(" \t") + 1);
    const bool is_tr = key == "Tr_velo_to_cam";
    const bool is_r0 = key == "R0_rect";
    if (!is_tr && !is_r0) continue;
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> v;
    double d = 0.0;
    while (values >> d) v.push_back(d);
    if (is_tr) {
      if (v.size() != 12) {
        throw Error(ErrorCode::malformed_matrix,
                    "Tr_velo_to_cam needs 12 values, got " +
                        std::to_string(v.size()));
      }
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) calib.tr_rot[r][c] = v[r * 4 + c];
        calib.tr_trans[r] = v[r * 4 + 3];
      }
      have_tr = true;
    } else {
      if (v.size() != 9) {
        throw Error(ErrorCode::malformed_matrix,
                    "R0_rect needs 9 values, got " + std::to_string(v.size()));
      }
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) calib.r0[r][c] = v[r * 3 + c];
      have_r0 = true;
    }
  }
  if (!have_tr) throw Error(ErrorCode::missing_key, "Tr_velo_to_cam");
  if (!have_r0) throw Error(ErrorCode::missing_key, "R0_rect");
  check_orthonormal(calib.tr_rot, "Tr_velo_to_cam");
  check_orthonormal(calib.r0, "R0_rect");
  return calib;
}

std::string write_calibration(const Calibration& calib) {
  std::string out = "Tr_velo_to_cam:";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out += ' ' + format_double(calib.tr_rot[r][c]);
    out += ' ' + format_double(calib.tr_trans[r]);
  }
  out += "\nR0_rect:";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out += ' ' + format_double(calib.r0[r][c]);
  out += '\n';
  return out;
}

OrientedBox3D label_to_lidar_box(const ObjectLabel& label,
                                 const Calibration& calib) {
  const auto bottom = calib.cam_to_velo({label.x, label.y, label.z});
  return OrientedBox3D::make(
      bottom[0], bottom[1], bottom[2] + label.height / 2.0, label.length,
      label.width, label.height,
      normalize_angle(-label.rotation_y - std::numbers::pi / 2.0));
}

ObjectLabel lidar_box_to_label(const OrientedBox3D& box,
                               const std::string& class_name,
                               const Calibration& calib) {
  ObjectLabel l;
  l.class_name = class_name;
  l.dont_care = class_name == "DontCare";
  l.height = box.height;
  l.width = box.width;
  l.length = box.length;
  const auto cam = calib.velo_to_cam({box.cx, box.cy, box.cz - box.height / 2.0});
  l.x = cam[0];
  l.y = cam[1];
  l.z = cam[2];
  l.rotation_y = normalize_angle(-box.yaw - std::numbers::pi / 2.0);
  return l;
}

}  // namespace pcsel
