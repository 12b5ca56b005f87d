#include "pcsel/render.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

namespace pcsel {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt3(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                           std::chars_format::fixed, 3);
  return std::string(buf.data(), res.ptr);
}

struct Bounds {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  bool any = false;

  void add(double x, double y) {
    if (!any) {
      x_lo = x_hi = x;
      y_lo = y_hi = y;
      any = true;
      return;
    }
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }

  void add_box(const OrientedBox3D& box) {
    double xs[4], ys[4];
    box.footprint(xs, ys);
    for (int i = 0; i < 4; ++i) add(xs[i], ys[i]);
  }
};

void append_rect(std::string& svg, const OrientedBox3D& box,
                 const char* style_attrs) {
  // The rect is axis-aligned in its own frame; the transform places and
  // turns it, so the yaw is readable directly from the markup.
  double deg = box.yaw * 180.0 / kPi;
  svg += "    <rect x=\"" + fmt3(-0.5 * box.length) + "\" y=\"" +
         fmt3(-0.5 * box.width) + "\" width=\"" + fmt3(box.length) +
         "\" height=\"" + fmt3(box.width) + "\" transform=\"translate(" +
         fmt3(box.cx) + " " + fmt3(box.cy) + ") rotate(" + fmt3(deg) +
         ")\" " + style_attrs + "/>\n";
}

}  // namespace

std::string render_bev_svg(const PointCloud& cloud,
                           const std::vector<Detection>& detections,
                           const std::vector<GroundTruth>& ground_truth) {
  Bounds bounds;
  for (const Point& p : cloud.points) bounds.add(p.x, p.y);
  for (const Detection& d : detections) bounds.add_box(d.box);
  for (const GroundTruth& g : ground_truth) bounds.add_box(g.box);
  if (!bounds.any) {
    bounds.add(-50.0, -50.0);
    bounds.add(50.0, 50.0);
  }

  // The scene group maps sensor (x, y) to screen (-y, -x): forward points
  // up, left points left.  Children stay in sensor coordinates.
  const double pad = 5.0;
  double vb_x = -bounds.y_hi - pad;
  double vb_y = -bounds.x_hi - pad;
  double vb_w = (bounds.y_hi - bounds.y_lo) + 2.0 * pad;
  double vb_h = (bounds.x_hi - bounds.x_lo) + 2.0 * pad;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
         "width=\"800\" height=\"800\" viewBox=\"" +
         fmt3(vb_x) + " " + fmt3(vb_y) + " " + fmt3(vb_w) + " " + fmt3(vb_h) +
         "\">\n";
  svg += "  <g class=\"scene\" transform=\"matrix(0 -1 -1 0 0 0)\">\n";

  for (const Point& p : cloud.points) {
    svg += "    <circle cx=\"" + fmt3(p.x) + "\" cy=\"" + fmt3(p.y) +
           "\" r=\"0.08\" fill=\"#788\"/>\n";
  }
  for (const GroundTruth& g : ground_truth) {
    append_rect(svg, g.box,
                "fill=\"none\" stroke=\"#556\" stroke-width=\"0.12\" "
                "stroke-dasharray=\"0.5 0.3\"");
  }
  for (const Detection& d : detections) {
    append_rect(svg, d.box,
                "fill=\"none\" stroke=\"#1a9641\" stroke-width=\"0.12\"");
  }

  svg += "  </g>\n</svg>\n";
  return svg;
}

}  // namespace pcsel
