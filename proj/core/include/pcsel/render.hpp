#pragma once

#include <string>
#include <vector>

#include "pcsel/eval.hpp"
#include "pcsel/point_cloud.hpp"

// Top-down (bird's-eye-view) scene rendering to SVG 1.1 text: points as
// dots, detections as green rotated rectangles, ground truth dashed.

namespace pcsel {

// Deterministic for fixed input: same bytes on every call.  The scene
// group is always present, even when all inputs are empty.  Each detection
// contributes exactly one <rect> whose transform carries the box yaw.
std::string render_bev_svg(const PointCloud& cloud,
                           const std::vector<Detection>& detections,
                           const std::vector<GroundTruth>& ground_truth = {});

}  // namespace pcsel
