#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcsel/kitti.hpp"
#include "pcsel/point_cloud.hpp"

// Detection quality evaluation: per-class, per-difficulty average precision
// over 40 recall positions, with greedy score-ordered matching on rotated
// 3D IoU.

namespace pcsel {

enum class Difficulty : int { easy = 0, moderate = 1, hard = 2, ignored = 3 };

const char* to_string(Difficulty d);

// One detected object in the sensor frame with its confidence.
struct Detection {
  OrientedBox3D box;
  std::string class_name;
  double score = 0.0;
};

// One ground-truth object prepared for evaluation.  DontCare regions carry
// class_name == "DontCare" and are handled by the discard rule rather than
// by matching.
struct GroundTruth {
  OrientedBox3D box;
  std::string class_name;
  Difficulty difficulty = Difficulty::easy;
  bool ignored = false;
};

struct EvalConfig {
  // Minimum rotated 3D IoU for a match, per evaluated class.  The key set
  // also defines which classes evaluate() reports on.
  std::map<std::string, double> iou_thresholds;
  // Classes whose ground truth may absorb a detection of the evaluated
  // class without penalty (e.g. a Van matched by a Car detection).
  std::map<std::string, std::vector<std::string>> neighbor_ignore;
  // A detection whose BEV footprint overlaps a DontCare region by at least
  // this fraction of its own footprint is discarded before matching.
  double dont_care_overlap = 0.5;

  static EvalConfig defaults();
};

// KITTI difficulty from image-plane box height (px), occlusion and
// truncation: easy needs >= 40 px, occlusion 0 and truncation <= 0.15;
// moderate >= 25 px, <= 1, <= 0.30; hard >= 25 px, <= 2, <= 0.50; anything
// weaker is ignored.  Returns the easiest bin the label qualifies for.
Difficulty assign_difficulty(const ObjectLabel& label);

enum class MatchLabel { tp, fp, absorbed, discarded };

struct MatchResult {
  std::vector<MatchLabel> detections;  // parallel to the input detections
  std::uint64_t counted_gt = 0;        // GTs eligible at this difficulty
  std::uint64_t fn = 0;                // counted GTs left unmatched
};

// Greedy matching for one frame, one class, one difficulty: detections in
// descending score order (ties by input order) each claim the unmatched
// counted GT with the highest IoU >= threshold.  A detection that instead
// overlaps an ignorable GT (same class above the difficulty cut or flagged
// ignored, or a neighbor-ignorable class) is absorbed: neither TP nor FP.
// Counted GTs left unmatched are false negatives.
// Throws MixedClasses if a detection's class differs from `class_name`.
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruth>& gts,
                             const std::string& class_name,
                             Difficulty difficulty, const EvalConfig& config);

struct ScoredMatch {
  double score = 0.0;
  bool tp = false;
};

// AP over 40 recall positions: AP = (1/40) * sum_{i=1..40} p(i/40) where
// p(r) is the highest precision at any operating point with recall >= r
// (0 if none).  Equal scores collapse to one operating point, so the value
// is independent of how ties were ordered.  With no ground truth the result
// is 0 if any detection is present and vacuously 1 otherwise.
double average_precision_r40(std::vector<ScoredMatch> matches,
                             std::uint64_t total_gt);

struct FrameDetections {
  std::string frame_id;
  std::vector<Detection> detections;
};

struct FrameGroundTruth {
  std::string frame_id;
  std::vector<GroundTruth> objects;
};

struct EvalCell {
  std::string class_name;
  Difficulty difficulty = Difficulty::easy;
  double ap_percent = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  std::vector<EvalCell> cells;
};

// Pools matches across frames and reports AP x100 plus TP/FP/FN counts for
// every (class in config, difficulty) cell.  Cells with neither ground
// truth nor detections are not applicable and are omitted.  Frames are
// aligned by frame_id; a mismatch between the two sequences throws
// FrameIdMismatch.  The result does not depend on frame order.
EvalReport evaluate(const std::vector<FrameDetections>& dets,
                    const std::vector<FrameGroundTruth>& gts,
                    const EvalConfig& config);

// CSV with header class,difficulty,ap_percent,tp,fp,fn.
std::string write_report_csv(const EvalReport& report);

// Converts parsed labels to evaluation ground truth: real objects get their
// sensor-frame box and difficulty; DontCare rows with usable dims become
// regions, DontCare rows with sentinel dims are dropped.
std::vector<GroundTruth> ground_truth_from_labels(
    const std::vector<ObjectLabel>& labels, const Calibration& calib);

// Detection interchange: KITTI label lines extended with a trailing score
// field (16 fields).  Boxes convert through the calibration both ways.
std::string write_detections(const std::vector<Detection>& dets,
                             const Calibration& calib);
std::vector<Detection> read_detections(const std::string& text,
                                       const Calibration& calib);

}  // namespace pcsel
