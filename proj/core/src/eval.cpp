#include "pcsel/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "pcsel/iou.hpp"

namespace pcsel {
namespace {

std::string format_fixed(double v, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool is_neighbor_ignorable(const EvalConfig& config,
                           const std::string& eval_class,
                           const std::string& gt_class) {
  auto it = config.neighbor_ignore.find(eval_class);
  if (it == config.neighbor_ignore.end()) return false;
  return std::find(it->second.begin(), it->second.end(), gt_class) !=
         it->second.end();
}

}  // namespace

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::moderate: return "moderate";
    case Difficulty::hard: return "hard";
    case Difficulty::ignored: return "ignored";
  }
  return "unknown";
}

EvalConfig EvalConfig::defaults() {
  EvalConfig c;
  c.iou_thresholds = {{"Car", 0.7}, {"Pedestrian", 0.5}, {"Cyclist", 0.5}};
  c.neighbor_ignore = {{"Car", {"Van"}}};
  return c;
}

Difficulty assign_difficulty(const ObjectLabel& label) {
  const double h = label.bbox_height();
  if (h >= 40.0 && label.occlusion <= 0 && label.truncation <= 0.15) {
    return Difficulty::easy;
  }
  if (h >= 25.0 && label.occlusion <= 1 && label.truncation <= 0.30) {
    return Difficulty::moderate;
  }
  if (h >= 25.0 && label.occlusion <= 2 && label.truncation <= 0.50) {
    return Difficulty::hard;
  }
  return Difficulty::ignored;
}

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruth>& gts,
                             const std::string& class_name,
                             Difficulty difficulty, const EvalConfig& config) {
  const auto threshold_it = config.iou_thresholds.find(class_name);
  if (threshold_it == config.iou_thresholds.end()) {
    throw Error(ErrorCode::unknown_class,
                "no IoU threshold configured for " + class_name);
  }
  const double threshold = threshold_it->second;
  for (const Detection& d : dets) {
    if (d.class_name != class_name) {
      throw Error(ErrorCode::mixed_classes,
                  "detection of class " + d.class_name +
                      " passed to matching for " + class_name);
    }
  }

  // Split ground truth into counted (drives TP/FN), ignorable (absorbs
  // matches silently) and DontCare regions (pre-matching discard).
  enum class GtRole { counted, ignorable, dont_care, unrelated };
  std::vector<GtRole> role(gts.size());
  for (size_t g = 0; g < gts.size(); ++g) {
    const GroundTruth& gt = gts[g];
    if (gt.class_name == "DontCare") {
      role[g] = GtRole::dont_care;
    } else if (gt.class_name == class_name) {
      const bool within = gt.difficulty != Difficulty::ignored &&
                          static_cast<int>(gt.difficulty) <=
                              static_cast<int>(difficulty);
      role[g] = within && !gt.ignored ? GtRole::counted : GtRole::ignorable;
    } else if (is_neighbor_ignorable(config, class_name, gt.class_name)) {
      role[g] = GtRole::ignorable;
    } else {
      role[g] = GtRole::unrelated;
    }
  }

  MatchResult result;
  result.detections.assign(dets.size(), MatchLabel::fp);
  for (GtRole r : role) {
    if (r == GtRole::counted) ++result.counted_gt;
  }

  std::vector<std::uint32_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return dets[a].score > dets[b].score;
                   });

  std::vector<bool> gt_taken(gts.size(), false);
  std::uint64_t matched = 0;
  for (std::uint32_t di : order) {
    const Detection& det = dets[di];
    bool discard = false;
    for (size_t g = 0; g < gts.size() && !discard; ++g) {
      if (role[g] == GtRole::dont_care &&
          footprint_overlap_ratio(det.box, gts[g].box) >=
              config.dont_care_overlap) {
        discard = true;
      }
    }
    if (discard) {
      result.detections[di] = MatchLabel::discarded;
      continue;
    }
    auto best_of = [&](GtRole wanted) {
      double best_iou = 0.0;
      ptrdiff_t best = -1;
      for (size_t g = 0; g < gts.size(); ++g) {
        if (role[g] != wanted || gt_taken[g]) continue;
        const double iou = rotated_iou_3d(det.box, gts[g].box);
        if (iou >= threshold && iou > best_iou) {
          best_iou = iou;
          best = static_cast<ptrdiff_t>(g);
        }
      }
      return best;
    };
    if (ptrdiff_t g = best_of(GtRole::counted); g >= 0) {
      gt_taken[g] = true;
      result.detections[di] = MatchLabel::tp;
      ++matched;
    } else if (ptrdiff_t ig = best_of(GtRole::ignorable); ig >= 0) {
      gt_taken[ig] = true;
      result.detections[di] = MatchLabel::absorbed;
    }
  }
  result.fn = result.counted_gt - matched;
  return result;
}

double average_precision_r40(std::vector<ScoredMatch> matches,
                             std::uint64_t total_gt) {
  if (total_gt == 0) return matches.empty() ? 1.0 : 0.0;
  std::sort(matches.begin(), matches.end(),
            [](const ScoredMatch& a, const ScoredMatch& b) {
              return a.score > b.score;
            });
  struct Op {
    double recall, precision;
  };
  std::vector<Op> ops;
  std::uint64_t tp = 0, fp = 0;
  for (size_t i = 0; i < matches.size(); ++i) {
    if (matches[i].tp) ++tp; else ++fp;
    // Operating points exist only where the score strictly drops; equal
    // scores are one indivisible threshold.
    if (i + 1 < matches.size() && matches[i + 1].score == matches[i].score) {
      continue;
    }
    ops.push_back(Op{static_cast<double>(tp) / static_cast<double>(total_gt),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  double sum = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const double r = static_cast<double>(i) / 40.0;
    double best = 0.0;
    for (const Op& op : ops) {
      if (op.recall >= r) best = std::max(best, op.precision);
    }
    sum += best;
  }
  return sum / 40.0;
}

EvalReport evaluate(const std::vector<FrameDetections>& dets,
                    const std::vector<FrameGroundTruth>& gts,
                    const EvalConfig& config) {
  if (dets.size() != gts.size()) {
    throw Error(ErrorCode::frame_id_mismatch,
                "detection and ground-truth frame counts differ");
  }
  std::vector<std::uint32_t> det_order(dets.size());
  std::vector<std::uint32_t> gt_order(gts.size());
  std::iota(det_order.begin(), det_order.end(), 0u);
  std::iota(gt_order.begin(), gt_order.end(), 0u);
  auto by_id = [](const auto& seq) {
    return [&seq](std::uint32_t a, std::uint32_t b) {
      return seq[a].frame_id < seq[b].frame_id;
    };
  };
  std::sort(det_order.begin(), det_order.end(), by_id(dets));
  std::sort(gt_order.begin(), gt_order.end(), by_id(gts));
  for (size_t i = 0; i < det_order.size(); ++i) {
    if (dets[det_order[i]].frame_id != gts[gt_order[i]].frame_id) {
      throw Error(ErrorCode::frame_id_mismatch,
                  "frame " + gts[gt_order[i]].frame_id +
                      " has no matching detection frame");
    }
    if (i > 0 && dets[det_order[i]].frame_id == dets[det_order[i - 1]].frame_id) {
      throw Error(ErrorCode::frame_id_mismatch,
                  "duplicate frame id " + dets[det_order[i]].frame_id);
    }
  }

  EvalReport report;
  for (const auto& [class_name, threshold] : config.iou_thresholds) {
    (void)threshold;
    for (Difficulty difficulty :
         {Difficulty::easy, Difficulty::moderate, Difficulty::hard}) {
      std::vector<ScoredMatch> pooled;
      std::uint64_t total_gt = 0, tp = 0, fp = 0;
      bool any_detection = false;
      for (size_t i = 0; i < det_order.size(); ++i) {
        std::vector<Detection> class_dets;
        for (const Detection& d : dets[det_order[i]].detections) {
          if (d.class_name == class_name) class_dets.push_back(d);
        }
        any_detection = any_detection || !class_dets.empty();
        const MatchResult frame = match_detections(
            class_dets, gts[gt_order[i]].objects, class_name, difficulty,
            config);
        total_gt += frame.counted_gt;
        for (size_t d = 0; d < class_dets.size(); ++d) {
          switch (frame.detections[d]) {
            case MatchLabel::tp:
              pooled.push_back(ScoredMatch{class_dets[d].score, true});
              ++tp;
              break;
            case MatchLabel::fp:
              pooled.push_back(ScoredMatch{class_dets[d].score, false});
              ++fp;
              break;
            case MatchLabel::absorbed:
            case MatchLabel::discarded:
              break;
          }
        }
      }
      if (total_gt == 0 && !any_detection) continue;  // not applicable
      EvalCell cell;
      cell.class_name = class_name;
      cell.difficulty = difficulty;
      cell.ap_percent = 100.0 * average_precision_r40(pooled, total_gt);
      cell.tp = tp;
      cell.fp = fp;
      cell.fn = total_gt - tp;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::string write_report_csv(const EvalReport& report) {
  std::string out = "class,difficulty,ap_percent,tp,fp,fn\n";
  for (const EvalCell& cell : report.cells) {
    out += cell.class_name;
    out += ',';
    out += to_string(cell.difficulty);
    out += ',';
    out += format_fixed(cell.ap_percent, 4);
    out += ',';
    out += std::to_string(cell.tp);
    out += ',';
    out += std::to_string(cell.fp);
    out += ',';
    out += std::to_string(cell.fn);
    out += '\n';
  }
  return out;
}

std::vector<GroundTruth> ground_truth_from_labels(
    const std::vector<ObjectLabel>& labels, const Calibration& calib) {
  std::vector<GroundTruth> gts;
  gts.reserve(labels.size());
  for (const ObjectLabel& label : labels) {
    if (label.dont_care) {
      // Published DontCare rows have sentinel dims and no usable 3D box;
      // synthetic corpora may carry real regions, which we keep.
      if (label.height > 0.0 && label.width > 0.0 && label.length > 0.0) {
        gts.push_back(GroundTruth{label_to_lidar_box(label, calib), "DontCare",
                                  Difficulty::ignored, true});
      }
      continue;
    }
    gts.push_back(GroundTruth{label_to_lidar_box(label, calib),
                              label.class_name, assign_difficulty(label),
                              false});
  }
  return gts;
}

std::string write_detections(const std::vector<Detection>& dets,
                             const Calibration& calib) {
  std::string out;
  for (const Detection& det : dets) {
    const ObjectLabel l = lidar_box_to_label(det.box, det.class_name, calib);
    out += l.class_name;
    for (double v : {l.truncation, static_cast<double>(l.occlusion), l.alpha,
                     l.bbox_left, l.bbox_top, l.bbox_right, l.bbox_bottom,
                     l.height, l.width, l.length, l.x, l.y, l.z, l.rotation_y,
                     det.score}) {
      out += ' ';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::vector<Detection> read_detections(const std::string& text,
                                       const Calibration& calib) {
  std::vector<Detection> dets;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    ObjectLabel l;
    double occ = 0.0, score = 0.0;
    fields >> l.class_name >> l.truncation >> occ >> l.alpha >> l.bbox_left >>
        l.bbox_top >> l.bbox_right >> l.bbox_bottom >> l.height >> l.width >>
        l.length >> l.x >> l.y >> l.z >> l.rotation_y >> score;
    if (!fields) {
      throw Error(ErrorCode::malformed_line,
                  "detection line " + std::to_string(line_no) +
                      " does not have 16 readable fields");
    }
    std::string extra;
    if (fields >> extra) {
      throw Error(ErrorCode::malformed_line,
                  "detection line " + std::to_string(line_no) +
                      " has trailing fields");
    }
    dets.push_back(
        Detection{label_to_lidar_box(l, calib), l.class_name, score});
  }
  return dets;
}

}  // namespace pcsel
