#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pcsel/eval.hpp"
#include "pcsel/point_cloud.hpp"

// Pluggable detector contract plus two concrete detectors: a ground-truth
// perturbing oracle (test double for the evaluation harness) and a classical
// geometric baseline that runs end to end without any trained network.

namespace pcsel {

// Stateless after construction; detect() is pure per frame and safe to call
// concurrently.
class Detector {
 public:
  virtual ~Detector() = default;

  // Emitted boxes always satisfy the OrientedBox3D invariants, and the
  // result is deterministic given the detector's own seed and config.
  virtual std::vector<Detection> detect(const PointCloud& cloud) const = 0;

  virtual std::string id() const = 0;
  virtual double nominal_latency_s() const = 0;
};

struct OracleParams {
  double jitter_sigma_m = 0.0;  // per-axis Normal displacement of centers
  double drop_rate = 0.0;       // probability of omitting a GT box
  double fp_rate = 0.0;         // Poisson mean of false boxes per frame
  std::string fp_class = "Car";
  std::uint64_t seed = 0;
};

// Emits each non-DontCare ground-truth box of the frame, center-jittered
// per axis by Normal(0, jitter_sigma), with probability 1 - drop_rate and
// score 1 / (1 + center error); plus Poisson(fp_rate) far-field false
// boxes whose scores stay strictly below every true-positive score.  With
// zero rates the output is an exact identity on the GT boxes.
// All draws are counter-based on a per-frame seed derived from the frame
// id, so results do not depend on frame iteration order.
// Throws ConfigOutOfRange for rates outside their domain.
std::unique_ptr<Detector> oracle_detector(
    std::map<std::string, std::vector<GroundTruth>> gt_per_frame,
    const OracleParams& params);

struct BaselineParams {
  double ground_inlier_threshold_m = 0.2;
  int ground_refit_rounds = 3;
  double cluster_link_distance_m = 0.6;
  std::size_t min_cluster_size = 10;
  // Representative box length per class, used to classify a fitted box by
  // nearest length.
  std::map<std::string, double> class_lengths = {{"Car", 3.9},
                                                 {"Van", 5.0},
                                                 {"Truck", 10.0},
                                                 {"Pedestrian", 0.8},
                                                 {"Cyclist", 1.8}};
  // Expected cluster point count per class; score = count / expected,
  // clamped to [0, 1].
  std::map<std::string, double> expected_counts = {{"Car", 200.0},
                                                   {"Van", 250.0},
                                                   {"Truck", 400.0},
                                                   {"Pedestrian", 50.0},
                                                   {"Cyclist", 80.0}};
};

// Classical pipeline: iterative least-squares ground-plane fit (fixed
// reselection rounds) -> drop ground inliers -> BEV grid connected
// components -> per-cluster convex hull -> minimum-area rectangle by
// rotating calipers -> height from z extent -> class by nearest length.
// Output is invariant under permutation of the input points.  This makes
// no claim of deep-detector accuracy; it exists for pipeline liveness and
// selector demos.
// Throws ConfigOutOfRange when a parameter leaves its domain.
std::unique_ptr<Detector> baseline_detector(const BaselineParams& params);

}  // namespace pcsel
