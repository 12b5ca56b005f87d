#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pcsel/kitti.hpp"
#include "pcsel/point_cloud.hpp"

// Feature extraction from inference-side data: how sparse a stream is
// relative to a reference corpus, and how noisy its returns are.

namespace pcsel {

// Density reference against which inference streams are normalized,
// typically measured once over the training corpus.
struct ReferenceStats {
  double mean_points_per_frame = 0.0;
  std::uint64_t frame_count = 0;
  std::string source_id;
};

// Features of an inference stream that drive model selection.
struct DataFeatures {
  // mean points per frame over the stream, divided by the reference mean
  double normalized_point_count = 1.0;
  // measured or declared noise, absent when neither is available
  std::optional<double> noise_sigma;
  std::uint64_t frames_analyzed = 0;

  bool operator==(const DataFeatures&) const = default;
};

// Throws EmptyCorpus.
ReferenceStats reference_stats(const std::vector<PointCloud>& frames,
                               std::string source_id);
ReferenceStats reference_stats_from_counts(
    const std::vector<std::uint64_t>& counts, std::string source_id);

// Estimates the Gaussian displacement sigma of a cloud from local planarity:
// up to 2000 seeded anchor points each get a least-squares plane through
// their k nearest neighbors; the estimate is the median orthogonal residual
// RMS divided by the calibration constant 0.92 (the residual RMS of a
// plane fit understates the true sigma because the fit consumes three
// degrees of freedom; 0.92 was measured once on synthetic planes at k=16).
// Requires k >= 8 and more than k points; throws TooFewPoints.
double estimate_noise_sigma(const PointCloud& cloud, int k = 16,
                            std::uint64_t seed = 0);

// Features of a stream of frames against a reference: density from the mean
// frame size, noise from `declared_noise` when given, otherwise estimated
// over a small evenly spaced sample of frames (absent if no frame has
// enough points).  Deterministic given frames, ref and seed.
// Throws EmptyStream and EmptyReference.
DataFeatures analyze_stream(const std::vector<PointCloud>& frames,
                            const ReferenceStats& ref,
                            std::optional<double> declared_noise = {},
                            std::uint64_t seed = 0);

// Per-class corpus statistics over camera-frame labels.
struct ClassStatistics {
  // 1 m BEV occupancy cells keyed by (floor(x), floor(z)) of the camera
  // location: lateral offset and forward range.
  std::map<std::pair<std::int64_t, std::int64_t>, std::uint64_t> heat;
  // rotation_y binned at 10 degrees from -180; bin b covers
  // [-180 + 10b, -170 + 10b).
  std::array<std::uint64_t, 36> orientation{};
  // objects-in-frame count -> number of frames
  std::map<std::uint64_t, std::uint64_t> objects_per_frame;
};

struct DatasetStatistics {
  std::map<std::string, ClassStatistics> classes;
  std::uint64_t frame_count = 0;
};

// Tallies every non-DontCare label; every class seen anywhere gets an
// objects-per-frame entry for every frame (including zero counts).
DatasetStatistics dataset_statistics(
    const std::vector<std::vector<ObjectLabel>>& frames);

// CSV renderings: columns documented in each header line.
std::string write_heat_csv(const DatasetStatistics& stats);
std::string write_orientation_csv(const DatasetStatistics& stats);
std::string write_objects_per_frame_csv(const DatasetStatistics& stats);

// Key-value persistence for ReferenceStats (mean_points_per_frame=,
// frame_count=, source_id= lines).
std::string write_reference_stats(const ReferenceStats& ref);
ReferenceStats read_reference_stats(const std::string& text);

}  // namespace pcsel
