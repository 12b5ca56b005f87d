#include "pcsel/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

#include "pcsel/rng.hpp"

namespace pcsel {
namespace {

constexpr int kMaxAnchors = 2000;
constexpr double kPlaneFitCalibration = 0.92;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Minimal 3D kd-tree over the cloud for k-nearest-neighbor queries.  Splits
// cycle through the axes at the median point; queries keep the k best in a
// bounded max-heap ordered by (distance, index) so equidistant neighbors
// resolve deterministically.
class KdTree {
 public:
  explicit KdTree(const std::vector<Point>& points) : points_(points) {
    index_.resize(points.size());
    std::iota(index_.begin(), index_.end(), 0u);
    nodes_.reserve(points.size());
    root_ = build(0, static_cast<int>(points.size()), 0);
  }

  // k nearest neighbors of points_[query], excluding the query point itself.
  std::vector<std::uint32_t> nearest(std::uint32_t query, int k) const {
    Heap heap;
    search(root_, query, k, heap);
    std::vector<std::uint32_t> out(heap.size());
    for (size_t i = heap.size(); i-- > 0;) {
      out[i] = heap.top().second;
      heap.pop();
    }
    return out;
  }

 private:
  struct Node {
    std::uint32_t point;
    int left, right;
    int axis;
  };
  using Entry = std::pair<double, std::uint32_t>;  // (dist2, index)
  struct Heap : std::priority_queue<Entry> {};

  double coord(std::uint32_t i, int axis) const {
    const Point& p = points_[i];
    return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
  }

  int build(int lo, int hi, int axis) {
    if (lo >= hi) return -1;
    const int mid = (lo + hi) / 2;
    std::nth_element(index_.begin() + lo, index_.begin() + mid,
                     index_.begin() + hi,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = coord(a, axis), cb = coord(b, axis);
                       return ca != cb ? ca < cb : a < b;
                     });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{index_[mid], -1, -1, axis});
    nodes_[id].left = build(lo, mid, (axis + 1) % 3);
    nodes_[id].right = build(mid + 1, hi, (axis + 1) % 3);
    return id;
  }

  void search(int node_id, std::uint32_t query, int k, Heap& heap) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    if (node.point != query) {
      const double dx = double(points_[node.point].x) - double(points_[query].x);
      const double dy = double(points_[node.point].y) - double(points_[query].y);
      const double dz = double(points_[node.point].z) - double(points_[query].z);
      const Entry entry{dx * dx + dy * dy + dz * dz, node.point};
      if (static_cast<int>(heap.size()) < k) {
        heap.push(entry);
      } else if (entry < heap.top()) {
        heap.pop();
        heap.push(entry);
      }
    }
    const double delta = coord(query, node.axis) - coord(node.point, node.axis);
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, query, k, heap);
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.top().first) {
      search(far, query, k, heap);
    }
  }

  const std::vector<Point>& points_;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Seeded choice of `want` distinct indices out of n: rank by counter draw,
// keep the smallest ranks (same shuffle construction as random_sample).
std::vector<std::uint32_t> sample_indices(size_t n, size_t want,
                                          std::uint64_t seed) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  if (want >= n) return order;
  std::vector<std::uint64_t> key(n);
  for (size_t i = 0; i < n; ++i) key[i] = rng::draw_u64(seed, i);
  std::nth_element(order.begin(), order.begin() + want, order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return key[a] != key[b] ? key[a] < key[b] : a < b;
                   });
  order.resize(want);
  std::sort(order.begin(), order.end());
  return order;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

ReferenceStats reference_stats_from_counts(
    const std::vector<std::uint64_t>& counts, std::string source_id) {
  if (counts.empty()) {
    throw Error(ErrorCode::empty_corpus, "reference corpus has no frames");
  }
  double sum = 0.0;
  for (std::uint64_t c : counts) sum += static_cast<double>(c);
  return ReferenceStats{sum / static_cast<double>(counts.size()),
                        counts.size(), std::move(source_id)};
}

ReferenceStats reference_stats(const std::vector<PointCloud>& frames,
                               std::string source_id) {
  std::vector<std::uint64_t> counts;
  counts.reserve(frames.size());
  for (const PointCloud& f : frames) counts.push_back(f.points.size());
  return reference_stats_from_counts(counts, std::move(source_id));
}

double estimate_noise_sigma(const PointCloud& cloud, int k,
                            std::uint64_t seed) {
  if (k < 8) {
    throw Error(ErrorCode::too_few_points, "neighborhood size must be >= 8");
  }
  const size_t n = cloud.points.size();
  if (n < static_cast<size_t>(k) + 1) {
    throw Error(ErrorCode::too_few_points,
                "cloud has " + std::to_string(n) + " points, need > " +
                    std::to_string(k));
  }
  const KdTree tree(cloud.points);
  const auto anchors = sample_indices(n, kMaxAnchors, seed);
  std::vector<double> rms_values;
  rms_values.reserve(anchors.size());
  for (std::uint32_t anchor : anchors) {
    const auto neighbors = tree.nearest(anchor, k);
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (std::uint32_t i : neighbors) {
      centroid += Eigen::Vector3d(cloud.points[i].x, cloud.points[i].y,
                                  cloud.points[i].z);
    }
    centroid /= static_cast<double>(neighbors.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::uint32_t i : neighbors) {
      const Eigen::Vector3d d =
          Eigen::Vector3d(cloud.points[i].x, cloud.points[i].y,
                          cloud.points[i].z) -
          centroid;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d normal = solver.eigenvectors().col(0);
    double sq_sum = 0.0;
    for (std::uint32_t i : neighbors) {
      const double r = normal.dot(Eigen::Vector3d(cloud.points[i].x,
                                                  cloud.points[i].y,
                                                  cloud.points[i].z) -
                                  centroid);
      sq_sum += r * r;
    }
    rms_values.push_back(
        std::sqrt(sq_sum / static_cast<double>(neighbors.size())));
  }
  return median(std::move(rms_values)) / kPlaneFitCalibration;
}

DataFeatures analyze_stream(const std::vector<PointCloud>& frames,
                            const ReferenceStats& ref,
                            std::optional<double> declared_noise,
                            std::uint64_t seed) {
  if (frames.empty()) {
    throw Error(ErrorCode::empty_stream, "no frames to analyze");
  }
  if (!(ref.mean_points_per_frame > 0.0)) {
    throw Error(ErrorCode::empty_reference,
                "reference mean frame size must be positive");
  }
  DataFeatures features;
  features.frames_analyzed = frames.size();
  double sum = 0.0;
  for (const PointCloud& f : frames) {
    sum += static_cast<double>(f.points.size());
  }
  features.normalized_point_count =
      sum / static_cast<double>(frames.size()) / ref.mean_points_per_frame;

  if (declared_noise.has_value()) {
    features.noise_sigma = declared_noise;
    return features;
  }
  // Estimate over up to 5 evenly spaced frames; frames too small to carry a
  // neighborhood are skipped.
  constexpr int kEstimatorK = 16;
  constexpr size_t kSampleFrames = 5;
  const size_t n = frames.size();
  const size_t step = std::max<size_t>(1, n / kSampleFrames);
  std::vector<double> estimates;
  for (size_t i = 0; i < n && estimates.size() < kSampleFrames; i += step) {
    if (frames[i].points.size() > kEstimatorK) {
      estimates.push_back(estimate_noise_sigma(frames[i], kEstimatorK, seed));
    }
  }
  if (!estimates.empty()) features.noise_sigma = median(std::move(estimates));
  return features;
}

DatasetStatistics dataset_statistics(
    const std::vector<std::vector<ObjectLabel>>& frames) {
  DatasetStatistics stats;
  stats.frame_count = frames.size();
  // First pass: the set of classes, so zero counts exist for every frame.
  for (const auto& frame : frames) {
    for (const ObjectLabel& label : frame) {
      if (!label.dont_care) stats.classes[label.class_name];
    }
  }
  for (const auto& frame : frames) {
    std::map<std::string, std::uint64_t> in_frame;
    for (auto& [class_name, cs] : stats.classes) {
      (void)cs;
      in_frame[class_name] = 0;
    }
    for (const ObjectLabel& label : frame) {
      if (label.dont_care) continue;
      ClassStatistics& cs = stats.classes[label.class_name];
      ++in_frame[label.class_name];
      ++cs.heat[{static_cast<std::int64_t>(std::floor(label.x)),
                 static_cast<std::int64_t>(std::floor(label.z))}];
      const double deg = label.rotation_y * 180.0 / std::numbers::pi;
      const int bin = std::clamp(
          static_cast<int>(std::floor((deg + 180.0) / 10.0)), 0, 35);
      ++cs.orientation[static_cast<size_t>(bin)];
    }
    for (const auto& [class_name, count] : in_frame) {
      ++stats.classes[class_name].objects_per_frame[count];
    }
  }
  return stats;
}

std::string write_heat_csv(const DatasetStatistics& stats) {
  std::string out = "class,x_cell,y_cell,count\n";
  for (const auto& [class_name, cs] : stats.classes) {
    for (const auto& [cell, count] : cs.heat) {
      out += class_name + ',' + std::to_string(cell.first) + ',' +
             std::to_string(cell.second) + ',' + std::to_string(count) + '\n';
    }
  }
  return out;
}

std::string write_orientation_csv(const DatasetStatistics& stats) {
  std::string out = "class,bin_start_deg,count\n";
  for (const auto& [class_name, cs] : stats.classes) {
    for (size_t b = 0; b < cs.orientation.size(); ++b) {
      out += class_name + ',' + std::to_string(-180 + 10 * static_cast<int>(b)) +
             ',' + std::to_string(cs.orientation[b]) + '\n';
    }
  }
  return out;
}

std::string write_objects_per_frame_csv(const DatasetStatistics& stats) {
  std::string out = "class,objects,frames\n";
  for (const auto& [class_name, cs] : stats.classes) {
    for (const auto& [objects, count] : cs.objects_per_frame) {
      out += class_name + ',' + std::to_string(objects) + ',' +
             std::to_string(count) + '\n';
    }
  }
  return out;
}

std::string write_reference_stats(const ReferenceStats& ref) {
  return "mean_points_per_frame=" + format_double(ref.mean_points_per_frame) +
         "\nframe_count=" + std::to_string(ref.frame_count) +
         "\nsource_id=" + ref.source_id + "\n";
}

ReferenceStats read_reference_stats(const std::string& text) {
  ReferenceStats ref;
  bool have_mean = false, have_count = false;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::malformed_line,
                  "reference stats line has no '=': " + line);
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "mean_points_per_frame") {
      ref.mean_points_per_frame = std::stod(value);
      have_mean = true;
    } else if (key == "frame_count") {
      ref.frame_count = std::stoull(value);
      have_count = true;
    } else if (key == "source_id") {
      ref.source_id = value;
    }
  }
  if (!have_mean || !have_count) {
    throw Error(ErrorCode::missing_key,
                "reference stats need mean_points_per_frame and frame_count");
  }
  return ref;
}

}  // namespace pcsel
