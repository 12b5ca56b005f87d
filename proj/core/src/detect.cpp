#include "pcsel/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include <Eigen/Dense>

#include "pcsel/errors.hpp"
#include "pcsel/iou.hpp"
#include "pcsel/rng.hpp"

namespace pcsel {
namespace {

constexpr double kPi = 3.14159265358979323846;

// --- oracle ------------------------------------------------------------

class OracleDetector final : public Detector {
 public:
  OracleDetector(std::map<std::string, std::vector<GroundTruth>> gt,
                 const OracleParams& params)
      : gt_(std::move(gt)), params_(params) {
    if (!(params.jitter_sigma_m >= 0.0)) {
      throw Error(ErrorCode::config_out_of_range,
                  "oracle jitter sigma must be >= 0");
    }
    if (!(params.drop_rate >= 0.0 && params.drop_rate <= 1.0)) {
      throw Error(ErrorCode::config_out_of_range,
                  "oracle drop rate must lie in [0, 1]");
    }
    if (!(params.fp_rate >= 0.0)) {
      throw Error(ErrorCode::config_out_of_range,
                  "oracle false-positive rate must be >= 0");
    }
  }

  std::vector<Detection> detect(const PointCloud& cloud) const override {
    std::vector<Detection> out;
    auto it = gt_.find(cloud.frame_id);
    if (it == gt_.end()) return out;

    const std::uint64_t frame_seed =
        rng::derive_seed(params_.seed, rng::hash_string(cloud.frame_id));

    double min_tp_score = 1.0;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      const GroundTruth& gt = it->second[i];
      if (gt.ignored) continue;  // DontCare regions are not objects

      const std::uint64_t base = 4 * static_cast<std::uint64_t>(i);
      // uniform53 is open on both ends, so drop_rate 0 never drops and
      // drop_rate 1 always does.
      if (rng::uniform53(frame_seed, base) < params_.drop_rate) continue;

      double dx = params_.jitter_sigma_m * rng::normal(frame_seed, base + 1);
      double dy = params_.jitter_sigma_m * rng::normal(frame_seed, base + 2);
      double dz = params_.jitter_sigma_m * rng::normal(frame_seed, base + 3);

      Detection det;
      det.box = gt.box;
      det.box.cx += dx;
      det.box.cy += dy;
      det.box.cz += dz;
      det.class_name = gt.class_name;
      double err = std::sqrt(dx * dx + dy * dy + dz * dz);
      det.score = 1.0 / (1.0 + err);
      min_tp_score = std::min(min_tp_score, det.score);
      out.push_back(std::move(det));
    }

    // False boxes draw from their own derived stream so adding objects
    // never shifts them.
    const std::uint64_t fp_seed = rng::derive_seed(frame_seed, 1);
    std::uint64_t counter = 0;
    for (std::uint64_t k = poisson(fp_seed, counter); k > 0; --k) {
      Detection det;
      double radius = 60.0 + 30.0 * rng::uniform53(fp_seed, counter++);
      double angle = 2.0 * kPi * rng::uniform53(fp_seed, counter++) - kPi;
      double cz = 2.0 * rng::uniform53(fp_seed, counter++) - 1.0;
      double yaw =
          normalize_angle(kPi * (2.0 * rng::uniform53(fp_seed, counter++) - 1.0));
      det.box = OrientedBox3D::make(radius * std::cos(angle),
                                    radius * std::sin(angle), cz, 4.0, 1.8,
                                    1.6, yaw);
      det.class_name = params_.fp_class;
      // Strictly below every true-positive score of the frame.
      det.score = rng::uniform53(fp_seed, counter++) *
                  std::min(1e-3, min_tp_score);
      out.push_back(std::move(det));
    }
    return out;
  }

  std::string id() const override { return "oracle"; }
  double nominal_latency_s() const override { return 0.0; }

 private:
  // Knuth's product-of-uniforms method; advances `counter` past the draws
  // it consumed.
  std::uint64_t poisson(std::uint64_t seed, std::uint64_t& counter) const {
    if (params_.fp_rate <= 0.0) return 0;
    const double limit = std::exp(-params_.fp_rate);
    double product = 1.0;
    std::uint64_t k = 0;
    do {
      product *= rng::uniform53(seed, counter++);
      ++k;
    } while (product > limit);
    return k - 1;
  }

  std::map<std::string, std::vector<GroundTruth>> gt_;
  OracleParams params_;
};

// --- baseline ----------------------------------------------------------

struct CellKey {
  std::int64_t gx = 0;
  std::int64_t gy = 0;

  bool operator==(const CellKey&) const = default;
  bool operator<(const CellKey& o) const {
    return std::tie(gx, gy) < std::tie(o.gx, o.gy);
  }
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = rng::draw_u64(static_cast<std::uint64_t>(k.gx),
                                    static_cast<std::uint64_t>(k.gy));
    return static_cast<std::size_t>(h);
  }
};

// Union-find over cell indices.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Monotone-chain convex hull, counter-clockwise, no collinear points kept.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return std::tie(a.x, a.y) < std::tie(b.x, b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  std::size_t n = pts.size();
  if (n < 3) return pts;

  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

struct FittedRect {
  double cx = 0.0;
  double cy = 0.0;
  double length = 0.0;  // extent along yaw
  double width = 0.0;
  double yaw = 0.0;
};

// Minimum-area enclosing rectangle: the optimum is aligned with some hull
// edge, so scan edges and keep the smallest area (first edge wins ties).
FittedRect min_area_rect(const std::vector<Vec2>& hull) {
  FittedRect best;
  if (hull.empty()) return best;
  if (hull.size() == 1) {
    best.cx = hull[0].x;
    best.cy = hull[0].y;
    return best;
  }

  double best_area = std::numeric_limits<double>::infinity();
  std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % n];
    double ex = b.x - a.x;
    double ey = b.y - a.y;
    double len = std::hypot(ex, ey);
    if (len == 0.0) continue;
    double ux = ex / len, uy = ey / len;  // edge direction
    double lo_u = std::numeric_limits<double>::infinity(), hi_u = -lo_u;
    double lo_v = lo_u, hi_v = -lo_u;
    for (const Vec2& p : hull) {
      double u = p.x * ux + p.y * uy;
      double v = -p.x * uy + p.y * ux;
      lo_u = std::min(lo_u, u);
      hi_u = std::max(hi_u, u);
      lo_v = std::min(lo_v, v);
      hi_v = std::max(hi_v, v);
    }
    double area = (hi_u - lo_u) * (hi_v - lo_v);
    if (area < best_area) {
      best_area = area;
      double cu = 0.5 * (lo_u + hi_u);
      double cv = 0.5 * (lo_v + hi_v);
      best.cx = cu * ux - cv * uy;
      best.cy = cu * uy + cv * ux;
      double du = hi_u - lo_u;
      double dv = hi_v - lo_v;
      if (du >= dv) {
        best.length = du;
        best.width = dv;
        best.yaw = std::atan2(uy, ux);
      } else {
        best.length = dv;
        best.width = du;
        best.yaw = std::atan2(ux, -uy);
      }
    }
  }
  // A box's heading is sign-ambiguous here; fold into (-pi/2, pi/2].
  best.yaw = normalize_angle(best.yaw);
  if (best.yaw <= -kPi / 2.0) best.yaw += kPi;
  if (best.yaw > kPi / 2.0) best.yaw -= kPi;
  return best;
}

class BaselineDetector final : public Detector {
 public:
  explicit BaselineDetector(const BaselineParams& params) : params_(params) {
    if (!(params.ground_inlier_threshold_m > 0.0)) {
      throw Error(ErrorCode::config_out_of_range,
                  "ground inlier threshold must be > 0");
    }
    if (params.ground_refit_rounds < 1) {
      throw Error(ErrorCode::config_out_of_range,
                  "ground refit rounds must be >= 1");
    }
    if (!(params.cluster_link_distance_m > 0.0)) {
      throw Error(ErrorCode::config_out_of_range,
                  "cluster link distance must be > 0");
    }
    if (params.min_cluster_size < 1) {
      throw Error(ErrorCode::config_out_of_range,
                  "min cluster size must be >= 1");
    }
    if (params.class_lengths.empty()) {
      throw Error(ErrorCode::config_out_of_range, "class size table is empty");
    }
    for (const auto& [name, len] : params.class_lengths) {
      if (!(len > 0.0)) {
        throw Error(ErrorCode::config_out_of_range,
                    "class length for " + name + " must be > 0");
      }
      auto it = params.expected_counts.find(name);
      if (it == params.expected_counts.end() || !(it->second > 0.0)) {
        throw Error(ErrorCode::config_out_of_range,
                    "expected count for " + name + " must be present and > 0");
      }
    }
  }

  std::vector<Detection> detect(const PointCloud& cloud) const override {
    // Sorting first pins every later accumulation order, making the whole
    // pipeline invariant under input permutation.
    std::vector<Point> pts = cloud.points;
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
      return std::tie(a.x, a.y, a.z, a.intensity) <
             std::tie(b.x, b.y, b.z, b.intensity);
    });

    std::vector<Point> elevated = remove_ground(pts);
    std::vector<std::vector<const Point*>> clusters = cluster(elevated);

    std::vector<Detection> out;
    for (const auto& members : clusters) {
      if (members.size() < params_.min_cluster_size) continue;

      std::vector<Vec2> bev;
      bev.reserve(members.size());
      double z_lo = std::numeric_limits<double>::infinity();
      double z_hi = -z_lo;
      for (const Point* p : members) {
        bev.push_back({static_cast<double>(p->x), static_cast<double>(p->y)});
        z_lo = std::min(z_lo, static_cast<double>(p->z));
        z_hi = std::max(z_hi, static_cast<double>(p->z));
      }
      FittedRect rect = min_area_rect(convex_hull(std::move(bev)));

      Detection det;
      det.box = OrientedBox3D::make(
          rect.cx, rect.cy, 0.5 * (z_lo + z_hi),
          std::max(rect.length, 0.01), std::max(rect.width, 0.01),
          std::max(z_hi - z_lo, 0.01), rect.yaw);
      det.class_name = classify(det.box.length);
      double expected = params_.expected_counts.at(det.class_name);
      det.score = std::clamp(static_cast<double>(members.size()) / expected,
                             0.0, 1.0);
      out.push_back(std::move(det));
    }

    std::sort(out.begin(), out.end(), [](const Detection& a,
                                         const Detection& b) {
      if (a.score != b.score) return a.score > b.score;
      return box_less(a.box, b.box);
    });
    return out;
  }

  std::string id() const override { return "baseline-geometric"; }
  double nominal_latency_s() const override { return 0.05; }

 private:
  // Plane z = ax + by + c fitted by least squares on a low band, with
  // fixed inlier-reselection rounds; returns the cloud minus inliers.
  std::vector<Point> remove_ground(const std::vector<Point>& pts) const {
    if (pts.size() < 3) return pts;

    std::vector<double> zs;
    zs.reserve(pts.size());
    for (const Point& p : pts) zs.push_back(p.z);
    std::nth_element(zs.begin(), zs.begin() + zs.size() / 20, zs.end());
    double band_top = zs[zs.size() / 20] + 0.5;

    std::vector<const Point*> support;
    for (const Point& p : pts) {
      if (p.z <= band_top) support.push_back(&p);
    }

    double a = 0.0, b = 0.0, c = 0.0;
    bool have_plane = false;
    for (int round = 0; round < params_.ground_refit_rounds; ++round) {
      if (support.size() < 3) break;
      Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
      Eigen::Vector3d atb = Eigen::Vector3d::Zero();
      for (const Point* p : support) {
        Eigen::Vector3d row(p->x, p->y, 1.0);
        ata += row * row.transpose();
        atb += row * static_cast<double>(p->z);
      }
      Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
      if (!lu.isInvertible()) break;
      Eigen::Vector3d sol = lu.solve(atb);
      a = sol[0];
      b = sol[1];
      c = sol[2];
      have_plane = true;

      support.clear();
      for (const Point& p : pts) {
        if (std::abs(p.z - (a * p.x + b * p.y + c)) <=
            params_.ground_inlier_threshold_m) {
          support.push_back(&p);
        }
      }
    }
    if (!have_plane) return pts;

    std::vector<Point> kept;
    kept.reserve(pts.size());
    for (const Point& p : pts) {
      if (std::abs(p.z - (a * p.x + b * p.y + c)) >
          params_.ground_inlier_threshold_m) {
        kept.push_back(p);
      }
    }
    return kept;
  }

  // Connected components of occupied BEV cells (cell edge = link distance,
  // 8-neighborhood), applied to the points they contain.
  std::vector<std::vector<const Point*>> cluster(
      const std::vector<Point>& pts) const {
    const double edge = params_.cluster_link_distance_m;
    std::unordered_map<CellKey, std::size_t, CellKeyHash> cell_index;
    std::vector<CellKey> cells;
    std::vector<std::vector<const Point*>> cell_points;
    for (const Point& p : pts) {
      CellKey key{static_cast<std::int64_t>(std::floor(p.x / edge)),
                  static_cast<std::int64_t>(std::floor(p.y / edge))};
      auto [it, inserted] = cell_index.try_emplace(key, cells.size());
      if (inserted) {
        cells.push_back(key);
        cell_points.emplace_back();
      }
      cell_points[it->second].push_back(&p);
    }

    DisjointSet sets(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          auto it = cell_index.find(
              CellKey{cells[i].gx + dx, cells[i].gy + dy});
          if (it != cell_index.end()) sets.unite(i, it->second);
        }
      }
    }

    // Group cells by root in first-appearance order of the root cell.
    std::map<std::size_t, std::size_t> root_to_cluster;
    std::vector<std::vector<const Point*>> clusters;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t root = sets.find(i);
      auto [it, inserted] = root_to_cluster.try_emplace(root, clusters.size());
      if (inserted) clusters.emplace_back();
      auto& bucket = clusters[it->second];
      bucket.insert(bucket.end(), cell_points[i].begin(),
                    cell_points[i].end());
    }
    return clusters;
  }

  std::string classify(double length) const {
    std::string best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& [name, repr] : params_.class_lengths) {
      double gap = std::abs(length - repr);
      if (gap < best_gap) {  // map order breaks ties by name
        best_gap = gap;
        best = name;
      }
    }
    return best;
  }

  BaselineParams params_;
};

}  // namespace

std::unique_ptr<Detector> oracle_detector(
    std::map<std::string, std::vector<GroundTruth>> gt_per_frame,
    const OracleParams& params) {
  return std::make_unique<OracleDetector>(std::move(gt_per_frame), params);
}

std::unique_ptr<Detector> baseline_detector(const BaselineParams& params) {
  return std::make_unique<BaselineDetector>(params);
}

}  // namespace pcsel
