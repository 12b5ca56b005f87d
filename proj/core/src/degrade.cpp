#include "pcsel/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "pcsel/rng.hpp"

namespace pcsel {
namespace {

struct VoxelKey {
  std::int64_t ix, iy, iz;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = rng::draw_u64(static_cast<std::uint64_t>(k.ix),
                                    static_cast<std::uint64_t>(k.iy));
    return rng::draw_u64(h, static_cast<std::uint64_t>(k.iz));
  }
};

VoxelKey voxel_of(const Point& p, double edge) {
  return VoxelKey{
      static_cast<std::int64_t>(std::floor(static_cast<double>(p.x) / edge)),
      static_cast<std::int64_t>(std::floor(static_cast<double>(p.y) / edge)),
      static_cast<std::int64_t>(std::floor(static_cast<double>(p.z) / edge))};
}

void require_positive_edge(double edge) {
  if (!(edge > 0.0) || !std::isfinite(edge)) {
    throw Error(ErrorCode::non_positive_edge,
                "voxel edge must be a positive finite length");
  }
}

}  // namespace

const char* to_string(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::none: return "none";
    case DegradationKind::voxel_grid: return "voxel_grid";
    case DegradationKind::uniform: return "uniform";
    case DegradationKind::random: return "random";
    case DegradationKind::gaussian_noise: return "noise";
  }
  return "unknown";
}

PointCloud voxel_grid_filter(const PointCloud& cloud, double edge_m) {
  require_positive_edge(edge_m);
  struct Accum {
    double x = 0.0, y = 0.0, z = 0.0, intensity = 0.0;
    std::uint64_t count = 0;
    std::uint32_t order = 0;  // first-appearance rank, fixes output order
  };
  std::unordered_map<VoxelKey, Accum, VoxelKeyHash> voxels;
  voxels.reserve(cloud.points.size());
  std::uint32_t next_order = 0;
  for (const Point& p : cloud.points) {
    Accum& a = voxels[voxel_of(p, edge_m)];
    if (a.count == 0) a.order = next_order++;
    a.x += p.x;
    a.y += p.y;
    a.z += p.z;
    a.intensity += p.intensity;
    ++a.count;
  }
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.resize(voxels.size());
  for (const auto& [key, a] : voxels) {
    const double n = static_cast<double>(a.count);
    out.points[a.order] = Point{static_cast<float>(a.x / n),
                                static_cast<float>(a.y / n),
                                static_cast<float>(a.z / n),
                                static_cast<float>(a.intensity / n)};
  }
  return out;
}

PointCloud uniform_sample(const PointCloud& cloud, double edge_m) {
  require_positive_edge(edge_m);
  struct Best {
    double dist2;
    std::uint32_t index;
  };
  std::unordered_map<VoxelKey, Best, VoxelKeyHash> voxels;
  voxels.reserve(cloud.points.size());
  for (std::uint32_t i = 0; i < cloud.points.size(); ++i) {
    const Point& p = cloud.points[i];
    const VoxelKey key = voxel_of(p, edge_m);
    const double cx = (static_cast<double>(key.ix) + 0.5) * edge_m;
    const double cy = (static_cast<double>(key.iy) + 0.5) * edge_m;
    const double cz = (static_cast<double>(key.iz) + 0.5) * edge_m;
    const double dx = p.x - cx, dy = p.y - cy, dz = p.z - cz;
    const double d2 = dx * dx + dy * dy + dz * dz;
    auto [it, inserted] = voxels.try_emplace(key, Best{d2, i});
    // strict < keeps the lowest index on exact distance ties
    if (!inserted && d2 < it->second.dist2) it->second = Best{d2, i};
  }
  std::vector<std::uint32_t> keep;
  keep.reserve(voxels.size());
  for (const auto& [key, best] : voxels) keep.push_back(best.index);
  std::sort(keep.begin(), keep.end());
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(keep.size());
  for (std::uint32_t i : keep) out.points.push_back(cloud.points[i]);
  return out;
}

PointCloud random_sample(const PointCloud& cloud, double keep_fraction,
                         std::uint64_t seed) {
  if (!(keep_fraction >= 0.0 && keep_fraction <= 1.0)) {
    throw Error(ErrorCode::fraction_out_of_range,
                "keep fraction must be in [0, 1]");
  }
  const size_t n = cloud.points.size();
  const size_t k = static_cast<size_t>(
      std::llround(keep_fraction * static_cast<double>(n)));
  PointCloud out;
  out.frame_id = cloud.frame_id;
  if (k == n) {
    out.points = cloud.points;
    return out;
  }
  // Sort-by-random-key shuffle: rank every index by its counter draw and
  // keep the k smallest.  Ties (vanishingly rare) resolve by index.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::uint64_t> key(n);
  for (size_t i = 0; i < n; ++i) key[i] = rng::draw_u64(seed, i);
  std::nth_element(order.begin(), order.begin() + k, order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return key[a] != key[b] ? key[a] < key[b] : a < b;
                   });
  order.resize(k);
  std::sort(order.begin(), order.end());
  out.points.reserve(k);
  for (std::uint32_t i : order) out.points.push_back(cloud.points[i]);
  return out;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma_m,
                              std::uint64_t seed) {
  if (!(sigma_m >= 0.0) || !std::isfinite(sigma_m)) {
    throw Error(ErrorCode::negative_sigma, "sigma must be >= 0");
  }
  if (sigma_m == 0.0) return cloud;
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.resize(cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const Point& p = cloud.points[i];
    // counters 3i, 3i+1, 3i+2: one independent draw per axis
    out.points[i] = Point{
        static_cast<float>(p.x + sigma_m * rng::normal(seed, 3 * i)),
        static_cast<float>(p.y + sigma_m * rng::normal(seed, 3 * i + 1)),
        static_cast<float>(p.z + sigma_m * rng::normal(seed, 3 * i + 2)),
        p.intensity};
  }
  return out;
}

PointCloud apply_degradation(const PointCloud& cloud,
                             const DegradationSpec& spec) {
  switch (spec.kind) {
    case DegradationKind::none: return cloud;
    case DegradationKind::voxel_grid: return voxel_grid_filter(cloud, spec.param);
    case DegradationKind::uniform: return uniform_sample(cloud, spec.param);
    case DegradationKind::random:
      return random_sample(cloud, spec.param, spec.seed);
    case DegradationKind::gaussian_noise:
      return add_gaussian_noise(cloud, spec.param, spec.seed);
  }
  throw Error(ErrorCode::unknown_enum, "degradation kind");
}

double normalized_point_count(const PointCloud& before,
                              const PointCloud& after) {
  if (before.points.empty()) {
    throw Error(ErrorCode::empty_reference,
                "reference frame has no points");
  }
  return static_cast<double>(after.points.size()) /
         static_cast<double>(before.points.size());
}

}  // namespace pcsel
