#pragma once

#include <cstdint>
#include <string>

#include "pcsel/point_cloud.hpp"

// Point cloud degradation operators: the two voxel-based samplers, seeded
// random sampling, and seeded Gaussian displacement noise.  All seeded
// operators derive their randomness per point from (seed, point index), so
// outputs never depend on iteration order (see rng.hpp).

namespace pcsel {

enum class DegradationKind : std::uint8_t {
  none = 0,
  voxel_grid = 1,
  uniform = 2,
  random = 3,
  gaussian_noise = 4,
};

const char* to_string(DegradationKind kind);

// One degradation to apply (or that a model was trained with).  `param` is
// the voxel edge in meters for the voxel samplers, the keep fraction for
// random sampling, and sigma in meters for gaussian noise; it is unused for
// `none`.
struct DegradationSpec {
  DegradationKind kind = DegradationKind::none;
  double param = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const DegradationSpec&) const = default;
};

// Replaces every occupied voxel with one synthesized point at the arithmetic
// mean of its members (x, y, z and intensity all averaged).  The grid is
// anchored at the origin with voxel i covering [i*edge, (i+1)*edge), so a
// point exactly on a boundary lands in the higher-index voxel.  Output
// order is by first appearance of each voxel in the input.
// Throws NonPositiveEdge.
PointCloud voxel_grid_filter(const PointCloud& cloud, double edge_m);

// Keeps, per occupied voxel of the same grid, the original input point
// closest to the voxel center; distance ties take the lowest input index.
// The output is a subset of the input (points bit-identical), in input
// order, and per frame has exactly as many points as voxel_grid_filter at
// the same edge.
// Throws NonPositiveEdge.
PointCloud uniform_sample(const PointCloud& cloud, double edge_m);

// Keeps a uniformly chosen subset of exactly round(keep_fraction * n)
// points: every index gets the key draw_u64(seed, index), the k smallest
// keys win (a seeded shuffle), and survivors keep their input order.
// Throws FractionOutOfRange unless 0 <= keep_fraction <= 1.
PointCloud random_sample(const PointCloud& cloud, double keep_fraction,
                         std::uint64_t seed);

// Displaces each coordinate axis of each point by an independent
// Normal(0, sigma) draw; intensity is never perturbed.  sigma == 0 returns
// the input bit-identically.
// Throws NegativeSigma.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma_m,
                              std::uint64_t seed);

// Applies `spec` to `cloud` (identity for kind none).
PointCloud apply_degradation(const PointCloud& cloud,
                             const DegradationSpec& spec);

// count(after) / count(before), the degradation ratio a degraded frame
// retains relative to its reference.  Throws EmptyReference.
double normalized_point_count(const PointCloud& before,
                              const PointCloud& after);

}  // namespace pcsel
