#pragma once

#include "pcsel/point_cloud.hpp"

namespace pcsel {

// Strict total order over boxes (lexicographic on the fields).  Symmetric
// quantities canonicalize their argument pair with it; it also serves as a
// deterministic tie-break wherever boxes need a stable order.
bool box_less(const OrientedBox3D& a, const OrientedBox3D& b);

// Area of the intersection of two convex BEV footprints, computed by
// clipping one quadrilateral against the half-planes of the other
// (Sutherland-Hodgman) and applying the shoelace formula to the result.
double footprint_intersection_area(const OrientedBox3D& a,
                                   const OrientedBox3D& b);

// Rotated 3D intersection-over-union: BEV footprint intersection area times
// the vertical extent overlap, over the volume union.  Result is clamped to
// [0, 1] and is exactly symmetric in its arguments (the pair is put in a
// canonical order before any arithmetic).
double rotated_iou_3d(const OrientedBox3D& a, const OrientedBox3D& b);

// area(a's footprint intersected with b's footprint) / area(a's footprint).
// Used for the DontCare-region discard rule in evaluation.
double footprint_overlap_ratio(const OrientedBox3D& a, const OrientedBox3D& b);

}  // namespace pcsel
