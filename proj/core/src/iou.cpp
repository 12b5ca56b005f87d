#include "pcsel/iou.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

namespace pcsel {
namespace {

struct Vec2 {
  double x, y;
};

// Clips a convex polygon against the half-plane on the left of edge a->b.
// Classic Sutherland-Hodgman step; two rotated rectangles intersect in at
// most 8 vertices, so fixed-capacity buffers suffice.
int clip_edge(const Vec2* in, int n, Vec2 a, Vec2 b, Vec2* out) {
  auto side = [&](const Vec2& p) {
    return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  };
  int m = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2& cur = in[i];
    const Vec2& nxt = in[(i + 1) % n];
    const double sc = side(cur), sn = side(nxt);
    if (sc >= 0.0) out[m++] = cur;
    if ((sc >= 0.0) != (sn >= 0.0)) {
      const double t = sc / (sc - sn);
      out[m++] = Vec2{cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)};
    }
  }
  return m;
}

double shoelace(const Vec2* poly, int n) {
  double twice = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    twice += p.x * q.y - p.y * q.x;
  }
  return 0.5 * std::fabs(twice);
}

double intersect_area(const OrientedBox3D& a, const OrientedBox3D& b) {
  double ax[4], ay[4], bx[4], by[4];
  a.footprint(ax, ay);
  b.footprint(bx, by);
  Vec2 buf1[16], buf2[16];
  for (int i = 0; i < 4; ++i) buf1[i] = Vec2{ax[i], ay[i]};
  int n = 4;
  Vec2* cur = buf1;
  Vec2* nxt = buf2;
  for (int e = 0; e < 4 && n > 0; ++e) {
    const Vec2 p{bx[e], by[e]};
    const Vec2 q{bx[(e + 1) % 4], by[(e + 1) % 4]};
    n = clip_edge(cur, n, p, q, nxt);
    std::swap(cur, nxt);
  }
  return n >= 3 ? shoelace(cur, n) : 0.0;
}

}  // namespace

// Deterministic order for a box pair so symmetric quantities really are
// computed identically for (a, b) and (b, a).
bool box_less(const OrientedBox3D& a, const OrientedBox3D& b) {
  return std::tie(a.cx, a.cy, a.cz, a.length, a.width, a.height, a.yaw) <
         std::tie(b.cx, b.cy, b.cz, b.length, b.width, b.height, b.yaw);
}

double footprint_intersection_area(const OrientedBox3D& a,
                                   const OrientedBox3D& b) {
  return box_less(b, a) ? intersect_area(b, a) : intersect_area(a, b);
}

double rotated_iou_3d(const OrientedBox3D& a, const OrientedBox3D& b) {
  if (box_less(b, a)) return rotated_iou_3d(b, a);
  const double area = intersect_area(a, b);
  const double z_lo = std::max(a.cz - a.height / 2.0, b.cz - b.height / 2.0);
  const double z_hi = std::min(a.cz + a.height / 2.0, b.cz + b.height / 2.0);
  const double inter = area * std::max(0.0, z_hi - z_lo);
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double footprint_overlap_ratio(const OrientedBox3D& a,
                               const OrientedBox3D& b) {
  const double area_a = a.length * a.width;
  if (!(area_a > 0.0)) return 0.0;
  return std::clamp(footprint_intersection_area(a, b) / area_a, 0.0, 1.0);
}

}  // namespace pcsel
