#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "wfmatch/tensor.hpp"

namespace wfm {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
  const double n = norm(a);
  return {a.x / n, a.y / n, a.z / n};
}

struct Mat3 {
  // row-major
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }
  static Mat3 zero() { return Mat3{{0, 0, 0, 0, 0, 0, 0, 0, 0}}; }
  static Mat3 diag(double a, double b, double c) { return Mat3{{a, 0, 0, 0, b, 0, 0, 0, c}}; }

  double& operator()(int r, int c) { return m[r * 3 + c]; }
  double operator()(int r, int c) const { return m[r * 3 + c]; }
};

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 c = Mat3::zero();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline Vec3 operator*(const Mat3& a, Vec3 v) {
  return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
          a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
          a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

inline Mat3 transposed(const Mat3& a) {
  Mat3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = a(j, i);
  return t;
}

inline double det(const Mat3& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

inline Mat3 inverse(const Mat3& a) {
  const double d = det(a);
  require_shape(std::abs(d) > 1e-300, "inverse: singular 3x3 matrix");
  Mat3 r;
  r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / d;
  r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / d;
  r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / d;
  r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / d;
  r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / d;
  r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / d;
  r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / d;
  r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / d;
  r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / d;
  return r;
}

// Rodrigues rotation about a (not necessarily unit) axis.
inline Mat3 axis_angle(Vec3 axis, double angle_rad) {
  Vec3 u = normalized(axis);
  const double c = std::cos(angle_rad), s = std::sin(angle_rad), t = 1.0 - c;
  Mat3 r;
  r(0, 0) = c + u.x * u.x * t;
  r(0, 1) = u.x * u.y * t - u.z * s;
  r(0, 2) = u.x * u.z * t + u.y * s;
  r(1, 0) = u.y * u.x * t + u.z * s;
  r(1, 1) = c + u.y * u.y * t;
  r(1, 2) = u.y * u.z * t - u.x * s;
  r(2, 0) = u.z * u.x * t - u.y * s;
  r(2, 1) = u.z * u.y * t + u.x * s;
  r(2, 2) = c + u.z * u.z * t;
  return r;
}

inline Vec2 warp_point(const Mat3& h, Vec2 p) {
  const Vec3 q = h * Vec3{p.x, p.y, 1.0};
  return {q.x / q.z, q.y / q.z};
}

// Distance from p to segment [a, b]: perpendicular distance where the foot of
// the perpendicular lies inside the segment, distance to the nearest endpoint
// otherwise.
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return dist(p, a);
  const double t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
  if (t <= 0.0) return dist(p, a);
  if (t >= 1.0) return dist(p, b);
  return dist(p, Vec2{a.x + t * ab.x, a.y + t * ab.y});
}

// ---- two-view geometry ----

struct DepthMap {
  int width = 0, height = 0;
  std::vector<double> data;  // row-major; values <= 0 mean "no depth"

  // nearest-neighbor lookup; bilinear would fabricate depths across
  // discontinuities and break the occlusion test
  double sample(Vec2 p) const {
    const int u = static_cast<int>(std::lround(p.x));
    const int v = static_cast<int>(std::lround(p.y));
    if (u < 0 || u >= width || v < 0 || v >= height) return -1.0;
    return data[std::size_t(v) * width + u];
  }
};

inline bool depth_valid(double d) { return d > 0.0; }

struct TwoViewGeometry {
  enum class Kind { Homography, DepthPose };
  Kind kind = Kind::Homography;

  // Homography
  Mat3 H;

  // DepthPose: x_B ~ K_B (R x_A + t) with depth maps in both views
  Mat3 K_a, K_b;
  Mat3 R;
  Vec3 t;
  DepthMap depth_a, depth_b;

  Mat3 h_inverse() const { return inverse(H); }
};

struct DepthProjection {
  Vec2 pixel;       // projection in the target image
  Vec3 point;       // 3D point in the SOURCE camera frame
  double target_z;  // depth of the transferred point in the target frame
  double target_depth_sample;  // depth map value at the projected pixel
  bool valid = false;          // depth defined at both ends and projection in bounds
};

// Unprojects x through the source depth map, transforms by the relative pose,
// and projects into the target view. a_to_b selects the direction.
inline DepthProjection project_with_depth(Vec2 x, const TwoViewGeometry& g, bool a_to_b) {
  require_shape(g.kind == TwoViewGeometry::Kind::DepthPose, "project_with_depth: geometry has no depth");
  DepthProjection out;
  const DepthMap& dm_src = a_to_b ? g.depth_a : g.depth_b;
  const DepthMap& dm_tgt = a_to_b ? g.depth_b : g.depth_a;
  const Mat3& k_src = a_to_b ? g.K_a : g.K_b;
  const Mat3& k_tgt = a_to_b ? g.K_b : g.K_a;

  const double d = dm_src.sample(x);
  if (!depth_valid(d)) return out;
  const Vec3 ray = inverse(k_src) * Vec3{x.x, x.y, 1.0};
  out.point = d * ray;  // K upper-triangular => ray.z == 1

  Vec3 p_tgt;
  if (a_to_b)
    p_tgt = g.R * out.point + g.t;
  else
    p_tgt = transposed(g.R) * (out.point - g.t);
  out.target_z = p_tgt.z;
  if (p_tgt.z <= 0.0) return out;

  const Vec3 proj = k_tgt * p_tgt;
  out.pixel = {proj.x / proj.z, proj.y / proj.z};
  if (out.pixel.x < 0.0 || out.pixel.x >= dm_tgt.width || out.pixel.y < 0.0 || out.pixel.y >= dm_tgt.height)
    return out;
  out.target_depth_sample = dm_tgt.sample(out.pixel);
  if (!depth_valid(out.target_depth_sample)) return out;
  out.valid = true;
  return out;
}

// Relative depth inconsistency between the transferred point and the target
// depth map; above the tolerance the point is treated as occluded.
inline bool occluded(const DepthProjection& p, double tolerance) {
  return std::abs(p.target_z - p.target_depth_sample) / p.target_depth_sample > tolerance;
}

}  // namespace wfm
