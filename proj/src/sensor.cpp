#include "tspine/sensor.hpp"

#include <cmath>

#include "tspine/error.hpp"

namespace tspine {

namespace {

// Ray parameter of the first hit at t >= 0, or -1.
double hit_plane(const Vec3& o, const Vec3& d, const Wall& w) {
  const double denom = w.normal.dot(d);
  if (denom == 0.0) return -1.0;
  const double t = w.normal.dot(w.point - o) / denom;
  return t >= 0.0 ? t : -1.0;
}

double hit_sphere(const Vec3& o, const Vec3& d, const Sphere& s) {
  const Vec3 oc = o - s.center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return -1.0;
  const double root = std::sqrt(disc);
  if (-b - root >= 0.0) return -b - root;
  if (-b + root >= 0.0) return 0.0;  // origin inside the sphere
  return -1.0;
}

double hit_box(const Vec3& o, const Vec3& d, const Box& box) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d(k) == 0.0) {
      if (o(k) < box.lo(k) || o(k) > box.hi(k)) return -1.0;
      continue;
    }
    double a = (box.lo(k) - o(k)) / d(k);
    double b = (box.hi(k) - o(k)) / d(k);
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return -1.0;
  }
  return t0;
}

}  // namespace

SensorReading sense_infrared(const Environment& env, const PoseConfig& tip_pose, const Vec3& direction, double t) {
  const double len = direction.norm();
  if (!(len > 0.0) || !std::isfinite(len)) throw ParameterError("ray_direction", "sensor ray direction must be non-zero");
  const Vec3 d = direction / len;
  const Vec3& o = tip_pose.tip;
  SensorReading out;
  out.t = t;
  auto consider = [&](double dist, double thermal) {
    if (dist >= 0.0 && dist <= env.max_range && dist < out.distance) {
      out.hit = true;
      out.distance = dist;
      out.thermal = thermal;
    }
  };
  for (const auto& w : env.walls) consider(hit_plane(o, d, w), w.thermal);
  for (const auto& s : env.spheres) consider(hit_sphere(o, d, s), s.thermal);
  for (const auto& b : env.boxes) consider(hit_box(o, d, b), b.thermal);
  return out;
}

}  // namespace tspine
