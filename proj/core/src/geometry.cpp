#include "pilot360/geometry.hpp"

#include <algorithm>

#include "pilot360/errors.hpp"

namespace pilot360 {

double wrap_azimuth(double deg) {
  double x = std::fmod(deg, 360.0);
  if (x < 0.0) x += 360.0;
  // fmod of a tiny negative value plus 360 can round up to exactly 360.
  if (x >= 360.0) x -= 360.0;
  return x;
}

double wrap_signed(double deg) {
  double x = std::fmod(deg, 360.0);
  if (x <= -180.0) x += 360.0;
  if (x > 180.0) x -= 360.0;
  return x;
}

double clamp_elevation(double deg) { return std::clamp(deg, -90.0, 90.0); }

ViewingAngle ViewingAngle::make(double azimuth, double elevation) {
  return {wrap_azimuth(azimuth), clamp_elevation(elevation)};
}

ViewingAngle apply_action(const ViewingAngle& prev, const Action& delta) {
  return ViewingAngle::make(prev.azimuth + delta.d_azimuth,
                            prev.elevation + delta.d_elevation);
}

Action angular_offset(const ViewingAngle& from, const ViewingAngle& to) {
  return {wrap_signed(to.azimuth - from.azimuth), to.elevation - from.elevation};
}

double angular_distance(const ViewingAngle& a, const ViewingAngle& b) {
  const Action d = angular_offset(a, b);
  return std::hypot(d.d_azimuth, d.d_elevation);
}

namespace {

struct Interval {
  double lo;
  double hi;
  double length() const { return std::max(0.0, hi - lo); }
};

Interval elevation_extent(const NFoV& f) {
  return {std::max(-90.0, f.center.elevation - 0.5 * f.v_span),
          std::min(90.0, f.center.elevation + 0.5 * f.v_span)};
}

}  // namespace

double nfov_iou(const NFoV& a, const NFoV& b) {
  if (a.h_span != b.h_span || a.v_span != b.v_span) {
    throw InvalidInput("nfov_iou: NFoV spans differ");
  }
  const double w = a.h_span;
  if (!(w > 0.0 && w <= 360.0 && a.v_span > 0.0)) {
    throw InvalidInput("nfov_iou: spans must satisfy 0 < h_span <= 360, v_span > 0");
  }

  // Equal-width arcs on a circle: the overlap can come from either side of
  // the wrap when the arcs are wider than a half turn.
  const double sep = std::abs(wrap_signed(b.center.azimuth - a.center.azimuth));
  const double az_overlap =
      std::min(w, std::max(0.0, w - sep) + std::max(0.0, w - (360.0 - sep)));

  const Interval ea = elevation_extent(a);
  const Interval eb = elevation_extent(b);
  const Interval ei{std::max(ea.lo, eb.lo), std::min(ea.hi, eb.hi)};

  const double inter = az_overlap * ei.length();
  const double uni = w * ea.length() + w * eb.length() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double nfov_corner_distance(double h_span, double v_span) {
  return std::hypot(0.5 * h_span, 0.5 * v_span);
}

}  // namespace pilot360
