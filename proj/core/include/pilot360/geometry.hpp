#pragma once

#include <array>
#include <cmath>

namespace pilot360 {

/// A point on the viewing sphere in degrees.
///
/// Azimuth lives in [0, 360) and elevation in [-90, 90]. Construct through
/// ViewingAngle::make() to get both normalizations applied; aggregate
/// initialization is allowed for literals that are already in range.
struct ViewingAngle {
  double azimuth = 0.0;
  double elevation = 0.0;

  static ViewingAngle make(double azimuth, double elevation);

  friend bool operator==(const ViewingAngle&, const ViewingAngle&) = default;
};

/// Raw per-frame steering delta in degrees. Never normalized.
struct Action {
  double d_azimuth = 0.0;
  double d_elevation = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

inline constexpr double kDefaultNfovHSpan = 65.5;
inline constexpr double kDefaultNfovVSpan = kDefaultNfovHSpan * 3.0 / 4.0;

/// Axis-aligned rectangle on the (azimuth, elevation) plane centered at a
/// viewing angle. Elevation extent is clipped to [-90, 90] when measured.
struct NFoV {
  ViewingAngle center;
  double h_span = kDefaultNfovHSpan;
  double v_span = kDefaultNfovVSpan;
};

/// Maps any finite azimuth into [0, 360).
double wrap_azimuth(double deg);

/// Maps any finite difference into (-180, 180].
double wrap_signed(double deg);

double clamp_elevation(double deg);

/// l_t = l_{t-1} + delta with azimuth wrap and elevation clamp.
ViewingAngle apply_action(const ViewingAngle& prev, const Action& delta);

/// Shortest signed offset taking `from` to `to`.
Action angular_offset(const ViewingAngle& from, const ViewingAngle& to);

/// Planar norm of angular_offset(a, b).
double angular_distance(const ViewingAngle& a, const ViewingAngle& b);

/// Intersection over union of two NFoV rectangles with azimuth wraparound.
/// Throws InvalidInput when the spans differ or exceed the sphere.
double nfov_iou(const NFoV& a, const NFoV& b);

/// Center-to-corner distance of an NFoV. With the default spans this is
/// sqrt(32.75^2 + 24.5625^2) ~= 40.94.
double nfov_corner_distance(double h_span = kDefaultNfovHSpan,
                            double v_span = kDefaultNfovVSpan);

}  // namespace pilot360
