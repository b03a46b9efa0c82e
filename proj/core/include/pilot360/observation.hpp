#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pilot360/geometry.hpp"

namespace pilot360 {

/// Feature dimensions shared by observations and the model.
struct ObservationDims {
  int d = 16;  // appearance length
  int k = 12;  // motion histogram bins
  int n = 16;  // candidate objects per frame

  int per_object() const { return d + 2 + k; }
  int flat_size() const { return per_object() * n; }
  void validate() const;

  friend bool operator==(const ObservationDims&, const ObservationDims&) = default;
};

struct ObjectObservation {
  std::vector<double> appearance;
  ViewingAngle position;
  std::vector<double> motion;
  double score = 0.0;

  /// A zero-padding slot: zero features, origin position, score 0.
  static ObjectObservation dummy(const ObservationDims& dims);

  friend bool operator==(const ObjectObservation&, const ObjectObservation&) = default;
};

/// One frame as seen by the agent: exactly n objects in score order plus the
/// flattened vector [O_t; P_t; M_t] with each block laid out object by object.
struct FrameObservation {
  std::vector<ObjectObservation> objects;
  std::vector<double> flat;

  friend bool operator==(const FrameObservation&, const FrameObservation&) = default;
};

struct Episode {
  ObservationDims dims;
  std::vector<FrameObservation> frames;
  std::vector<ViewingAngle> gt;
  // Slot of the main object per frame. Diagnostics only; training never reads it.
  std::vector<int> gt_object_index;

  std::size_t length() const { return frames.size(); }
  /// Throws InvalidInput when frame/gt lengths disagree or dims are inconsistent.
  /// `min_length` defaults to the episode contract of two frames.
  void validate(std::size_t min_length = 2) const;

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Strict weak order used to rank objects: score descending, then azimuth,
/// elevation, appearance and motion ascending. Gives a total order on
/// distinct objects so the result never depends on input order.
bool score_order_less(const ObjectObservation& a, const ObjectObservation& b);

/// Keeps the top-n objects by score_order_less, pads with dummies and builds
/// the flat vector. Throws InvalidInput on dimension or score violations.
FrameObservation make_frame_observation(std::span<const ObjectObservation> objects,
                                        const ObservationDims& dims);

/// Same as make_frame_observation but also reports the slot each input landed
/// in (-1 when it was cut by the top-n truncation).
FrameObservation make_frame_observation(std::span<const ObjectObservation> objects,
                                        const ObservationDims& dims,
                                        std::vector<int>& slot_of_input);

/// Builds the flat vector for objects that are already ordered and padded.
std::vector<double> flatten_objects(std::span<const ObjectObservation> objects,
                                    const ObservationDims& dims);

// ---------------------------------------------------------------------------
// Synthetic scenes (stand-in for a detector + tracker pipeline)

struct SceneConfig {
  ObservationDims dims{16, 12, 8};
  int frames = 200;
  int objects = 4;

  // Piecewise-constant velocity, degrees per frame.
  double speed_min = 0.5;
  double speed_max = 2.5;
  double segment_mean_frames = 40.0;
  double max_turn_deg = 60.0;
  double elevation_band = 40.0;
  double init_elevation_spread = 20.0;

  // Observation noise.
  double position_jitter = 1.5;  // uniform in [-j, j] per component
  double appearance_noise = 0.3;
  double motion_noise = 0.05;

  // Detection scores ~ Beta(alpha, beta); the main object gets alpha + bias.
  double score_alpha = 2.0;
  double score_beta = 2.0;
  double main_score_bias = 1.0;

  int gt_window = 5;
  // Seeds the main-object appearance prototype shared by every episode.
  std::uint64_t prototype_seed = 20170721;

  void validate() const;
};

/// Deterministic given (config, seed). Throws InvalidInput for objects > n,
/// objects < 1 or frames < 2.
Episode synth_scene(const SceneConfig& config, std::uint64_t seed);

/// Fraction of frames whose main object holds the top score.
double main_top_score_rate(std::span<const Episode> episodes);

}  // namespace pilot360
