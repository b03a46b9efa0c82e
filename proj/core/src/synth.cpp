#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pilot360/errors.hpp"
#include "pilot360/observation.hpp"

namespace pilot360 {

void SceneConfig::validate() const {
  dims.validate();
  if (frames < 2) throw InvalidInput("scene needs at least 2 frames");
  if (objects < 1) throw InvalidInput("scene needs at least one object");
  if (objects > dims.n) {
    throw InvalidInput("scene objects K=" + std::to_string(objects) +
                       " exceeds candidate slots N=" + std::to_string(dims.n));
  }
  if (speed_min < 0.0 || speed_max < speed_min) throw InvalidInput("invalid speed range");
  if (segment_mean_frames < 1.0) throw InvalidInput("segment_mean_frames must be >= 1");
  if (max_turn_deg < 0.0) throw InvalidInput("max_turn_deg must be >= 0");
  if (!(elevation_band > 0.0 && elevation_band < 90.0)) {
    throw InvalidInput("elevation_band must lie in (0, 90)");
  }
  if (init_elevation_spread < 0.0 || init_elevation_spread > elevation_band) {
    throw InvalidInput("init_elevation_spread must lie in [0, elevation_band]");
  }
  if (position_jitter < 0.0 || appearance_noise < 0.0 || motion_noise < 0.0) {
    throw InvalidInput("noise levels must be >= 0");
  }
  if (score_alpha <= 0.0 || score_beta <= 0.0 || main_score_bias < 0.0) {
    throw InvalidInput("invalid score distribution parameters");
  }
  if (gt_window < 1) throw InvalidInput("gt_window must be >= 1");
}

namespace {

using Rng = std::mt19937_64;

double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

std::vector<double> gaussian_vector(Rng& rng, int len) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(len));
  for (auto& x : v) x = normal(rng);
  return v;
}

// Speed-weighted direction histogram with linear smearing between the two
// nearest bins. Speeds are normalized by the scene's speed bound.
std::vector<double> motion_histogram(double vaz, double vel, int k, double speed_scale) {
  std::vector<double> h(static_cast<std::size_t>(k), 0.0);
  const double speed = std::hypot(vaz, vel);
  if (speed == 0.0) return h;
  double dir = std::atan2(vel, vaz);
  if (dir < 0.0) dir += 2.0 * std::numbers::pi;
  const double pos = dir / (2.0 * std::numbers::pi) * k;
  const int lo = static_cast<int>(std::floor(pos)) % k;
  const int hi = (lo + 1) % k;
  const double frac = pos - std::floor(pos);
  const double w = speed / speed_scale;
  h[static_cast<std::size_t>(lo)] += (1.0 - frac) * w;
  h[static_cast<std::size_t>(hi)] += frac * w;
  return h;
}

struct Mover {
  double az;  // unwrapped
  double el;
  double heading;  // radians, 0 = +azimuth
  double speed;
  std::vector<double> prototype;
};

}  // namespace

Episode synth_scene(const SceneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const ObservationDims& dims = cfg.dims;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  Rng proto_rng(cfg.prototype_seed);
  const std::vector<double> main_prototype = gaussian_vector(proto_rng, dims.d);

  const auto K = static_cast<std::size_t>(cfg.objects);
  std::vector<Mover> movers(K);
  for (std::size_t i = 0; i < K; ++i) {
    Mover& m = movers[i];
    m.az = 360.0 * unit(rng);
    m.el = cfg.init_elevation_spread * (2.0 * unit(rng) - 1.0);
    m.heading = 2.0 * std::numbers::pi * unit(rng);
    m.speed = cfg.speed_min + (cfg.speed_max - cfg.speed_min) * unit(rng);
    m.prototype = i == 0 ? main_prototype : gaussian_vector(rng, dims.d);
  }

  const double turn = cfg.max_turn_deg * std::numbers::pi / 180.0;
  const double switch_p = 1.0 / cfg.segment_mean_frames;
  const double speed_scale = cfg.speed_max > 0.0 ? cfg.speed_max : 1.0;

  Episode ep;
  ep.dims = dims;
  const auto T = static_cast<std::size_t>(cfg.frames);
  ep.frames.reserve(T);
  ep.gt_object_index.reserve(T);

  std::vector<double> main_az;  // unwrapped, noise-free main track
  std::vector<double> main_el;
  main_az.reserve(T);
  main_el.reserve(T);

  std::vector<ObjectObservation> raw(K);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < K; ++i) {
      Mover& m = movers[i];
      double vaz = 0.0;
      double vel = 0.0;
      if (t > 0) {
        if (unit(rng) < switch_p) {
          m.heading += turn * (2.0 * unit(rng) - 1.0);
          m.speed = cfg.speed_min + (cfg.speed_max - cfg.speed_min) * unit(rng);
        }
        vaz = m.speed * std::cos(m.heading);
        vel = m.speed * std::sin(m.heading);
        m.az += vaz;
        m.el += vel;
        // Reflect off the elevation band; speed is preserved.
        if (m.el > cfg.elevation_band) {
          m.el = 2.0 * cfg.elevation_band - m.el;
          m.heading = -m.heading;
          vel = -vel;
        } else if (m.el < -cfg.elevation_band) {
          m.el = -2.0 * cfg.elevation_band - m.el;
          m.heading = -m.heading;
          vel = -vel;
        }
      }

      ObjectObservation& o = raw[i];
      const double jaz = cfg.position_jitter * (2.0 * unit(rng) - 1.0);
      const double jel = cfg.position_jitter * (2.0 * unit(rng) - 1.0);
      const double obs_az = m.az + jaz;
      const double obs_el = m.el + jel;
      o.position = ViewingAngle::make(obs_az, obs_el);
      if (i == 0) {
        main_az.push_back(m.az);
        main_el.push_back(m.el);
      }

      o.appearance.resize(static_cast<std::size_t>(dims.d));
      for (int j = 0; j < dims.d; ++j) {
        o.appearance[static_cast<std::size_t>(j)] =
            m.prototype[static_cast<std::size_t>(j)] + cfg.appearance_noise * normal(rng);
      }
      o.motion = motion_histogram(vaz, vel, dims.k, speed_scale);
      for (auto& x : o.motion) x += cfg.motion_noise * normal(rng);

      const double alpha = cfg.score_alpha + (i == 0 ? cfg.main_score_bias : 0.0);
      o.score = sample_beta(rng, alpha, cfg.score_beta);
    }

    std::vector<int> slots;
    ep.frames.push_back(make_frame_observation(raw, dims, slots));
    ep.gt_object_index.push_back(slots[0]);
  }

  // Annotator stand-in: centered moving average of the main object's true
  // track (annotators see the object, not the detector's jitter), truncated
  // at the episode boundaries.
  const int half = cfg.gt_window / 2;
  const int iT = static_cast<int>(T);
  ep.gt.reserve(T);
  for (int t = 0; t < iT; ++t) {
    const int lo = std::max(0, t - half);
    const int hi = std::min(iT - 1, t + (cfg.gt_window - 1 - half));
    double saz = 0.0;
    double sel = 0.0;
    for (int s = lo; s <= hi; ++s) {
      saz += main_az[static_cast<std::size_t>(s)];
      sel += main_el[static_cast<std::size_t>(s)];
    }
    const double cnt = static_cast<double>(hi - lo + 1);
    ep.gt.push_back(ViewingAngle::make(saz / cnt, sel / cnt));
  }
  return ep;
}

}  // namespace pilot360
