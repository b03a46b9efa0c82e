#include <cmath>
#include <limits>
#include <string>

#include "pilot360/errors.hpp"
#include "pilot360/eval.hpp"

namespace pilot360 {

std::vector<ViewingAngle> center_hold(const Episode& episode) {
  episode.validate(1);
  return std::vector<ViewingAngle>(episode.length(), initial_angle(episode));
}

std::vector<ViewingAngle> greedy_salient(const Episode& episode) {
  episode.validate(1);
  std::vector<ViewingAngle> out;
  out.reserve(episode.length());
  // Frames are score-ordered, so slot 0 is the most confident detection.
  for (const auto& f : episode.frames) out.push_back(f.objects.front().position);
  return out;
}

std::vector<ViewingAngle> selector_only(const Episode& episode, const PilotModel& model) {
  PilotOptions opt;
  opt.bypass_regressor = true;
  return pilot_episode(model, episode, initial_angle(episode), opt).trajectory;
}

std::vector<ViewingAngle> full_pilot(const Episode& episode, const PilotModel& model) {
  return pilot_episode(model, episode, initial_angle(episode)).trajectory;
}

// ---------------------------------------------------------------------------

void DpConfig::validate() const {
  if (!(cell_deg > 0.0 && cell_deg <= 180.0)) throw InvalidInput("dp cell_deg must lie in (0, 180]");
  const double az = 360.0 / cell_deg;
  const double el = 180.0 / cell_deg;
  if (std::abs(az - std::round(az)) > 1e-9 || std::abs(el - std::round(el)) > 1e-9) {
    throw InvalidInput("dp cell_deg must divide 180");
  }
  if (!(smooth_weight >= 0.0)) throw InvalidInput("dp smooth_weight must be >= 0");
  if (!(eta > 0.0)) throw InvalidInput("dp eta must be > 0");
}

std::vector<ViewingAngle> view_grid(double cell_deg) {
  DpConfig{cell_deg}.validate();
  const int n_az = static_cast<int>(std::lround(360.0 / cell_deg));
  const int n_el = static_cast<int>(std::lround(180.0 / cell_deg));
  std::vector<ViewingAngle> cells;
  cells.reserve(static_cast<std::size_t>(n_az * n_el));
  for (int j = 0; j < n_el; ++j) {
    for (int i = 0; i < n_az; ++i) {
      cells.push_back({(i + 0.5) * cell_deg, -90.0 + (j + 0.5) * cell_deg});
    }
  }
  return cells;
}

DpSolution dp_solve(const std::vector<std::vector<double>>& unary,
                    std::span<const ViewingAngle> cells, double w, double cell_unit) {
  const std::size_t T = unary.size();
  const std::size_t C = cells.size();
  if (T == 0 || C == 0) throw InvalidInput("dp_solve: empty instance");
  if (!(cell_unit > 0.0)) throw InvalidInput("dp_solve: distance unit must be positive");
  for (const auto& row : unary) {
    if (row.size() != C) throw InvalidInput("dp_solve: unary row length != cell count");
  }

  std::vector<std::vector<double>> dist(C, std::vector<double>(C));
  for (std::size_t a = 0; a < C; ++a) {
    for (std::size_t b = 0; b < C; ++b) dist[a][b] =
        angular_distance(cells[a], cells[b]) / cell_unit;
  }

  std::vector<double> best(unary[0]);
  std::vector<std::vector<int>> back(T, std::vector<int>(C, -1));
  std::vector<double> next(C);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      double top = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t p = 0; p < C; ++p) {
        const double v = best[p] - w * dist[p][c];
        if (v > top) {
          top = v;
          arg = static_cast<int>(p);
        }
      }
      next[c] = top + unary[t][c];
      back[t][c] = arg;
    }
    best.swap(next);
  }

  DpSolution sol;
  int c = 0;
  for (std::size_t i = 1; i < C; ++i) {
    if (best[i] > best[static_cast<std::size_t>(c)]) c = static_cast<int>(i);
  }
  sol.objective = best[static_cast<std::size_t>(c)];
  sol.path.assign(T, 0);
  for (std::size_t t = T; t-- > 0;) {
    sol.path[t] = c;
    if (t > 0) c = back[t][static_cast<std::size_t>(c)];
  }
  return sol;
}

std::vector<std::vector<double>> dp_unary(const Episode& episode,
                                          std::span<const ViewingAngle> cells, double eta) {
  std::vector<std::vector<double>> unary(episode.length(), std::vector<double>(cells.size(), 0.0));
  for (std::size_t t = 0; t < episode.length(); ++t) {
    const auto& objects = episode.frames[t].objects;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const ObjectObservation* nearest = nullptr;
      double nearest_dist = std::numeric_limits<double>::infinity();
      for (const auto& o : objects) {
        if (o.score <= 0.0) continue;
        const double d = angular_distance(cells[c], o.position);
        if (d < nearest_dist) {
          nearest_dist = d;
          nearest = &o;
        }
      }
      if (nearest) unary[t][c] = nearest->score * reward(cells[c], nearest->position, eta);
    }
  }
  return unary;
}

std::vector<ViewingAngle> offline_dp(const Episode& episode, const DpConfig& config) {
  episode.validate(1);
  config.validate();
  const std::vector<ViewingAngle> cells = view_grid(config.cell_deg);
  const DpSolution sol =
      dp_solve(dp_unary(episode, cells, config.eta), cells, config.smooth_weight, config.cell_deg);
  std::vector<ViewingAngle> out;
  out.reserve(sol.path.size());
  for (int c : sol.path) out.push_back(cells[static_cast<std::size_t>(c)]);
  return out;
}

}  // namespace pilot360
