#include "pilot360/agent.hpp"

#include "json.hpp"
#include "pilot360/errors.hpp"

namespace pilot360 {

StepResult pilot_step(const PilotModel& model, const FrameObservation& obs,
                      const AgentState& state, const StepOverrides& overrides) {
  const SelectorOutput sel = selector_forward(model, obs, state.selector);
  int index = select_greedy(sel.dist);
  if (overrides.forced_index) {
    index = *overrides.forced_index;
    if (index < 0 || index >= static_cast<int>(obs.objects.size())) {
      throw InvalidInput("pilot_step: forced index out of range");
    }
  }
  const ObjectObservation& main = obs.objects[static_cast<std::size_t>(index)];

  StepResult out;
  out.index = index;
  out.state.selector = sel.state;
  if (overrides.bypass_regressor) {
    out.state.regressor = state.regressor;
    out.angle = main.position;
  } else {
    const Action naive = naive_action(main.position, state.angle);
    const RegressorOutput reg = regressor_forward(model, main.motion, naive, state.regressor);
    out.state.regressor = reg.state;
    out.angle = apply_action(state.angle, reg.action);
  }
  out.state.angle = out.angle;
  return out;
}

PilotResult pilot_episode(const PilotModel& model, const Episode& episode,
                          const ViewingAngle& init, const PilotOptions& options) {
  episode.validate(1);
  if (episode.dims != model.config.dims) {
    throw InvalidInput("pilot_episode: episode dims do not match the model");
  }
  if (!options.forced_indices.empty() && options.forced_indices.size() != episode.length()) {
    throw InvalidInput("pilot_episode: forced index count != frame count");
  }
  PilotResult res;
  res.trajectory.reserve(episode.length());
  res.selected.reserve(episode.length());
  AgentState state = AgentState::initial(model.config, init);
  for (std::size_t t = 0; t < episode.length(); ++t) {
    StepOverrides ov;
    ov.bypass_regressor = options.bypass_regressor;
    if (!options.forced_indices.empty()) ov.forced_index = options.forced_indices[t];
    StepResult step = pilot_step(model, episode.frames[t], state, ov);
    res.trajectory.push_back(step.angle);
    res.selected.push_back(step.index);
    state = std::move(step.state);
  }
  return res;
}

// ---------------------------------------------------------------------------

using json = nlohmann::json;

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path,
                                   const std::string& checkpoint_id,
                                   std::optional<std::size_t> frames)
    : path_(path), out_(path) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  json h = {{"format_version", kTrajectoryFormatVersion}, {"checkpoint", checkpoint_id}};
  if (frames) h["frames"] = *frames;
  out_ << h.dump() << '\n';
}

void TrajectoryWriter::write(std::size_t frame, const ViewingAngle& angle, int selected) {
  json j = {{"frame", frame},
            {"azimuth", angle.azimuth},
            {"elevation", angle.elevation},
            {"selected", selected}};
  out_ << j.dump() << '\n';
  if (!out_) throw IoError("write failed on " + path_.string());
}

void TrajectoryWriter::close() {
  out_.flush();
  if (!out_) throw IoError("flush failed on " + path_.string());
  out_.close();
}

TrajectoryFile load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file " + path.string());
  TrajectoryFile tf;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed trajectory record: ") + e.what());
    }
    if (line == 1) {
      if (!j.contains("format_version") || j.at("format_version") != kTrajectoryFormatVersion) {
        throw VersionError("trajectory file " + path.string() + ": unsupported format_version");
      }
      tf.checkpoint_id = j.value("checkpoint", "");
      continue;
    }
    try {
      if (j.at("frame").get<std::size_t>() != tf.result.trajectory.size()) {
        throw ParseError(line, "frame records out of order");
      }
      tf.result.trajectory.push_back(
          {j.at("azimuth").get<double>(), j.at("elevation").get<double>()});
      tf.result.selected.push_back(j.at("selected").get<int>());
    } catch (const json::exception& e) {
      throw ParseError(line, e.what());
    }
  }
  if (line == 0) throw ParseError(1, "empty trajectory file");
  return tf;
}

}  // namespace pilot360
