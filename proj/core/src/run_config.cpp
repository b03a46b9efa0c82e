#include "pilot360/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pilot360/errors.hpp"

namespace pilot360 {

using json = nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

// Applies `setters` to every key of `obj`; any key without a setter is an error.
void apply_section(const json& obj, const std::string& path,
                   const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) throw ConfigError("config: '" + path + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("config: unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + (path.empty() ? key : path + "." + key) +
                        "': " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

}  // namespace

void RunConfig::validate() const {
  try {
    scene.validate();
    model.validate();
    train.validate();
    dp.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!(model.dims == scene.dims)) throw ConfigError("config: model dims differ from scene dims");
  if (train_episodes < 1) throw ConfigError("config: train_episodes must be >= 1");
  if (test_episodes < 1) throw ConfigError("config: test_episodes must be >= 1");
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  for (int n : sweep_n) {
    if (n < scene.objects) throw ConfigError("config: sweep N values must be >= scene objects");
  }
}

RunConfig parse_run_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig c;
  SceneConfig& s = c.scene;
  TrainConfig& t = c.train;
  apply_section(root, "",
                {{"scene",
                  [&](const json& v) {
                    apply_section(v, "scene",
                                  {{"d", set(s.dims.d)},
                                   {"k", set(s.dims.k)},
                                   {"N", set(s.dims.n)},
                                   {"frames", set(s.frames)},
                                   {"objects", set(s.objects)},
                                   {"speed_min", set(s.speed_min)},
                                   {"speed_max", set(s.speed_max)},
                                   {"segment_mean_frames", set(s.segment_mean_frames)},
                                   {"max_turn_deg", set(s.max_turn_deg)},
                                   {"elevation_band", set(s.elevation_band)},
                                   {"init_elevation_spread", set(s.init_elevation_spread)},
                                   {"position_jitter", set(s.position_jitter)},
                                   {"appearance_noise", set(s.appearance_noise)},
                                   {"motion_noise", set(s.motion_noise)},
                                   {"score_alpha", set(s.score_alpha)},
                                   {"score_beta", set(s.score_beta)},
                                   {"main_score_bias", set(s.main_score_bias)},
                                   {"gt_window", set(s.gt_window)},
                                   {"prototype_seed", set(s.prototype_seed)}});
                  }},
                 {"model",
                  [&](const json& v) {
                    apply_section(v, "model",
                                  {{"selector_hidden", set(c.model.selector_hidden)},
                                   {"regressor_hidden", set(c.model.regressor_hidden)},
                                   {"position_scale", set(c.model.position_scale)},
                                   {"action_scale", set(c.model.action_scale)}});
                  }},
                 {"train",
                  [&](const json& v) {
                    apply_section(v, "train",
                                  {{"batch_size", set(t.batch_size)},
                                   {"max_epochs", set(t.max_epochs)},
                                   {"seq_len", set(t.seq_len)},
                                   {"lambda", set(t.lambda)},
                                   {"lr_initial", set(t.lr.initial)},
                                   {"lr_decay", set(t.lr.decay)},
                                   {"lr_period", set(t.lr.period)},
                                   {"samples", set(t.samples)},
                                   {"eta", set(t.eta)},
                                   {"seed", set(t.seed)},
                                   {"reward_baseline",
                                    [&](const json& b) {
                                      try {
                                        t.reward_baseline =
                                            parse_reward_baseline(b.get<std::string>());
                                      } catch (const InvalidInput& e) {
                                        throw ConfigError(std::string("config: train.reward_baseline: ") +
                                                          e.what());
                                      }
                                    }},
                                   {"grad_clip", set(t.grad_clip)},
                                   {"pg_weight", set(t.pg_weight)},
                                   {"checkpoint_every", set(t.checkpoint_every)}});
                  }},
                 {"data",
                  [&](const json& v) {
                    apply_section(v, "data",
                                  {{"train_episodes", set(c.train_episodes)},
                                   {"test_episodes", set(c.test_episodes)},
                                   {"train_seed", set(c.train_data_seed)},
                                   {"test_seed", set(c.test_data_seed)}});
                  }},
                 {"eval",
                  [&](const json& v) {
                    apply_section(v, "eval",
                                  {{"methods", set(c.eval_methods)},
                                   {"jobs", set(c.jobs)},
                                   {"dp_cell_deg", set(c.dp.cell_deg)},
                                   {"dp_smooth_weight", set(c.dp.smooth_weight)}});
                  }},
                 {"sweep",
                  [&](const json& v) { apply_section(v, "sweep", {{"n_values", set(c.sweep_n)}}); }},
                 {"init_seed", set(c.init_seed)},
                 {"out_dir", set(c.out_dir)}});
  c.model.dims = c.scene.dims;
  c.dp.eta = c.train.eta;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& c) {
  const SceneConfig& s = c.scene;
  const TrainConfig& t = c.train;
  json j = {
      {"scene",
       {{"d", s.dims.d},
        {"k", s.dims.k},
        {"N", s.dims.n},
        {"frames", s.frames},
        {"objects", s.objects},
        {"speed_min", s.speed_min},
        {"speed_max", s.speed_max},
        {"segment_mean_frames", s.segment_mean_frames},
        {"max_turn_deg", s.max_turn_deg},
        {"elevation_band", s.elevation_band},
        {"init_elevation_spread", s.init_elevation_spread},
        {"position_jitter", s.position_jitter},
        {"appearance_noise", s.appearance_noise},
        {"motion_noise", s.motion_noise},
        {"score_alpha", s.score_alpha},
        {"score_beta", s.score_beta},
        {"main_score_bias", s.main_score_bias},
        {"gt_window", s.gt_window},
        {"prototype_seed", s.prototype_seed}}},
      {"model",
       {{"selector_hidden", c.model.selector_hidden},
        {"regressor_hidden", c.model.regressor_hidden},
        {"position_scale", c.model.position_scale},
        {"action_scale", c.model.action_scale}}},
      {"train",
       {{"batch_size", t.batch_size},
        {"max_epochs", t.max_epochs},
        {"seq_len", t.seq_len},
        {"lambda", t.lambda},
        {"lr_initial", t.lr.initial},
        {"lr_decay", t.lr.decay},
        {"lr_period", t.lr.period},
        {"samples", t.samples},
        {"eta", t.eta},
        {"seed", t.seed},
        {"reward_baseline", to_string(t.reward_baseline)},
        {"grad_clip", t.grad_clip},
        {"pg_weight", t.pg_weight},
        {"checkpoint_every", t.checkpoint_every}}},
      {"data",
       {{"train_episodes", c.train_episodes},
        {"test_episodes", c.test_episodes},
        {"train_seed", c.train_data_seed},
        {"test_seed", c.test_data_seed}}},
      {"eval",
       {{"methods", c.eval_methods},
        {"jobs", c.jobs},
        {"dp_cell_deg", c.dp.cell_deg},
        {"dp_smooth_weight", c.dp.smooth_weight}}},
      {"sweep", {{"n_values", c.sweep_n}}},
      {"init_seed", c.init_seed},
      {"out_dir", c.out_dir}};
  return j.dump(2);
}

}  // namespace pilot360
