#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pilot360/agent.hpp"
#include "pilot360/checkpoint.hpp"
#include "pilot360/episode_io.hpp"
#include "pilot360/errors.hpp"
#include "pilot360/eval.hpp"
#include "pilot360/gradcheck.hpp"
#include "pilot360/run_config.hpp"
#include "pilot360/training.hpp"

namespace fs = std::filesystem;
using namespace pilot360;

namespace {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kUsage = 2,
  kIo = 3,
  kConfig = 4,
  kNumerics = 5,
};

// Raised for bad flag values that CLI11 cannot catch by itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::optional<std::string> out_dir;

  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (const char* env = std::getenv("PILOT360_OUT_DIR"); env && *env) c.out_dir = env;
    if (out_dir) c.out_dir = *out_dir;
    return c;
  }
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed on " + path.string());
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> count;
  std::optional<int> frames;
  std::optional<int> objects;
  std::optional<int> candidates;
  std::string out;
};

int run_gen_data(const Common& common, const GenDataArgs& a) {
  RunConfig cfg = common.load();
  if (a.frames) cfg.scene.frames = *a.frames;
  if (a.objects) cfg.scene.objects = *a.objects;
  if (a.candidates) cfg.scene.dims.n = *a.candidates;
  try {
    cfg.scene.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  const std::uint64_t seed = a.seed.value_or(cfg.train_data_seed);
  const std::size_t count = a.count.value_or(cfg.train_episodes);

  const std::vector<Episode> episodes = synth_dataset(cfg.scene, count, seed);
  save_episodes(episodes, a.out);

  std::size_t frames = 0;
  for (const auto& ep : episodes) frames += ep.length();
  std::printf("wrote %zu episodes (%zu frames) to %s\n", episodes.size(), frames, a.out.c_str());
  std::printf("objects per frame: %d real, N=%d slots\n", cfg.scene.objects, cfg.scene.dims.n);
  if (!episodes.empty()) {
    std::printf("main object has the top score in %.1f%% of frames\n",
                100.0 * main_top_score_rate(episodes));
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  bool resume = false;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
};

int run_train(const Common& common, const TrainArgs& a) {
  RunConfig cfg = common.load();
  if (a.epochs) cfg.train.max_epochs = *a.epochs;
  if (a.lr) cfg.train.lr.initial = *a.lr;
  if (a.seed) cfg.train.seed = *a.seed;

  const std::vector<Episode> data = load_episodes(a.data);
  if (data.empty()) throw InvalidInput("training set " + a.data + " holds no episodes");
  // The architecture follows the data; everything else comes from the config.
  cfg.scene.dims = data.front().dims;
  cfg.model.dims = data.front().dims;
  cfg.validate();

  const fs::path out_dir = cfg.out_dir;
  TrainerState state = make_trainer_state(cfg.model, cfg.train, cfg.init_seed);
  if (a.resume) {
    if (const auto latest = latest_checkpoint(out_dir)) {
      state = resume_trainer_state(load_checkpoint(*latest, cfg.model));
      std::printf("resuming from %s (epoch %d)\n", latest->string().c_str(), state.epoch);
    } else {
      std::printf("no checkpoint in %s; starting fresh\n", out_dir.string().c_str());
    }
  }
  write_text(out_dir / "config.json", to_json(cfg) + "\n");

  TrainOutputs outputs;
  outputs.out_dir = out_dir;
  outputs.on_epoch = [&](const EpochMetrics& m) {
    std::printf("epoch %4d  lr %.3g  reward %+.4f  regression %.2f  smoothness %.2f\n", m.epoch,
                m.lr, m.mean_reward, m.regression, m.smoothness);
    std::fflush(stdout);
  };
  train(state, data, cfg.train, outputs);
  std::printf("final checkpoint: %s\n", checkpoint_path(out_dir, state.epoch).string().c_str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::optional<std::string> methods;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

int run_eval(const Common& common, const EvalArgs& a) {
  RunConfig cfg = common.load();
  std::vector<std::string> names = a.methods ? split_csv(*a.methods) : cfg.eval_methods;
  if (names.empty()) throw UsageError("--methods is empty");
  const int jobs = a.jobs.value_or(cfg.jobs);
  if (jobs < 1) throw UsageError("--jobs must be >= 1");

  const std::vector<Episode> data = load_episodes(a.data);
  std::optional<PilotModel> model;
  bool needs_model = false;
  for (const auto& n : names) needs_model |= (n == "pilot" || n == "selector_only");
  if (needs_model) {
    Checkpoint ckpt = load_checkpoint(a.checkpoint);
    for (const auto& ep : data) {
      if (ep.dims != ckpt.model.config.dims) {
        throw ConfigError("checkpoint architecture does not match the episode dims in " + a.data);
      }
    }
    model = std::move(ckpt.model);
  }

  std::vector<NamedMethod> methods;
  try {
    methods = make_methods(names, model ? &*model : nullptr, cfg.dp);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const BenchmarkTable table = benchmark(methods, data, jobs);
  const fs::path out = a.out ? fs::path(*a.out) : fs::path(cfg.out_dir) / "eval.json";
  write_text(out, to_json(table) + "\n");
  std::printf("%s", to_text(table).c_str());
  std::printf("wrote %s\n", out.string().c_str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct PilotArgs {
  std::string checkpoint;
  std::string episodes;
  std::string out;
};

// Streams frames through the agent: one frame in memory at a time.
int run_pilot(const PilotArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const PilotModel& model = ckpt.model;
  const std::string id = checkpoint_id(a.checkpoint);

  EpisodeReader reader(a.episodes);
  EpisodeHeader header;
  if (!reader.next_episode(header)) throw InvalidInput(a.episodes + " holds no episodes");
  if (header.dims != model.config.dims) {
    throw ConfigError("checkpoint architecture (N=" + std::to_string(model.config.dims.n) +
                      ", d=" + std::to_string(model.config.dims.d) +
                      ", k=" + std::to_string(model.config.dims.k) +
                      ") does not match the episode dims");
  }

  TrajectoryWriter writer(a.out, id, header.frames);
  FrameRecord rec;
  AgentState state;
  std::size_t t = 0;
  while (reader.next_frame(rec)) {
    // l_0 is the first annotated angle, as in training and evaluation.
    if (t == 0) state = AgentState::initial(model.config, rec.gt);
    const StepResult step = pilot_step(model, rec.frame, state);
    writer.write(t, step.angle, step.index);
    state = step.state;
    ++t;
  }
  writer.close();
  std::printf("piloted %zu frames -> %s\n", t, a.out.c_str());
  EpisodeHeader extra;
  if (reader.next_episode(extra)) {
    std::fprintf(stderr, "note: only the first episode of %s was piloted\n", a.episodes.c_str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 0;
  int seeds = 1;
  double tolerance = 1e-4;
  std::string fault = "none";
};

int run_gradcheck(const Common& common, const GradcheckArgs& a) {
  const RunConfig cfg = common.load();
  GradCheckSetup setup;
  setup.lambda = cfg.train.lambda;
  setup.eta = cfg.train.eta;
  GradCheckOptions opts;
  opts.tolerance = a.tolerance;

  GradientFault fault = GradientFault::none;
  if (a.fault == "drop_selector_recurrence") {
    fault = GradientFault::drop_selector_recurrence;
  } else if (a.fault == "drop_angle_feedback") {
    fault = GradientFault::drop_angle_feedback;
  } else if (a.fault != "none") {
    throw UsageError("unknown fault '" + a.fault +
                     "' (valid: none, drop_selector_recurrence, drop_angle_feedback)");
  }

  bool all_passed = true;
  for (int s = 0; s < a.seeds; ++s) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(s);
    for (auto target : {GradCheckTarget::selector, GradCheckTarget::regressor,
                        GradCheckTarget::joint, GradCheckTarget::trajectory_loss}) {
      const GradCheckReport r = run_gradient_check(target, setup, seed, opts, fault);
      const ParamCheck* worst = r.worst();
      std::printf("seed %llu  %-16s %s  max rel err %.3e", static_cast<unsigned long long>(seed),
                  std::string(to_string(target)).c_str(), r.passed ? "PASS" : "FAIL",
                  worst ? worst->max_rel_error : 0.0);
      if (worst) std::printf(" (%s)", worst->name.c_str());
      std::printf("  roundoff slack %.1e\n", r.roundoff);
      if (!r.passed) {
        all_passed = false;
        for (const auto& p : r.params) {
          if (!(p.max_rel_error < r.tolerance)) {
            std::printf("  failing parameter %s[%lld]: analytic %.9g numeric %.9g rel %.3e\n",
                        p.name.c_str(), static_cast<long long>(p.worst_index), p.analytic,
                        p.numeric, p.max_rel_error);
          }
        }
      }
    }
  }
  std::printf("%s at tolerance %.1e\n", all_passed ? "gradcheck passed" : "gradcheck FAILED",
              a.tolerance);
  return all_passed ? kOk : kNumerics;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"360-degree video piloting agent: data generation, training and evaluation"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config_path, "JSON run configuration");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic episode file");
  gen_cmd->add_option("--seed", gen.seed, "dataset seed (default: data.train_seed)");
  gen_cmd->add_option("--count", gen.count, "number of episodes (default: data.train_episodes)");
  gen_cmd->add_option("--frames", gen.frames, "frames per episode");
  gen_cmd->add_option("--objects", gen.objects, "real objects per scene");
  gen_cmd->add_option("--candidates", gen.candidates, "candidate slots N per frame");
  gen_cmd->add_option("-o,--out", gen.out, "episode file to write")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train the agent on an episode file");
  train_cmd->add_option("--data", tr.data, "training episodes")->required();
  train_cmd->add_option("--out-dir", common.out_dir, "checkpoint and log directory");
  train_cmd->add_flag("--resume", tr.resume, "continue from the latest checkpoint in --out-dir");
  train_cmd->add_option("--epochs", tr.epochs, "total epochs (overrides train.max_epochs)")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr", tr.lr, "initial learning rate")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", tr.seed, "training RNG seed");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "score methods on an episode file");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "trained checkpoint")->required();
  eval_cmd->add_option("--data", ev.data, "test episodes")->required();
  eval_cmd->add_option("--methods", ev.methods, "comma-separated method names");
  eval_cmd->add_option("-j,--jobs", ev.jobs, "worker threads");
  eval_cmd->add_option("-o,--out", ev.out, "JSON table path (default: <out_dir>/eval.json)");
  eval_cmd->add_option("--out-dir", common.out_dir, "output directory");

  PilotArgs pi;
  auto* pilot_cmd = app.add_subcommand("pilot", "pilot one episode and write its trajectory");
  pilot_cmd->add_option("--checkpoint", pi.checkpoint, "trained checkpoint")->required();
  pilot_cmd->add_option("--episodes", pi.episodes, "episode file")->required();
  pilot_cmd->add_option("-o,--out", pi.out, "trajectory file to write")->required();

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
  gc_cmd->add_option("--seed", gc.seed, "first seed");
  gc_cmd->add_option("--seeds", gc.seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--tolerance", gc.tolerance, "max relative error")
      ->check(CLI::PositiveNumber);
  gc_cmd->add_option("--inject-fault", gc.fault,
                     "none | drop_selector_recurrence | drop_angle_feedback");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return run_gen_data(common, gen);
    if (*train_cmd) return run_train(common, tr);
    if (*eval_cmd) return run_eval(common, ev);
    if (*pilot_cmd) return run_pilot(pi);
    if (*gc_cmd) return run_gradcheck(common, gc);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericsError& e) {
    std::cerr << "numerics error: " << e.what() << "\n";
    return kNumerics;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const VersionError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kUsage;
}
