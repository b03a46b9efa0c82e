#include "pilot360/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "pilot360/errors.hpp"

namespace pilot360 {

using json = nlohmann::json;

namespace {

json model_json(const ModelConfig& m) {
  return {{"d", m.dims.d},
          {"k", m.dims.k},
          {"N", m.dims.n},
          {"selector_hidden", m.selector_hidden},
          {"regressor_hidden", m.regressor_hidden},
          {"position_scale", m.position_scale},
          {"action_scale", m.action_scale}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.dims = {j.at("d").get<int>(), j.at("k").get<int>(), j.at("N").get<int>()};
  m.selector_hidden = j.at("selector_hidden").get<int>();
  m.regressor_hidden = j.at("regressor_hidden").get<int>();
  m.position_scale = j.at("position_scale").get<double>();
  m.action_scale = j.at("action_scale").get<double>();
  return m;
}

std::string describe(const ModelConfig& m) { return model_json(m).dump(); }

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  json header = {{"format_version", kCheckpointFormatVersion},
                 {"model", model_json(ckpt.model.config)},
                 {"epoch", ckpt.epoch},
                 {"lr_schedule",
                  {{"initial", ckpt.schedule.initial},
                   {"decay", ckpt.schedule.decay},
                   {"period", ckpt.schedule.period}}},
                 {"rng_state", ckpt.rng_state},
                 {"tensors", ckpt.model.params.size()}};
  out << header.dump() << '\n';
  for (const auto& t : ckpt.model.params) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(t.value.size()));
    for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) values.push_back(t.value(r, c));
    }
    json rec = {{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()},
                {"values", std::move(values)}};
    out << rec.dump() << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<ModelConfig>& expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string text;
  std::size_t line = 0;
  auto next = [&](const char* what) -> json {
    if (!std::getline(in, text)) throw ParseError(line + 1, std::string("missing ") + what);
    ++line;
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("malformed ") + what + ": " + e.what());
    }
  };

  const json header = next("checkpoint header");
  if (!header.is_object() || !header.contains("format_version")) {
    throw ParseError(1, "checkpoint header lacks format_version");
  }
  if (header.at("format_version") != kCheckpointFormatVersion) {
    throw VersionError("checkpoint " + path.string() + ": unsupported format_version " +
                       header.at("format_version").dump());
  }
  ModelConfig stored;
  LrSchedule schedule;
  int epoch = 0;
  std::string rng_state;
  std::size_t tensors = 0;
  try {
    stored = model_from_json(header.at("model"));
    epoch = header.at("epoch").get<int>();
    const json& lr = header.at("lr_schedule");
    schedule = {lr.at("initial").get<double>(), lr.at("decay").get<double>(),
                lr.at("period").get<int>()};
    rng_state = header.at("rng_state").get<std::string>();
    tensors = header.at("tensors").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("bad checkpoint header: ") + e.what());
  }
  if (expected && !(*expected == stored)) {
    throw ConfigError("checkpoint " + path.string() + " architecture " + describe(stored) +
                      " does not match expected " + describe(*expected));
  }

  Checkpoint ckpt{PilotModel(stored), epoch, schedule, rng_state};
  if (tensors != ckpt.model.params.size()) {
    throw ParseError(1, "checkpoint tensor count does not match the architecture");
  }
  for (std::size_t i = 0; i < tensors; ++i) {
    const json rec = next("tensor record");
    try {
      const auto name = rec.at("name").get<std::string>();
      if (!ckpt.model.params.contains(name)) {
        throw ParseError(line, "unknown tensor '" + name + "'");
      }
      ParamTensor& t = ckpt.model.params.at(name);
      const auto rows = rec.at("rows").get<Eigen::Index>();
      const auto cols = rec.at("cols").get<Eigen::Index>();
      const auto& values = rec.at("values");
      if (rows != t.value.rows() || cols != t.value.cols() ||
          values.size() != static_cast<std::size_t>(rows * cols)) {
        throw ParseError(line, "tensor '" + name + "' has the wrong shape");
      }
      std::size_t idx = 0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) t.value(r, c) = values[idx++].get<double>();
      }
    } catch (const json::exception& e) {
      throw ParseError(line, std::string("bad tensor record: ") + e.what());
    }
  }
  if (!ckpt.model.params.values_finite()) throw NumericsError("checkpoint holds non-finite values");
  return ckpt;
}

std::string checkpoint_id(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, int epoch) {
  char name[64];
  std::snprintf(name, sizeof name, "checkpoint-epoch-%06d.jsonl", epoch);
  return out_dir / name;
}

std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& out_dir) {
  if (!std::filesystem::is_directory(out_dir)) return std::nullopt;
  static const std::regex pattern(R"(checkpoint-epoch-(\d{6})\.jsonl)");
  std::optional<std::filesystem::path> best;
  int best_epoch = -1;
  for (const auto& entry : std::filesystem::directory_iterator(out_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) {
      const int e = std::stoi(m[1].str());
      if (e > best_epoch) {
        best_epoch = e;
        best = entry.path();
      }
    }
  }
  return best;
}

}  // namespace pilot360
