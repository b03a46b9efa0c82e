#include "pilot360/episode_io.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "pilot360/errors.hpp"

namespace pilot360 {

using json = nlohmann::json;

namespace {

double number_at(const json& j, std::size_t line, const char* what) {
  if (!j.is_number()) throw ParseError(line, std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(line, std::string(what) + " must be finite");
  return v;
}

std::vector<double> vector_at(const json& j, std::size_t len, std::size_t line,
                              const char* what) {
  if (!j.is_array() || j.size() != len) {
    throw ParseError(line, std::string(what) + " must be an array of length " +
                               std::to_string(len));
  }
  std::vector<double> v;
  v.reserve(len);
  for (const auto& x : j) v.push_back(number_at(x, line, what));
  return v;
}

int int_field(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw ParseError(line, std::string("header field '") + key + "' missing or not an integer");
  }
  return j.at(key).get<int>();
}

json object_tuple(const ObjectObservation& o) {
  return json::array({o.score, o.position.azimuth, o.position.elevation, o.appearance, o.motion});
}

}  // namespace

// ---------------------------------------------------------------------------

EpisodeReader::EpisodeReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open episode file " + path.string());
}

bool EpisodeReader::read_line(std::string& out) {
  if (!std::getline(in_, out)) return false;
  ++line_no_;
  return true;
}

bool EpisodeReader::next_episode(EpisodeHeader& header) {
  if (remaining_ != 0) {
    throw StateError("next_episode called with " + std::to_string(remaining_) +
                     " frames unread in the current episode");
  }
  std::string text;
  if (!read_line(text)) return false;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no_, std::string("malformed header record: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_no_, "header record must be an object");
  if (!j.contains("format_version")) throw ParseError(line_no_, "header lacks format_version");
  const int version = int_field(j, "format_version", line_no_);
  if (version != kEpisodeFormatVersion) {
    throw VersionError("episode file " + path_.string() + " line " + std::to_string(line_no_) +
                       ": format_version " + std::to_string(version) + ", expected " +
                       std::to_string(kEpisodeFormatVersion));
  }
  header.dims = {int_field(j, "d", line_no_), int_field(j, "k", line_no_),
                 int_field(j, "N", line_no_)};
  const int T = int_field(j, "T", line_no_);
  if (T < 1) throw ParseError(line_no_, "header T must be >= 1");
  try {
    header.dims.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(line_no_, e.what());
  }
  header.frames = static_cast<std::size_t>(T);
  current_ = header;
  remaining_ = header.frames;
  return true;
}

bool EpisodeReader::next_frame(FrameRecord& rec) {
  if (remaining_ == 0) return false;
  std::string text;
  if (!read_line(text)) {
    throw ParseError(line_no_ + 1, "unexpected end of file: " + std::to_string(remaining_) +
                                       " frame records missing");
  }
  const std::size_t line = line_no_;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("malformed frame record: ") + e.what());
  }
  const ObservationDims& dims = current_.dims;
  if (!j.is_object() || !j.contains("objects") || !j.contains("gt")) {
    throw ParseError(line, "frame record needs 'objects' and 'gt'");
  }
  const json& objs = j.at("objects");
  if (!objs.is_array() || objs.size() != static_cast<std::size_t>(dims.n)) {
    throw ParseError(line, "frame record must hold exactly N=" + std::to_string(dims.n) +
                               " objects");
  }
  rec.frame.objects.clear();
  rec.frame.objects.reserve(objs.size());
  for (const auto& tup : objs) {
    if (!tup.is_array() || tup.size() != 5) {
      throw ParseError(line, "object tuple must be [score, azimuth, elevation, appearance, motion]");
    }
    ObjectObservation o;
    o.score = number_at(tup[0], line, "score");
    const double az = number_at(tup[1], line, "azimuth");
    const double el = number_at(tup[2], line, "elevation");
    if (!(az >= 0.0 && az < 360.0 && el >= -90.0 && el <= 90.0)) {
      throw ParseError(line, "object position outside the viewing sphere range");
    }
    o.position = {az, el};
    o.appearance = vector_at(tup[3], static_cast<std::size_t>(dims.d), line, "appearance");
    o.motion = vector_at(tup[4], static_cast<std::size_t>(dims.k), line, "motion");
    if (!(o.score >= 0.0 && o.score <= 1.0)) throw ParseError(line, "score outside [0, 1]");
    rec.frame.objects.push_back(std::move(o));
  }
  if (!std::is_sorted(rec.frame.objects.begin(), rec.frame.objects.end(), score_order_less)) {
    throw ParseError(line, "objects are not in score order");
  }
  rec.frame.flat = flatten_objects(rec.frame.objects, dims);

  const std::vector<double> gt = vector_at(j.at("gt"), 2, line, "gt");
  if (!(gt[0] >= 0.0 && gt[0] < 360.0 && gt[1] >= -90.0 && gt[1] <= 90.0)) {
    throw ParseError(line, "gt angle outside the viewing sphere range");
  }
  rec.gt = {gt[0], gt[1]};

  rec.gt_object_index.reset();
  if (j.contains("gt_object_index") && !j.at("gt_object_index").is_null()) {
    const json& gi = j.at("gt_object_index");
    if (!gi.is_number_integer()) throw ParseError(line, "gt_object_index must be an integer");
    const int idx = gi.get<int>();
    if (idx < 0 || idx >= dims.n) throw ParseError(line, "gt_object_index out of range");
    rec.gt_object_index = idx;
  }
  --remaining_;
  return true;
}

// ---------------------------------------------------------------------------

EpisodeWriter::EpisodeWriter(const std::filesystem::path& path) : path_(path), out_(path) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
}

void EpisodeWriter::begin_episode(const EpisodeHeader& header) {
  if (written_ != current_.frames) {
    throw StateError("previous episode is incomplete");
  }
  json h = {{"format_version", kEpisodeFormatVersion},
            {"d", header.dims.d},
            {"k", header.dims.k},
            {"N", header.dims.n},
            {"T", header.frames}};
  out_ << h.dump() << '\n';
  current_ = header;
  written_ = 0;
}

void EpisodeWriter::write_frame(std::size_t t, const FrameRecord& rec) {
  if (written_ >= current_.frames) throw StateError("more frames than the header announced");
  json objs = json::array();
  for (const auto& o : rec.frame.objects) objs.push_back(object_tuple(o));
  json j = {{"t", t}, {"objects", std::move(objs)}, {"gt", {rec.gt.azimuth, rec.gt.elevation}}};
  if (rec.gt_object_index) j["gt_object_index"] = *rec.gt_object_index;
  out_ << j.dump() << '\n';
  ++written_;
  if (!out_) throw IoError("write failed on " + path_.string());
}

void EpisodeWriter::write(const Episode& ep) {
  ep.validate(1);
  begin_episode({ep.dims, ep.frames.size()});
  FrameRecord rec;
  for (std::size_t t = 0; t < ep.frames.size(); ++t) {
    rec.frame = ep.frames[t];
    rec.gt = ep.gt[t];
    rec.gt_object_index.reset();
    if (!ep.gt_object_index.empty()) rec.gt_object_index = ep.gt_object_index[t];
    write_frame(t, rec);
  }
}

void EpisodeWriter::close() {
  out_.flush();
  if (!out_) throw IoError("flush failed on " + path_.string());
  out_.close();
}

void save_episodes(std::span<const Episode> episodes, const std::filesystem::path& path) {
  EpisodeWriter w(path);
  for (const auto& ep : episodes) w.write(ep);
  w.close();
}

std::vector<Episode> load_episodes(const std::filesystem::path& path) {
  EpisodeReader reader(path);
  std::vector<Episode> out;
  EpisodeHeader header;
  while (reader.next_episode(header)) {
    Episode ep;
    ep.dims = header.dims;
    ep.frames.reserve(header.frames);
    ep.gt.reserve(header.frames);
    FrameRecord rec;
    bool all_indexed = true;
    std::vector<int> idx;
    while (reader.next_frame(rec)) {
      ep.frames.push_back(std::move(rec.frame));
      ep.gt.push_back(rec.gt);
      if (rec.gt_object_index) {
        idx.push_back(*rec.gt_object_index);
      } else {
        all_indexed = false;
      }
    }
    if (all_indexed) ep.gt_object_index = std::move(idx);
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace pilot360
