#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pilot360/observation.hpp"

namespace pilot360 {

inline constexpr int kEpisodeFormatVersion = 1;

// Episode files are UTF-8 JSON lines. Every episode starts with a header
// record {"format_version", "d", "k", "N", "T"} and is followed by exactly T
// frame records:
//
//   {"t": 0,
//    "objects": [[score, azimuth, elevation, [appearance...], [motion...]], ...],
//    "gt": [azimuth, elevation],
//    "gt_object_index": 2}            // optional
//
// Doubles are written in shortest round-trip form, so load(save(e)) == e.

struct EpisodeHeader {
  ObservationDims dims;
  std::size_t frames = 0;
};

struct FrameRecord {
  FrameObservation frame;
  ViewingAngle gt;
  std::optional<int> gt_object_index;
};

/// Streams an episode file one record at a time; memory does not depend on
/// episode length.
class EpisodeReader {
 public:
  explicit EpisodeReader(const std::filesystem::path& path);

  /// Reads the next episode header; false at a clean end of file.
  bool next_episode(EpisodeHeader& header);
  /// Reads the next frame of the current episode; false once T frames were read.
  bool next_frame(FrameRecord& record);

  std::size_t line() const { return line_no_; }

 private:
  bool read_line(std::string& out);

  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  EpisodeHeader current_;
  std::size_t remaining_ = 0;
};

class EpisodeWriter {
 public:
  explicit EpisodeWriter(const std::filesystem::path& path);

  void begin_episode(const EpisodeHeader& header);
  void write_frame(std::size_t t, const FrameRecord& record);
  void write(const Episode& episode);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  EpisodeHeader current_;
  std::size_t written_ = 0;
};

void save_episodes(std::span<const Episode> episodes, const std::filesystem::path& path);
std::vector<Episode> load_episodes(const std::filesystem::path& path);

}  // namespace pilot360
