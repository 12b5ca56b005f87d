#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcsel/degrade.hpp"
#include "pcsel/point_cloud.hpp"

// On-disk corpus layout and file IO.  A corpus root holds
// velodyne/<frame>.bin plus, optionally, label_2/<frame>.txt and
// calib/<frame>.txt with matching stems.

namespace pcsel {

struct CorpusFrame {
  std::string frame_id;
  std::filesystem::path velodyne;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> calib;
};

// Frames under root, sorted by id.  Throws IoFailure when root/velodyne
// is missing; an empty directory yields an empty list.
std::vector<CorpusFrame> list_corpus(const std::filesystem::path& root);

// read_velodyne_bin on the frame's file.  Throws IoFailure and the
// velodyne-format errors.
PointCloud load_frame_cloud(const CorpusFrame& frame);

// Whole-file IO; write creates parent directories.  Throws IoFailure.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path,
                     const std::string& text);

// The spec's seed with the frame id folded in, so corpus-level operations
// stay independent of frame iteration order.
DegradationSpec with_frame_seed(DegradationSpec spec,
                                const std::string& frame_id);

}  // namespace pcsel
