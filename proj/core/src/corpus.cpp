#include "pcsel/corpus.hpp"

#include <algorithm>
#include <fstream>

#include "pcsel/errors.hpp"
#include "pcsel/kitti.hpp"
#include "pcsel/rng.hpp"

namespace pcsel {

namespace fs = std::filesystem;

std::vector<CorpusFrame> list_corpus(const fs::path& root) {
  const fs::path velodyne_dir = root / "velodyne";
  std::error_code ec;
  if (!fs::is_directory(velodyne_dir, ec)) {
    throw Error(ErrorCode::io_failure,
                "corpus has no velodyne directory at " + velodyne_dir.string());
  }

  std::vector<CorpusFrame> frames;
  for (const auto& entry : fs::directory_iterator(velodyne_dir, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".bin") {
      continue;
    }
    CorpusFrame frame;
    frame.frame_id = entry.path().stem().string();
    frame.velodyne = entry.path();
    std::error_code probe_ec;
    fs::path labels = root / "label_2" / (frame.frame_id + ".txt");
    if (fs::is_regular_file(labels, probe_ec)) frame.labels = labels;
    fs::path calib = root / "calib" / (frame.frame_id + ".txt");
    if (fs::is_regular_file(calib, probe_ec)) frame.calib = calib;
    frames.push_back(std::move(frame));
  }
  if (ec) {
    throw Error(ErrorCode::io_failure,
                "cannot scan " + velodyne_dir.string() + ": " + ec.message());
  }
  std::sort(frames.begin(), frames.end(),
            [](const CorpusFrame& a, const CorpusFrame& b) {
              return a.frame_id < b.frame_id;
            });
  return frames;
}

PointCloud load_frame_cloud(const CorpusFrame& frame) {
  return read_velodyne_bin(read_file_bytes(frame.velodyne), frame.frame_id);
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::io_failure, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorCode::io_failure, "cannot read " + path.string());
  }
  return bytes;
}

void write_file_bytes(const fs::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw Error(ErrorCode::io_failure,
                  "cannot create " + path.parent_path().string() + ": " +
                      ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::io_failure, "cannot open " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::io_failure, "cannot write " + path.string());
  }
}

std::string read_file_text(const fs::path& path) {
  std::vector<std::uint8_t> bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_file_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

DegradationSpec with_frame_seed(DegradationSpec spec,
                                const std::string& frame_id) {
  spec.seed = rng::derive_seed(spec.seed, rng::hash_string(frame_id));
  return spec;
}

}  // namespace pcsel
