// Acceptance suite: eight end-to-end criteria, one PASS/FAIL line each.
// The exit code is the number of failed criteria.
//
// Criterion 1 uses the real dataset when PCSEL_KITTI_DIR points at a corpus
// (a root with velodyne/ or a flat directory of .bin files); without it the
// documented fallback checks the per-frame count-equality property and
// determinism on a synthetic corpus, exactly.

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pcsel/corpus.hpp"
#include "pcsel/degrade.hpp"
#include "pcsel/detect.hpp"
#include "pcsel/errors.hpp"
#include "pcsel/eval.hpp"
#include "pcsel/features.hpp"
#include "pcsel/iou.hpp"
#include "pcsel/kitti.hpp"
#include "pcsel/point_cloud.hpp"
#include "pcsel/registry.hpp"
#include "pcsel/rng.hpp"
#include "pcsel/selector.hpp"
#include "pcsel/service.hpp"
#include "pcsel/wire.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace pcsel;
using namespace std::chrono_literals;

namespace {

constexpr double kPi = 3.14159265358979323846;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------- corpus --

std::vector<fs::path> scan_bins(const fs::path& dir) {
  std::error_code ec;
  const fs::path velodyne =
      fs::is_directory(dir / "velodyne", ec) ? dir / "velodyne" : dir;
  std::vector<fs::path> bins;
  for (const auto& entry : fs::directory_iterator(velodyne, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      bins.push_back(entry.path());
    }
  }
  std::sort(bins.begin(), bins.end());
  return bins;
}

// ------------------------------------------------------------ criterion 1 --

bool criterion1(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::array<double, 3> edges = {0.10, 0.20, 0.40};

  if (const char* kitti = std::getenv("PCSEL_KITTI_DIR")) {
    const std::array<double, 3> published = {0.478, 0.263, 0.123};
    const std::vector<fs::path> bins = scan_bins(kitti);
    if (bins.empty()) {
      detail = std::string("no .bin frames under ") + kitti;
      return false;
    }
    std::array<double, 3> vg_sum{}, us_sum{};
    std::size_t frames = 0;
    bool counts_equal = true;
    for (const fs::path& bin : bins) {
      const PointCloud cloud =
          read_velodyne_bin(read_file_bytes(bin), bin.stem().string());
      if (cloud.points.empty()) continue;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const PointCloud vg = voxel_grid_filter(cloud, edges[e]);
        const PointCloud us = uniform_sample(cloud, edges[e]);
        if (vg.points.size() != us.points.size()) counts_equal = false;
        vg_sum[e] += normalized_point_count(cloud, vg);
        us_sum[e] += normalized_point_count(cloud, us);
      }
      ++frames;
    }
    const double elapsed = seconds_since(t0);
    bool in_band = true;
    std::string means;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double vg_mean = vg_sum[e] / static_cast<double>(frames);
      const double us_mean = us_sum[e] / static_cast<double>(frames);
      in_band = in_band && std::abs(vg_mean - published[e]) <= 0.02 &&
                std::abs(us_mean - published[e]) <= 0.02;
      if (!means.empty()) means += " ";
      means += fmt(vg_mean) + "/" + fmt(us_mean);
    }
    detail = "kitti n=" + std::to_string(frames) + " vg/us " + means + " in " +
             fmt(elapsed, 1) + "s";
    return counts_equal && in_band && elapsed < 600.0;
  }

  // Fallback: synthetic corpus, exact properties only.
  bool ok = true;
  for (int f = 0; f < 10; ++f) {
    PointCloud cloud = testutil::random_cloud(
        "synth-" + std::to_string(f), 2000, 1000 + f, 30.0);
    const double x0 = 0.5 * f, y0 = -3.0 + 0.3 * f;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        for (int k = 0; k < 10; ++k) {
          cloud.points.push_back(Point{static_cast<float>(x0 + 0.05 * i),
                                       static_cast<float>(y0 + 0.05 * j),
                                       static_cast<float>(0.05 * k), 0.5f});
        }
      }
    }
    for (const double edge : edges) {
      const PointCloud vg = voxel_grid_filter(cloud, edge);
      const PointCloud us = uniform_sample(cloud, edge);
      ok = ok && vg.points.size() == us.points.size();
      ok = ok && write_velodyne_bin(voxel_grid_filter(cloud, edge)) ==
                     write_velodyne_bin(vg);
      ok = ok &&
           write_velodyne_bin(uniform_sample(cloud, edge)) ==
               write_velodyne_bin(us);
    }
  }
  detail = "synthetic fallback: per-frame count equality and determinism, "
           "10 frames x 3 edges, exact";
  return ok;
}

// ------------------------------------------------------------ criterion 2 --

bool inside_box(const OrientedBox3D& box, double x, double y, double z) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double dx = x - box.cx, dy = y - box.cy;
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return std::abs(u) <= box.length / 2 && std::abs(v) <= box.width / 2 &&
         std::abs(z - box.cz) <= box.height / 2;
}

struct Aabb {
  double lo[3], hi[3];
};

Aabb box_aabb(const OrientedBox3D& box) {
  const double c = std::cos(box.yaw), s = std::sin(box.yaw);
  const double ex = (std::abs(c) * box.length + std::abs(s) * box.width) / 2;
  const double ey = (std::abs(s) * box.length + std::abs(c) * box.width) / 2;
  return Aabb{{box.cx - ex, box.cy - ey, box.cz - box.height / 2},
              {box.cx + ex, box.cy + ey, box.cz + box.height / 2}};
}

// Monte-Carlo oracle: exact box volumes plus a sampled intersection volume
// over the overlap of the two axis-aligned bounding boxes.
double mc_iou(const OrientedBox3D& a, const OrientedBox3D& b,
              std::uint64_t seed, std::uint64_t& counter) {
  const Aabb aa = box_aabb(a), bb = box_aabb(b);
  Aabb overlap;
  for (int d = 0; d < 3; ++d) {
    overlap.lo[d] = std::max(aa.lo[d], bb.lo[d]);
    overlap.hi[d] = std::min(aa.hi[d], bb.hi[d]);
    if (overlap.lo[d] >= overlap.hi[d]) return 0.0;
  }
  const double cell = (overlap.hi[0] - overlap.lo[0]) *
                      (overlap.hi[1] - overlap.lo[1]) *
                      (overlap.hi[2] - overlap.lo[2]);
  constexpr int kSamples = 200000;
  int in_both = 0;
  for (int i = 0; i < kSamples; ++i) {
    double p[3];
    for (int d = 0; d < 3; ++d) {
      p[d] = overlap.lo[d] + rng::uniform53(seed, counter++) *
                                 (overlap.hi[d] - overlap.lo[d]);
    }
    if (inside_box(a, p[0], p[1], p[2]) && inside_box(b, p[0], p[1], p[2])) {
      ++in_both;
    }
  }
  const double inter = cell * in_both / kSamples;
  const double uni = a.volume() + b.volume() - inter;
  return inter <= 0.0 ? 0.0 : inter / uni;
}

bool criterion2(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();

  const OrientedBox3D ref = OrientedBox3D::make(1, -2, 0.5, 4, 2, 1.5, 0.3);
  const OrientedBox3D far_box = OrientedBox3D::make(100, 0, 0, 4, 2, 1.5, 0);
  const OrientedBox3D unit = OrientedBox3D::make(0, 0, 0, 1, 1, 1, 0);
  const OrientedBox3D shifted = OrientedBox3D::make(0.5, 0, 0, 1, 1, 1, 0);
  const OrientedBox3D triple = OrientedBox3D::make(0, 0, 0, 3, 1, 1, 0);
  bool fixtures_ok =
      std::abs(rotated_iou_3d(ref, ref) - 1.0) <= 1e-9 &&
      std::abs(rotated_iou_3d(ref, far_box)) <= 1e-9 &&
      std::abs(rotated_iou_3d(unit, shifted) - 1.0 / 3.0) <= 1e-9 &&
      std::abs(rotated_iou_3d(unit, triple) - 1.0 / 3.0) <= 1e-9;

  const std::uint64_t seed = 0xB0C5;
  std::uint64_t counter = 0;
  auto draw = [&] { return rng::uniform53(seed, counter++); };
  auto random_box = [&] {
    const double cx = draw() * 4 - 2, cy = draw() * 4 - 2, cz = draw() * 2 - 1;
    const double l = 0.5 + draw() * 5.5;
    const double w = 0.5 + draw() * 5.5;
    const double h = 0.5 + draw() * 5.5;
    const double yaw = draw() * 2 * kPi - kPi;
    return OrientedBox3D::make(cx, cy, cz, l, w, h, yaw);
  };

  double max_err = 0.0;
  for (int pair = 0; pair < 200; ++pair) {
    const OrientedBox3D a = random_box();
    const OrientedBox3D b = random_box();
    const double got = rotated_iou_3d(a, b);
    const double oracle = mc_iou(a, b, seed, counter);
    max_err = std::max(max_err, std::abs(got - oracle));
  }
  const double elapsed = seconds_since(t0);
  detail = "max |analytic - mc| = " + fmt(max_err, 5) + " over 200 pairs in " +
           fmt(elapsed, 1) + "s";
  return fixtures_ok && max_err <= 0.015 && elapsed < 30.0;
}

// ------------------------------------------------------------ criterion 3 --

const EvalCell* find_cell(const EvalReport& report, const std::string& cls,
                          Difficulty difficulty) {
  for (const EvalCell& cell : report.cells) {
    if (cell.class_name == cls && cell.difficulty == difficulty) return &cell;
  }
  return nullptr;
}

bool criterion3(std::string& detail) {
  const EvalConfig config = EvalConfig::defaults();

  // Hand fixture: 2 GT, one exact TP at 0.9, one far FP at 0.8 -> AP 0.5.
  const GroundTruth g1{OrientedBox3D::make(0, 0, 0, 4, 2, 1.5, 0), "Car",
                       Difficulty::easy, false};
  const GroundTruth g2{OrientedBox3D::make(50, 0, 0, 4, 2, 1.5, 0), "Car",
                       Difficulty::easy, false};
  const Detection d1{g1.box, "Car", 0.9};
  const Detection d2{OrientedBox3D::make(100, 50, 0, 4, 2, 1.5, 0), "Car",
                     0.8};
  const MatchResult matched =
      match_detections({d1, d2}, {g1, g2}, "Car", Difficulty::easy, config);
  std::vector<ScoredMatch> scored = {
      {0.9, matched.detections[0] == MatchLabel::tp},
      {0.8, matched.detections[1] == MatchLabel::tp}};
  const double ap = average_precision_r40(scored, 2);
  const bool fixture_ok = matched.detections[0] == MatchLabel::tp &&
                          matched.detections[1] == MatchLabel::fp &&
                          std::abs(ap - 0.5) <= 1e-9;

  // Oracle drop sweep: 400 easy Cars over 8 frames, no jitter, no FPs.
  std::map<std::string, std::vector<GroundTruth>> gt_map;
  std::vector<FrameGroundTruth> gt_frames;
  for (int f = 0; f < 8; ++f) {
    const std::string id = "f" + std::to_string(f);
    std::vector<GroundTruth> objects;
    for (int i = 0; i < 50; ++i) {
      objects.push_back(GroundTruth{
          OrientedBox3D::make(10.0 * (i % 10), 12.0 * (i / 10), 0.0, 4, 2,
                              1.5, 0),
          "Car", Difficulty::easy, false});
    }
    gt_map[id] = objects;
    gt_frames.push_back(FrameGroundTruth{id, std::move(objects)});
  }

  bool sweep_ok = true;
  double prev_ap = 101.0;
  std::string aps;
  for (const double drop : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    OracleParams params;
    params.drop_rate = drop;
    params.seed = 424242;
    const auto detector = oracle_detector(gt_map, params);
    std::vector<FrameDetections> det_frames;
    for (const FrameGroundTruth& frame : gt_frames) {
      PointCloud cloud;
      cloud.frame_id = frame.frame_id;
      det_frames.push_back(
          FrameDetections{frame.frame_id, detector->detect(cloud)});
    }
    const EvalReport report = evaluate(det_frames, gt_frames, config);
    const EvalCell* cell = find_cell(report, "Car", Difficulty::easy);
    if (cell == nullptr) {
      sweep_ok = false;
      break;
    }
    sweep_ok = sweep_ok &&
               std::abs(cell->ap_percent - 100.0 * (1.0 - drop)) <= 5.0 &&
               cell->ap_percent <= prev_ap;
    prev_ap = cell->ap_percent;
    if (!aps.empty()) aps += "/";
    aps += fmt(cell->ap_percent, 1);
  }
  detail = "fixture ap = " + fmt(ap, 10) + ", sweep ap = " + aps;
  return fixture_ok && sweep_ok;
}

// ------------------------------------------------------------ criterion 4 --

bool criterion4(std::string& detail) {
  const ModelRegistry registry =
      parse_registry(read_file_text(PCSEL_DATA_DIR "/registry_kitti.txt"));
  auto pick = [&](const std::vector<std::string>& classes,
                  const DataFeatures& features) {
    TargetData target;
    target.classes = classes;
    return select(target, features, registry).model.model_id;
  };

  DataFeatures full;
  DataFeatures eighth;
  eighth.normalized_point_count = 0.080;
  DataFeatures noisy;
  noisy.noise_sigma = 0.08;

  const std::string car_full = pick({"Car"}, full);
  const std::string ped_full = pick({"Pedestrian"}, full);
  const std::string car_eighth = pick({"Car"}, eighth);
  const std::string ped_noise = pick({"Pedestrian"}, noisy);
  detail = car_full + ", " + ped_full + ", " + car_eighth + ", " + ped_noise;
  return car_full == "PV-RCNN:Original" &&
         ped_full == "Part-A2-free:Original" &&
         car_eighth == "PV-RCNN:Uniform-1/8" &&
         ped_noise == "Part-A2-free:Noise-0.08";
}

// ------------------------------------------------------------ criterion 5 --

struct MessageGen {
  std::uint64_t seed;
  std::uint64_t counter = 0;

  std::uint64_t u64() { return rng::draw_u64(seed, counter++); }
  std::uint32_t index(std::uint32_t n) {
    return static_cast<std::uint32_t>(rng::bounded(seed, counter++, n));
  }
  double real() { return rng::uniform53(seed, counter++) * 200.0 - 100.0; }
  bool flag() { return index(2) == 1; }
  std::string text() {
    std::string s;
    const std::uint32_t n = index(13);
    for (std::uint32_t i = 0; i < n; ++i) {
      s.push_back(static_cast<char>('a' + index(26)));
    }
    return s;
  }
  std::vector<std::uint8_t> blob() {
    std::vector<std::uint8_t> b;
    const std::uint32_t n = index(17);
    for (std::uint32_t i = 0; i < n; ++i) {
      b.push_back(static_cast<std::uint8_t>(index(256)));
    }
    return b;
  }

  wire::WireMessage message(int kind) {
    switch (kind) {
      case 0: {
        wire::SelectionRequest m;
        const std::uint32_t classes = index(4);
        for (std::uint32_t i = 0; i < classes; ++i) {
          m.target_classes.push_back(text());
        }
        if (flag()) m.latency_budget_s = real();
        const std::uint32_t frames = index(3);
        for (std::uint32_t i = 0; i < frames; ++i) {
          m.sample_frames.push_back(blob());
        }
        if (flag()) m.declared_noise_sigma = real();
        return m;
      }
      case 1: {
        wire::FeatureReport m;
        m.features.normalized_point_count = real();
        if (flag()) m.features.noise_sigma = real();
        m.features.frames_analyzed = u64();
        return m;
      }
      case 2: {
        wire::ModelAssignment m;
        m.model_id = text();
        m.method.method_id = text();
        m.method.num_stages = 1 + static_cast<int>(index(2));
        m.method.stage1_unit = static_cast<StageUnit>(index(4));
        m.method.stage2_unit = static_cast<StageUnit>(index(4));
        m.method.box_strategy = static_cast<BoxStrategy>(index(2));
        m.train.kind = static_cast<DegradationKind>(index(5));
        m.train.param = real();
        m.train.seed = u64();
        const std::uint32_t steps = index(3);
        for (std::uint32_t i = 0; i < steps; ++i) {
          m.branch_trace.push_back(BranchStep{text(), text(), text()});
        }
        if (flag()) m.weights = blob();
        return m;
      }
      case 3:
        return wire::ErrorReply{static_cast<std::uint32_t>(u64() >> 32),
                                text()};
      default:
        return wire::Ack{};
    }
  }
};

service::CloudServerState acceptance_state() {
  service::CloudServerState state;
  state.registry = parse_registry(
      "model SECOND:Original method=SECOND stages=1 stage1=voxel stage2=none "
      "box=anchor train=none ratio=1.0 latency_s=0.04 ap.Car=78.8\n"
      "model PointRCNN:Original method=PointRCNN stages=2 stage1=point "
      "stage2=point box=free train=none ratio=1.0 latency_s=0.1 "
      "ap.Car=80.1\n");
  state.reference = ReferenceStats{100.0, 10, "ref"};
  return state;
}

bool criterion5(std::string& detail) {
  // Golden Ack frame.
  const std::vector<std::uint8_t> ack_golden = {0x50, 0x43, 0x01, 0x05,
                                                0x00, 0x00, 0x00, 0x00};
  bool ok = wire::encode(wire::WireMessage(wire::Ack{})) == ack_golden;

  // Truncation at every byte boundary of a golden SelectionRequest.
  wire::SelectionRequest golden;
  golden.target_classes = {"Car"};
  golden.sample_frames = {{0x01, 0x02}};
  const auto frame = wire::encode(wire::WireMessage(golden));
  for (std::size_t n = 0; n < frame.size() && ok; ++n) {
    try {
      wire::decode(std::vector<std::uint8_t>(
          frame.begin(), frame.begin() + static_cast<std::ptrdiff_t>(n)));
      ok = false;
    } catch (const Error& e) {
      ok = e.code() == ErrorCode::truncated;
    }
  }

  // Encode-decode identity over 10^4 randomized messages.
  MessageGen gen{0xACCE97};
  for (int i = 0; i < 10000 && ok; ++i) {
    const wire::WireMessage msg = gen.message(i % 5);
    ok = wire::decode(wire::encode(msg)) == msg;
  }

  // 100 concurrent sessions against the sequential oracle.
  const service::CloudServerState state = acceptance_state();
  const std::vector<std::vector<std::uint8_t>> frames = {
      write_velodyne_bin(testutil::random_cloud("a", 100, 1)),
      write_velodyne_bin(testutil::random_cloud("b", 100, 2))};
  wire::SelectionRequest request;
  request.target_classes = {"Car"};
  request.sample_frames = frames;
  request.declared_noise_sigma = 0.0;
  const service::HandleResult expected = service::cloud_handle(state, request);
  ok = ok && std::holds_alternative<wire::ModelAssignment>(expected);

  int mismatches = 0;
  {
    service::TcpServer server(state, "127.0.0.1", 0);
    const TargetData target{{"Car"}, std::nullopt};
    constexpr int kSessions = 100;
    std::vector<service::HandleResult> results(kSessions);
    std::vector<std::thread> workers;
    workers.reserve(kSessions);
    for (int i = 0; i < kSessions; ++i) {
      workers.emplace_back([&, i] {
        try {
          auto transport = service::tcp_connect("127.0.0.1", server.port());
          results[static_cast<std::size_t>(i)] = service::edge_session(
              *transport, target, frames, 0.0, 10000ms);
        } catch (const Error& e) {
          results[static_cast<std::size_t>(i)] =
              wire::ErrorReply{99, e.what()};
        }
      });
    }
    for (auto& worker : workers) worker.join();
    for (const auto& result : results) {
      if (!(result == expected)) ++mismatches;
    }
    server.stop();
  }
  detail = "10^4 round trips, " + std::to_string(frame.size()) +
           "-boundary truncation sweep, 100 sessions (" +
           std::to_string(mismatches) + " mismatches)";
  return ok && mismatches == 0;
}

// ------------------------------------------------------------ criterion 6 --

bool criterion6(std::string& detail) {
  const PointCloud cloud = testutil::random_cloud("noise", 1000000, 77, 50.0);
  const std::size_t n = cloud.points.size();

  bool ok = true;
  std::string stds;
  for (const double sigma : {0.02, 0.08}) {
    const PointCloud noisy = add_gaussian_noise(cloud, sigma, 123);
    for (int axis = 0; axis < 3; ++axis) {
      auto coord = [axis](const Point& p) {
        return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
      };
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mean += static_cast<double>(coord(noisy.points[i])) -
                static_cast<double>(coord(cloud.points[i]));
      }
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(coord(noisy.points[i])) -
                         static_cast<double>(coord(cloud.points[i])) - mean;
        var += d * d;
      }
      const double std_dev = std::sqrt(var / static_cast<double>(n));
      ok = ok && std::abs(std_dev / sigma - 1.0) <= 0.01;
      if (!stds.empty()) stds += "/";
      stds += fmt(std_dev, 4);
    }
  }
  const PointCloud same = add_gaussian_noise(cloud, 0.0, 123);
  ok = ok && write_velodyne_bin(same) == write_velodyne_bin(cloud);
  detail = "per-axis std " + stds + " for sigma 0.02 and 0.08; sigma 0 "
           "bit-identical";
  return ok;
}

// ------------------------------------------------------------ criterion 7 --

bool criterion7(std::string& detail) {
  PointCloud plane;
  plane.frame_id = "plane";
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      plane.points.push_back(Point{static_cast<float>(0.2 * i),
                                   static_cast<float>(0.2 * j), 0.0f, 0.5f});
    }
  }

  bool ok = true;
  double prev = -1.0;
  std::string estimates;
  for (const double sigma : {0.02, 0.04, 0.08}) {
    const PointCloud noisy = add_gaussian_noise(plane, sigma, 31);
    const double estimate = estimate_noise_sigma(noisy);
    ok = ok && std::abs(estimate / sigma - 1.0) <= 0.25 && estimate > prev;
    prev = estimate;
    if (!estimates.empty()) estimates += "/";
    estimates += fmt(estimate, 4);
  }
  detail = "estimates " + estimates + " for sigma 0.02/0.04/0.08";
  return ok;
}

// ------------------------------------------------------------ criterion 8 --

struct ToolResult {
  int code = -1;
  std::string output;
};

ToolResult run_tool(const std::vector<std::string>& args) {
  std::string cmd = "'" PCSEL_TOOL_PATH "'";
  for (const std::string& arg : args) cmd += " '" + arg + "'";
  cmd += " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  ToolResult result;
  std::array<char, 4096> buf;
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), n);
  }
  const int status = ::pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

void expect_tool(const std::vector<std::string>& args) {
  const ToolResult result = run_tool(args);
  if (result.code != 0) {
    throw std::runtime_error("tool " + args[0] + " exited " +
                             std::to_string(result.code) + ": " +
                             result.output);
  }
}

struct ServerProcess {
  pid_t pid = -1;
  fs::path log;

  void start(const fs::path& config, const fs::path& log_path) {
    log = log_path;
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw std::runtime_error("cannot open server log");
    pid = ::fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      ::dup2(fd, 1);
      ::dup2(fd, 2);
      ::close(fd);
      ::execl(PCSEL_TOOL_PATH, "pcsel", "serve", "--config", config.c_str(),
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fd);
  }

  std::string wait_for_listening() {
    for (int i = 0; i < 250; ++i) {
      const std::string text = read_file_text(log);
      const std::size_t at = text.find("listening on ");
      if (at != std::string::npos) {
        const std::size_t start = at + std::string("listening on ").size();
        const std::size_t end = text.find('\n', start);
        if (end != std::string::npos) return text.substr(start, end - start);
      }
      std::this_thread::sleep_for(20ms);
    }
    throw std::runtime_error("server never announced its address: " +
                             read_file_text(log));
  }

  int terminate() {
    if (pid < 0) return -1;
    ::kill(pid, SIGTERM);
    int status = 0;
    for (int i = 0; i < 250; ++i) {
      if (::waitpid(pid, &status, WNOHANG) == pid) {
        pid = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      }
      std::this_thread::sleep_for(20ms);
    }
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    pid = -1;
    return -1;
  }

  ~ServerProcess() {
    if (pid >= 0) terminate();
  }
};

PointCloud cluster_scene(const std::string& frame_id, double cx, double cy) {
  PointCloud cloud;
  cloud.frame_id = frame_id;
  for (int i = 0; i <= 60; ++i) {
    for (int j = 0; j <= 60; ++j) {
      cloud.points.push_back(Point{static_cast<float>(-15.0 + 0.5 * i),
                                   static_cast<float>(-15.0 + 0.5 * j), 0.0f,
                                   0.3f});
    }
  }
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 5; ++j) {
      for (int k = 0; k < 4; ++k) {
        cloud.points.push_back(
            Point{static_cast<float>(cx - 2.0 + 0.5 * i),
                  static_cast<float>(cy - 1.0 + 0.5 * j),
                  static_cast<float>(0.5 + 0.5 * k), 0.8f});
      }
    }
  }
  return cloud;
}

bool criterion8(std::string& detail) {
  testutil::TempDir tmp;
  const fs::path corpus = tmp.path / "corpus";
  const std::array<std::pair<double, double>, 3> clusters = {
      {{5.0, 3.0}, {8.0, -2.0}, {12.0, 4.0}}};
  const std::string calib_text =
      "Tr_velo_to_cam: 0 -1 0 0 0 0 -1 0 1 0 0 0\n"
      "R0_rect: 1 0 0 0 1 0 0 0 1\n";
  std::size_t scene_points = 0;
  for (std::size_t f = 0; f < clusters.size(); ++f) {
    const std::string id = "00000" + std::to_string(f);
    const PointCloud scene =
        cluster_scene(id, clusters[f].first, clusters[f].second);
    scene_points = scene.points.size();
    write_file_bytes(corpus / "velodyne" / (id + ".bin"),
                     write_velodyne_bin(scene));
    // Camera coords of the cluster's bottom center under the calibration
    // above: x_cam = -y, y_cam = -z, z_cam = x; ry = -pi/2 is lidar yaw 0.
    write_file_text(corpus / "label_2" / (id + ".txt"),
                    "Car 0 0 0 100 100 200 180 1.5 2 4 " +
                        std::to_string(-clusters[f].second) + " 0 " +
                        std::to_string(clusters[f].first) +
                        " -1.5707963267948966\n");
    write_file_text(corpus / "calib" / (id + ".txt"), calib_text);
  }

  const fs::path registry = tmp.path / "registry.txt";
  write_file_text(
      registry,
      "model SECOND:Original method=SECOND stages=1 stage1=voxel stage2=none "
      "box=anchor train=none ratio=1.0 latency_s=0.04 ap.Car=78.8\n"
      "model PointRCNN:Original method=PointRCNN stages=2 stage1=point "
      "stage2=point box=free train=none ratio=1.0 latency_s=0.1 "
      "ap.Car=80.1\n");
  const fs::path reference = tmp.path / "reference.txt";
  write_file_text(reference, "mean_points_per_frame=" +
                                 std::to_string(scene_points) +
                                 "\nframe_count=3\nsource_id=ref\n");
  const fs::path config = tmp.path / "server.cfg";
  write_file_text(config, "registry=" + registry.string() + "\nreference=" +
                              reference.string() + "\nlisten=127.0.0.1:0\n");

  ServerProcess server;
  server.start(config, tmp.path / "server.log");
  const std::string addr = server.wait_for_listening();

  auto run_flow = [&](const fs::path& run_dir) {
    std::map<std::string, std::string> artifacts;
    const ToolResult request = run_tool(
        {"request", "--host", addr, "--classes", "Car", "--frames",
         corpus.string(), "--declared-noise", "0", "--timeout-ms", "10000"});
    if (request.code != 0) {
      throw std::runtime_error("request failed: " + request.output);
    }
    artifacts["request"] = request.output;

    const fs::path dets = run_dir / "dets";
    expect_tool({"detect", "--in", corpus.string(), "--detector", "baseline",
                 "--out", dets.string()});
    const fs::path report = run_dir / "report.csv";
    expect_tool({"eval", "--det", dets.string(), "--gt",
                 (corpus / "label_2").string(), "--calib",
                 (corpus / "calib").string(), "--out", report.string()});
    const fs::path svg = run_dir / "scene.svg";
    expect_tool({"render", "--cloud",
                 (corpus / "velodyne" / "000000.bin").string(), "--det",
                 (dets / "000000.txt").string(), "--gt",
                 (corpus / "label_2" / "000000.txt").string(), "--calib",
                 (corpus / "calib" / "000000.txt").string(), "--out",
                 svg.string()});

    artifacts["report"] = read_file_text(report);
    artifacts["svg"] = read_file_text(svg);
    for (std::size_t f = 0; f < clusters.size(); ++f) {
      const std::string id = "00000" + std::to_string(f);
      artifacts["det-" + id] = read_file_text(dets / (id + ".txt"));
    }
    return artifacts;
  };

  const auto run1 = run_flow(tmp.path / "run1");
  const auto run2 = run_flow(tmp.path / "run2");
  const int server_exit = server.terminate();

  const bool assignment_ok =
      run1.at("request").rfind("model=SECOND:Original\n", 0) == 0;
  const bool produced = run1.at("report").rfind(
                            "class,difficulty,ap_percent,tp,fp,fn\n", 0) == 0 &&
                        run1.at("svg").rfind("<svg", 0) == 0 &&
                        !run1.at("det-000000").empty();
  const bool deterministic = run1 == run2;
  detail = std::string("assignment ") +
           (assignment_ok ? "received" : "wrong") + ", artifacts " +
           (produced ? "produced" : "missing") + ", runs " +
           (deterministic ? "identical" : "diverged") + ", server exit " +
           std::to_string(server_exit);
  return assignment_ok && produced && deterministic && server_exit == 0;
}

}  // namespace

int main() {
  int failures = 0;
  auto run = [&](int number, const char* name, bool (*fn)(std::string&)) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number << ": "
              << name;
    if (!detail.empty()) std::cout << " [" << detail << "]";
    std::cout << std::endl;
    if (!ok) ++failures;
  };

  run(1, "degradation ratio reproduction", criterion1);
  run(2, "rotated iou vs monte-carlo oracle", criterion2);
  run(3, "average-precision harness", criterion3);
  run(4, "selector fixtures on the shipped registry", criterion4);
  run(5, "wire protocol and concurrent sessions", criterion5);
  run(6, "gaussian noise statistics", criterion6);
  run(7, "noise sigma estimator", criterion7);
  run(8, "end-to-end liveness and determinism", criterion8);

  std::cout << (failures == 0 ? "ACCEPTANCE PASSED"
                              : "ACCEPTANCE FAILED") << " (" << failures
            << " of 8 criteria failed)" << std::endl;
  return failures;
}
