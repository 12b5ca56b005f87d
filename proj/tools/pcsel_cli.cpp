// pcsel: corpus degradation, feature analysis, model selection, detection,
// evaluation, rendering and the selection service, from one binary.
//
// Exit codes: 0 success, 1 domain error (one-line diagnostic on stderr),
// 2 usage error.

#include <array>
#include <charconv>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcsel/corpus.hpp"
#include "pcsel/degrade.hpp"
#include "pcsel/detect.hpp"
#include "pcsel/errors.hpp"
#include "pcsel/eval.hpp"
#include "pcsel/features.hpp"
#include "pcsel/kitti.hpp"
#include "pcsel/registry.hpp"
#include "pcsel/render.hpp"
#include "pcsel/selector.hpp"
#include "pcsel/service.hpp"
#include "pcsel/training.hpp"
#include "pcsel/wire.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == ',') {
      if (!current.empty()) parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (!current.empty()) parts.push_back(current);
  return parts;
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// A corpus root (with a velodyne/ subdirectory) or a flat directory of
// .bin files.
std::vector<pcsel::CorpusFrame> scan_frames(const fs::path& dir) {
  std::error_code ec;
  if (fs::is_directory(dir / "velodyne", ec)) return pcsel::list_corpus(dir);
  if (!fs::is_directory(dir, ec)) {
    throw pcsel::Error(pcsel::ErrorCode::io_failure,
                       "not a directory: " + dir.string());
  }
  std::vector<pcsel::CorpusFrame> frames;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".bin") {
      continue;
    }
    pcsel::CorpusFrame frame;
    frame.frame_id = entry.path().stem().string();
    frame.velodyne = entry.path();
    frames.push_back(std::move(frame));
  }
  std::sort(frames.begin(), frames.end(),
            [](const pcsel::CorpusFrame& a, const pcsel::CorpusFrame& b) {
              return a.frame_id < b.frame_id;
            });
  return frames;
}

// Sorted .txt files of a directory, as (stem, path).
std::vector<std::pair<std::string, fs::path>> scan_text_files(
    const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw pcsel::Error(pcsel::ErrorCode::io_failure,
                       "not a directory: " + dir.string());
  }
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") {
      continue;
    }
    files.emplace_back(entry.path().stem().string(), entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

pcsel::DataFeatures read_features_csv(const std::string& text) {
  std::istringstream lines(text);
  std::string header, row;
  if (!std::getline(lines, header) || !std::getline(lines, row)) {
    throw pcsel::Error(pcsel::ErrorCode::malformed_line,
                       "features file needs a header and one data row");
  }
  if (!row.empty() && row.back() == '\r') row.pop_back();
  std::vector<std::string> fields;
  std::string current;
  for (char c : row) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);
  if (fields.size() != 3) {
    throw pcsel::Error(pcsel::ErrorCode::malformed_line,
                       "features row must have 3 columns, got " +
                           std::to_string(fields.size()));
  }
  pcsel::DataFeatures features;
  try {
    features.normalized_point_count = std::stod(fields[0]);
    if (!fields[1].empty()) features.noise_sigma = std::stod(fields[1]);
    features.frames_analyzed = std::stoull(fields[2]);
  } catch (const std::exception&) {
    throw pcsel::Error(pcsel::ErrorCode::malformed_line,
                       "features row has a malformed number: " + row);
  }
  return features;
}

std::string write_features_csv(const pcsel::DataFeatures& features) {
  std::string noise =
      features.noise_sigma ? format_double(*features.noise_sigma) : "";
  return "normalized_point_count,noise_sigma,frames_analyzed\n" +
         format_double(features.normalized_point_count) + "," + noise + "," +
         std::to_string(features.frames_analyzed) + "\n";
}

// --- subcommand bodies --------------------------------------------------

int run_degrade(const fs::path& in, const fs::path& out,
                const std::string& kind_name, double param,
                std::uint64_t seed) {
  pcsel::DegradationSpec spec;
  if (kind_name == "voxel_grid") {
    spec.kind = pcsel::DegradationKind::voxel_grid;
  } else if (kind_name == "uniform") {
    spec.kind = pcsel::DegradationKind::uniform;
  } else if (kind_name == "random") {
    spec.kind = pcsel::DegradationKind::random;
  } else {
    spec.kind = pcsel::DegradationKind::gaussian_noise;
  }
  spec.param = param;
  spec.seed = seed;

  const std::vector<pcsel::CorpusFrame> frames = scan_frames(in);
  if (frames.empty()) {
    throw pcsel::Error(pcsel::ErrorCode::empty_corpus,
                       "no frames under " + in.string());
  }
  double ratio_sum = 0.0;
  for (const pcsel::CorpusFrame& frame : frames) {
    const pcsel::PointCloud cloud = pcsel::load_frame_cloud(frame);
    const pcsel::PointCloud degraded = pcsel::apply_degradation(
        cloud, pcsel::with_frame_seed(spec, frame.frame_id));
    ratio_sum += pcsel::normalized_point_count(cloud, degraded);
    pcsel::write_file_bytes(out / "velodyne" / (frame.frame_id + ".bin"),
                            pcsel::write_velodyne_bin(degraded));
    if (frame.labels) {
      pcsel::write_file_bytes(out / "label_2" / (frame.frame_id + ".txt"),
                              pcsel::read_file_bytes(*frame.labels));
    }
    if (frame.calib) {
      pcsel::write_file_bytes(out / "calib" / (frame.frame_id + ".txt"),
                              pcsel::read_file_bytes(*frame.calib));
    }
  }
  std::cout << "frames=" << frames.size() << " mean_ratio="
            << format_double(ratio_sum / static_cast<double>(frames.size()))
            << "\n";
  return 0;
}

int run_analyze(const fs::path& in, const fs::path& ref_path,
                std::optional<double> declared_noise, const fs::path& out) {
  const pcsel::ReferenceStats ref =
      pcsel::read_reference_stats(pcsel::read_file_text(ref_path));
  std::vector<pcsel::PointCloud> clouds;
  for (const pcsel::CorpusFrame& frame : scan_frames(in)) {
    clouds.push_back(pcsel::load_frame_cloud(frame));
  }
  const pcsel::DataFeatures features =
      pcsel::analyze_stream(clouds, ref, declared_noise);
  pcsel::write_file_text(out, write_features_csv(features));
  return 0;
}

int run_refstats(const fs::path& in, const fs::path& out) {
  std::vector<pcsel::PointCloud> clouds;
  for (const pcsel::CorpusFrame& frame : scan_frames(in)) {
    clouds.push_back(pcsel::load_frame_cloud(frame));
  }
  const pcsel::ReferenceStats ref =
      pcsel::reference_stats(clouds, in.filename().string());
  pcsel::write_file_text(out, pcsel::write_reference_stats(ref));
  return 0;
}

int run_select(const fs::path& registry_path, const fs::path& features_path,
               const std::string& classes,
               std::optional<double> latency_budget) {
  const pcsel::ModelRegistry registry =
      pcsel::parse_registry(pcsel::read_file_text(registry_path));
  const pcsel::DataFeatures features =
      read_features_csv(pcsel::read_file_text(features_path));
  pcsel::TargetData target;
  target.classes = split_csv(classes);
  target.latency_budget_s = latency_budget;

  const pcsel::SelectionDecision decision =
      pcsel::select(target, features, registry);
  std::cout << "model=" << decision.model.model_id << "\n"
            << pcsel::format_trace(decision.trace);
  return 0;
}

int run_eval(const fs::path& det_dir, const fs::path& gt_dir,
             const fs::path& calib_dir, const fs::path& out) {
  std::vector<pcsel::FrameDetections> det_frames;
  std::vector<pcsel::FrameGroundTruth> gt_frames;
  for (const auto& [stem, path] : scan_text_files(gt_dir)) {
    const pcsel::Calibration calib = pcsel::read_calibration(
        pcsel::read_file_text(calib_dir / (stem + ".txt")));

    pcsel::FrameGroundTruth gt;
    gt.frame_id = stem;
    gt.objects = pcsel::ground_truth_from_labels(
        pcsel::read_labels(pcsel::read_file_text(path)), calib);
    gt_frames.push_back(std::move(gt));

    pcsel::FrameDetections det;
    det.frame_id = stem;
    const fs::path det_path = det_dir / (stem + ".txt");
    std::error_code ec;
    if (fs::is_regular_file(det_path, ec)) {
      det.detections =
          pcsel::read_detections(pcsel::read_file_text(det_path), calib);
    }
    det_frames.push_back(std::move(det));
  }
  const pcsel::EvalReport report =
      pcsel::evaluate(det_frames, gt_frames, pcsel::EvalConfig::defaults());
  pcsel::write_file_text(out, pcsel::write_report_csv(report));
  return 0;
}

int run_detect(const fs::path& in, const std::string& detector_name,
               const fs::path& out, double jitter, double drop, double fp,
               std::uint64_t seed) {
  const std::vector<pcsel::CorpusFrame> frames = scan_frames(in);
  if (frames.empty()) {
    throw pcsel::Error(pcsel::ErrorCode::empty_corpus,
                       "no frames under " + in.string());
  }

  std::unique_ptr<pcsel::Detector> detector;
  if (detector_name == "oracle") {
    std::map<std::string, std::vector<pcsel::GroundTruth>> gt;
    for (const pcsel::CorpusFrame& frame : frames) {
      if (!frame.labels) continue;
      const pcsel::Calibration calib =
          frame.calib ? pcsel::read_calibration(
                            pcsel::read_file_text(*frame.calib))
                      : pcsel::nominal_calibration();
      gt[frame.frame_id] = pcsel::ground_truth_from_labels(
          pcsel::read_labels(pcsel::read_file_text(*frame.labels)), calib);
    }
    pcsel::OracleParams params;
    params.jitter_sigma_m = jitter;
    params.drop_rate = drop;
    params.fp_rate = fp;
    params.seed = seed;
    detector = pcsel::oracle_detector(std::move(gt), params);
  } else {
    detector = pcsel::baseline_detector(pcsel::BaselineParams{});
  }

  for (const pcsel::CorpusFrame& frame : frames) {
    const pcsel::Calibration calib =
        frame.calib
            ? pcsel::read_calibration(pcsel::read_file_text(*frame.calib))
            : pcsel::nominal_calibration();
    const std::vector<pcsel::Detection> dets =
        detector->detect(pcsel::load_frame_cloud(frame));
    pcsel::write_file_text(out / (frame.frame_id + ".txt"),
                           pcsel::write_detections(dets, calib));
  }
  return 0;
}

int run_render(const fs::path& cloud_path, const fs::path& det_path,
               const std::optional<fs::path>& gt_path,
               const std::optional<fs::path>& calib_path,
               const fs::path& out) {
  const pcsel::Calibration calib =
      calib_path
          ? pcsel::read_calibration(pcsel::read_file_text(*calib_path))
          : pcsel::nominal_calibration();
  const pcsel::PointCloud cloud = pcsel::read_velodyne_bin(
      pcsel::read_file_bytes(cloud_path), cloud_path.stem().string());
  const std::vector<pcsel::Detection> dets =
      pcsel::read_detections(pcsel::read_file_text(det_path), calib);
  std::vector<pcsel::GroundTruth> gts;
  if (gt_path) {
    gts = pcsel::ground_truth_from_labels(
        pcsel::read_labels(pcsel::read_file_text(*gt_path)), calib);
  }
  pcsel::write_file_text(out, pcsel::render_bev_svg(cloud, dets, gts));
  return 0;
}

int run_stats(const fs::path& labels_dir, const std::string& out_prefix) {
  std::vector<std::vector<pcsel::ObjectLabel>> frames;
  for (const auto& [stem, path] : scan_text_files(labels_dir)) {
    (void)stem;
    frames.push_back(pcsel::read_labels(pcsel::read_file_text(path)));
  }
  const pcsel::DatasetStatistics stats = pcsel::dataset_statistics(frames);
  pcsel::write_file_text(out_prefix + "_heat.csv", pcsel::write_heat_csv(stats));
  pcsel::write_file_text(out_prefix + "_orientation.csv",
                         pcsel::write_orientation_csv(stats));
  pcsel::write_file_text(out_prefix + "_objects_per_frame.csv",
                         pcsel::write_objects_per_frame_csv(stats));
  return 0;
}

int run_serve(const fs::path& config_path) {
  const pcsel::service::ServerConfig config =
      pcsel::service::parse_server_config(pcsel::read_file_text(config_path));

  pcsel::service::CloudServerState state;
  state.registry =
      pcsel::parse_registry(pcsel::read_file_text(config.registry_path));
  state.reference = pcsel::read_reference_stats(
      pcsel::read_file_text(config.reference_path));
  state.thresholds = config.thresholds;

  // Block the shutdown signals before the server threads start so they
  // inherit the mask and sigwait below is the one consumer.
  sigset_t mask;
  sigemptyset(&mask);
  sigaddset(&mask, SIGINT);
  sigaddset(&mask, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &mask, nullptr);

  pcsel::service::TcpServer server(std::move(state), config.host, config.port);
  std::cout << "listening on " << server.host() << ":" << server.port()
            << std::endl;

  int signal_number = 0;
  sigwait(&mask, &signal_number);
  server.stop();
  return 0;
}

int run_request(const std::string& addr, const std::string& classes,
                const fs::path& frames_dir,
                std::optional<double> latency_budget,
                std::optional<double> declared_noise, long timeout_ms) {
  const std::size_t colon = addr.rfind(':');
  if (colon == std::string::npos) {
    throw pcsel::Error(pcsel::ErrorCode::malformed_line,
                       "--host must be host:port, got '" + addr + "'");
  }
  const std::string host = addr.substr(0, colon);
  const std::uint16_t port =
      static_cast<std::uint16_t>(std::stoul(addr.substr(colon + 1)));

  std::vector<std::vector<std::uint8_t>> blobs;
  for (const pcsel::CorpusFrame& frame : scan_frames(frames_dir)) {
    blobs.push_back(pcsel::read_file_bytes(frame.velodyne));
  }

  pcsel::TargetData target;
  target.classes = split_csv(classes);
  target.latency_budget_s = latency_budget;

  pcsel::service::HandleResult result;
  for (int attempt = 0;; ++attempt) {
    std::unique_ptr<pcsel::service::Transport> transport =
        pcsel::service::tcp_connect(host, port);
    try {
      result = pcsel::service::edge_session(
          *transport, target, blobs, declared_noise,
          std::chrono::milliseconds(timeout_ms));
      break;
    } catch (const pcsel::Error& e) {
      // Safe to retry only when no reply byte arrived.
      if (e.code() == pcsel::ErrorCode::io_failure && attempt == 0) continue;
      throw;
    }
  }

  if (const auto* error = std::get_if<pcsel::wire::ErrorReply>(&result)) {
    std::cerr << "error " << error->code << ": " << error->message << "\n";
    return 1;
  }
  const auto& assignment = std::get<pcsel::wire::ModelAssignment>(result);
  std::cout << "model=" << assignment.model_id << "\n"
            << pcsel::format_trace(assignment.branch_trace);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-based detection-model selection for LIDAR point clouds"};
  app.require_subcommand(1);

  // degrade
  auto* degrade = app.add_subcommand("degrade", "Write a degraded corpus copy");
  std::string deg_in, deg_out, deg_kind;
  double deg_param = 0.0;
  std::uint64_t deg_seed = 0;
  degrade->add_option("--in", deg_in, "Input corpus directory")->required();
  degrade->add_option("--out", deg_out, "Output corpus directory")->required();
  degrade->add_option("--kind", deg_kind, "Degradation kind")
      ->required()
      ->check(CLI::IsMember({"voxel_grid", "uniform", "random", "noise"}));
  degrade->add_option("--param", deg_param,
                      "Voxel edge (m), keep fraction, or noise sigma (m)")
      ->required();
  degrade->add_option("--seed", deg_seed, "Base seed (default 0)");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Extract stream data features");
  std::string ana_in, ana_ref, ana_out;
  std::optional<double> ana_noise;
  analyze->add_option("--in", ana_in, "Frame directory")->required();
  analyze->add_option("--ref", ana_ref, "Reference stats file")->required();
  analyze->add_option("--declared-noise", ana_noise,
                      "Known noise sigma (skips estimation)");
  analyze->add_option("--out", ana_out, "Output features CSV")->required();

  // refstats
  auto* refstats = app.add_subcommand(
      "refstats", "Compute reference statistics from a corpus");
  std::string ref_in, ref_out;
  refstats->add_option("--in", ref_in, "Reference corpus directory")->required();
  refstats->add_option("--out", ref_out, "Output stats file")->required();

  // select
  auto* select = app.add_subcommand("select", "Pick a model for target data");
  std::string sel_registry, sel_features, sel_classes;
  std::optional<double> sel_budget;
  select->add_option("--registry", sel_registry, "Model registry file")
      ->required();
  select->add_option("--features", sel_features, "Features CSV from analyze")
      ->required();
  select->add_option("--classes", sel_classes, "Target classes, comma-separated")
      ->required();
  select->add_option("--latency-budget", sel_budget, "Seconds per frame");

  // eval
  auto* eval = app.add_subcommand("eval", "Score detections against labels");
  std::string ev_det, ev_gt, ev_calib, ev_out;
  eval->add_option("--det", ev_det, "Detection directory")->required();
  eval->add_option("--gt", ev_gt, "Ground-truth label directory")->required();
  eval->add_option("--calib", ev_calib, "Calibration directory")->required();
  eval->add_option("--out", ev_out, "Output report CSV")->required();

  // detect
  auto* detect = app.add_subcommand("detect", "Run a detector over a corpus");
  std::string det_in, det_kind, det_out;
  double det_jitter = 0.0, det_drop = 0.0, det_fp = 0.0;
  std::uint64_t det_seed = 0;
  detect->add_option("--in", det_in, "Corpus directory")->required();
  detect->add_option("--detector", det_kind, "Detector")
      ->required()
      ->check(CLI::IsMember({"oracle", "baseline"}));
  detect->add_option("--out", det_out, "Output detection directory")->required();
  detect->add_option("--jitter-sigma", det_jitter, "Oracle center jitter (m)");
  detect->add_option("--drop-rate", det_drop, "Oracle drop probability");
  detect->add_option("--fp-rate", det_fp, "Oracle false boxes per frame");
  detect->add_option("--seed", det_seed, "Oracle seed");

  // render
  auto* render = app.add_subcommand("render", "Render a BEV scene to SVG");
  std::string ren_cloud, ren_det, ren_out;
  std::optional<std::string> ren_gt, ren_calib;
  render->add_option("--cloud", ren_cloud, "Velodyne .bin file")->required();
  render->add_option("--det", ren_det, "Detection file")->required();
  render->add_option("--gt", ren_gt, "Ground-truth label file");
  render->add_option("--calib", ren_calib,
                     "Calibration file (defaults to the nominal mounting)");
  render->add_option("--out", ren_out, "Output SVG file")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Corpus label statistics CSVs");
  std::string st_labels, st_prefix;
  stats->add_option("--labels", st_labels, "Label directory")->required();
  stats->add_option("--out", st_prefix,
                    "Output prefix (_heat.csv, _orientation.csv, "
                    "_objects_per_frame.csv)")
      ->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the selection service");
  std::string sv_config;
  serve->add_option("--config", sv_config, "Server config file")->required();

  // request
  auto* request = app.add_subcommand("request", "Ask a server for a model");
  std::string rq_host, rq_classes, rq_frames;
  std::optional<double> rq_budget, rq_noise;
  long rq_timeout_ms = 30000;
  request->add_option("--host", rq_host, "Server address host:port")->required();
  request->add_option("--classes", rq_classes, "Target classes, comma-separated")
      ->required();
  request->add_option("--frames", rq_frames, "Sample frame directory")
      ->required();
  request->add_option("--latency-budget", rq_budget, "Seconds per frame");
  request->add_option("--declared-noise", rq_noise, "Known noise sigma");
  request->add_option("--timeout-ms", rq_timeout_ms, "Reply deadline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (degrade->parsed()) {
      return run_degrade(deg_in, deg_out, deg_kind, deg_param, deg_seed);
    }
    if (analyze->parsed()) {
      return run_analyze(ana_in, ana_ref, ana_noise, ana_out);
    }
    if (refstats->parsed()) return run_refstats(ref_in, ref_out);
    if (select->parsed()) {
      return run_select(sel_registry, sel_features, sel_classes, sel_budget);
    }
    if (eval->parsed()) return run_eval(ev_det, ev_gt, ev_calib, ev_out);
    if (detect->parsed()) {
      return run_detect(det_in, det_kind, det_out, det_jitter, det_drop,
                        det_fp, det_seed);
    }
    if (render->parsed()) {
      return run_render(ren_cloud, ren_det,
                        ren_gt ? std::optional<fs::path>(*ren_gt)
                               : std::nullopt,
                        ren_calib ? std::optional<fs::path>(*ren_calib)
                                  : std::nullopt,
                        ren_out);
    }
    if (stats->parsed()) return run_stats(st_labels, st_prefix);
    if (serve->parsed()) return run_serve(sv_config);
    if (request->parsed()) {
      return run_request(rq_host, rq_classes, rq_frames, rq_budget, rq_noise,
                         rq_timeout_ms);
    }
  } catch (const pcsel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // no subcommand matched (unreachable with require_subcommand)
}
