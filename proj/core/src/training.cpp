#include "pcsel/training.hpp"

#include <array>
#include <charconv>

#include "pcsel/corpus.hpp"
#include "pcsel/errors.hpp"
#include "pcsel/kitti.hpp"

namespace pcsel {
namespace {

std::string format_param(double v) {
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

std::string degradation_variant_name(const DegradationSpec& spec) {
  switch (spec.kind) {
    case DegradationKind::none:
      return "Original";
    case DegradationKind::voxel_grid:
      return "VoxelGrid-" + format_param(spec.param);
    case DegradationKind::uniform:
      return "Uniform-" + format_param(spec.param);
    case DegradationKind::random:
      return "Random-" + format_param(spec.param);
    case DegradationKind::gaussian_noise:
    default:
      return "Noise-" + format_param(spec.param);
  }
}

std::string degradation_dirname(const DegradationSpec& spec) {
  if (spec.kind == DegradationKind::none) return "original";
  return std::string(to_string(spec.kind)) + "_" + format_param(spec.param);
}

TrainingReport training_pipeline(const std::filesystem::path& corpus_root,
                                 const std::filesystem::path& out_root,
                                 const std::vector<DegradationSpec>& plan,
                                 const std::vector<ModelDescriptor>& base_models) {
  const std::vector<CorpusFrame> frames = list_corpus(corpus_root);
  if (frames.empty()) {
    throw Error(ErrorCode::empty_corpus,
                "no frames under " + corpus_root.string());
  }

  // One stub source per method, first appearance wins.
  std::vector<const ModelDescriptor*> method_bases;
  for (const ModelDescriptor& model : base_models) {
    bool seen = false;
    for (const ModelDescriptor* base : method_bases) {
      if (base->method.method_id == model.method.method_id) {
        seen = true;
        break;
      }
    }
    if (!seen) method_bases.push_back(&model);
  }

  TrainingReport report;
  for (const DegradationSpec& spec : plan) {
    DegradedCorpus corpus;
    corpus.spec = spec;
    corpus.variant_name = degradation_variant_name(spec);
    corpus.root = out_root / degradation_dirname(spec);
    corpus.frames = frames.size();

    double ratio_sum = 0.0;
    for (const CorpusFrame& frame : frames) {
      const std::vector<std::uint8_t> original_bytes =
          read_file_bytes(frame.velodyne);
      const PointCloud cloud = read_velodyne_bin(original_bytes, frame.frame_id);

      std::vector<std::uint8_t> out_bytes;
      if (spec.kind == DegradationKind::none) {
        out_bytes = original_bytes;  // verbatim, provably byte-identical
        ratio_sum += 1.0;
      } else {
        const PointCloud degraded =
            apply_degradation(cloud, with_frame_seed(spec, frame.frame_id));
        ratio_sum += normalized_point_count(cloud, degraded);
        out_bytes = write_velodyne_bin(degraded);
      }
      write_file_bytes(corpus.root / "velodyne" / (frame.frame_id + ".bin"),
                       out_bytes);
      if (frame.labels) {
        write_file_bytes(corpus.root / "label_2" / (frame.frame_id + ".txt"),
                         read_file_bytes(*frame.labels));
      }
      if (frame.calib) {
        write_file_bytes(corpus.root / "calib" / (frame.frame_id + ".txt"),
                         read_file_bytes(*frame.calib));
      }
    }
    corpus.mean_ratio = ratio_sum / static_cast<double>(frames.size());

    for (const ModelDescriptor* base : method_bases) {
      ModelDescriptor stub = *base;
      stub.model_id = base->method.method_id + ":" + corpus.variant_name;
      stub.train_degradation = spec;
      stub.train_normalized_points = corpus.mean_ratio;
      stub.ap_profile.clear();  // the learner fills accuracy in
      report.registry_stub_lines.push_back(format_registry_line(stub));
    }
    report.corpora.push_back(std::move(corpus));
  }
  return report;
}

}  // namespace pcsel
