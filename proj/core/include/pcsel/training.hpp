#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcsel/degrade.hpp"
#include "pcsel/registry.hpp"

// The data-preparation half of model training: materialize one degraded
// copy of a corpus per planned degradation and emit registry-stub lines
// for the models a learner would produce from them.  The learner itself
// is external.

namespace pcsel {

// Human-facing variant name, used in stub model ids:
// "Original", "VoxelGrid-0.1", "Uniform-0.4", "Random-0.5", "Noise-0.04".
std::string degradation_variant_name(const DegradationSpec& spec);

// Directory-safe name: "original", "voxel_grid_0.1", "noise_0.04", ...
std::string degradation_dirname(const DegradationSpec& spec);

struct DegradedCorpus {
  DegradationSpec spec;
  std::string variant_name;
  std::filesystem::path root;
  // mean normalized point count (degraded / original) over the frames
  double mean_ratio = 1.0;
  std::uint64_t frames = 0;
};

struct TrainingReport {
  std::vector<DegradedCorpus> corpora;
  // one line per (method, spec), in registry grammar, ratio filled with
  // the measured mean; ap left for the learner
  std::vector<std::string> registry_stub_lines;
};

// For every spec in the plan, writes out_root/<dirname>/ with every cloud
// transformed (kind `none` copies the bytes verbatim) and labels and calib
// files copied byte-identical.  Per-frame seeds fold in the frame id, so
// results do not depend on scan order.  Stub lines inherit method and
// latency from the first base model of each method.
// Throws IoFailure, EmptyCorpus and the degradation precondition errors.
TrainingReport training_pipeline(const std::filesystem::path& corpus_root,
                                 const std::filesystem::path& out_root,
                                 const std::vector<DegradationSpec>& plan,
                                 const std::vector<ModelDescriptor>& base_models);

}  // namespace pcsel
