#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcsel/degrade.hpp"

// The model registry: which detection models exist, the architectural
// features of their methods, what degradation their training data carried,
// and their published accuracy and latency.

namespace pcsel {

enum class StageUnit : std::uint8_t { point = 0, voxel = 1, pillar = 2, none = 3 };
enum class BoxStrategy : std::uint8_t { anchor_based = 0, anchor_free = 1 };

const char* to_string(StageUnit u);
const char* to_string(BoxStrategy b);

// Architecture features of a detection method (shared by all of the
// method's trained models).
struct MethodFeatures {
  std::string method_id;
  int num_stages = 1;                       // 1 or 2
  StageUnit stage1_unit = StageUnit::voxel; // never `none`
  StageUnit stage2_unit = StageUnit::none;  // `none` iff num_stages == 1
  BoxStrategy box_strategy = BoxStrategy::anchor_based;

  bool has_point_stage() const {
    return stage1_unit == StageUnit::point || stage2_unit == StageUnit::point;
  }
  bool has_voxel_stage() const {
    return stage1_unit == StageUnit::voxel || stage2_unit == StageUnit::voxel;
  }
  bool has_pillar_stage() const {
    return stage1_unit == StageUnit::pillar || stage2_unit == StageUnit::pillar;
  }

  bool operator==(const MethodFeatures&) const = default;
};

// One trained model of a method.
struct ModelDescriptor {
  std::string model_id;
  MethodFeatures method;
  DegradationSpec train_degradation;
  // normalized point count of the training data relative to the original
  // corpus, in (0, 1] (1.0 for undergraded and noise-only training)
  double train_normalized_points = 1.0;
  // AP percent per class, [0, 100]; absent entries mean unpublished
  std::map<std::string, double> ap_profile;
  double latency_s = 0.0;  // nominal inference latency, > 0

  // Gaussian sigma of the training data (0 unless noise-trained).
  double train_noise_sigma() const {
    return train_degradation.kind == DegradationKind::gaussian_noise
               ? train_degradation.param
               : 0.0;
  }
};

struct ModelRegistry {
  std::vector<ModelDescriptor> models;

  const ModelDescriptor* find(const std::string& model_id) const;
  // Distinct methods in first-appearance order.
  std::vector<MethodFeatures> methods() const;
  std::vector<const ModelDescriptor*> models_of(
      const std::string& method_id) const;
};

// Line-oriented registry format.  Each model is one line:
//
//   model <id> method=<name> stages=<1|2> stage1=<point|voxel|pillar>
//     stage2=<point|voxel|pillar|none> box=<anchor|free>
//     train=<none|voxel_grid:<edge_m>|uniform:<edge_m>|random:<frac>|noise:<sigma>>
//     ratio=<float> latency_s=<float> [ap.<class>=<float> ...]
//
// '#' starts a comment, blank lines are skipped.  Duplicate model ids,
// inconsistent features for a shared method name, and stage counts that
// disagree with stage2 are rejected.
// Throws MalformedLine, UnknownEnum, DuplicateId, FieldOutOfRange.
ModelRegistry parse_registry(const std::string& text);

// One grammar line for a descriptor (no trailing newline).
std::string format_registry_line(const ModelDescriptor& model);

}  // namespace pcsel
