#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcsel/features.hpp"
#include "pcsel/registry.hpp"

// The selection flowchart: target object size picks the box strategy,
// the degree and kind of data incompleteness picks the representation
// units, and the closest-trained model of the surviving methods wins.

namespace pcsel {

// What the requester wants detected.  The first class drives the size
// branch and accuracy tie-breaks; additional classes only produce a trace
// warning when they straddle the size threshold.
struct TargetData {
  std::vector<std::string> classes;
  std::optional<double> latency_budget_s;
};

// Representative real-world length per class, for the size branch.
struct SizeTable {
  std::map<std::string, double> repr_length_m;
  static SizeTable defaults();
};

struct SelectionThresholds {
  double large_object_min_length_m = 3.0;
  double low_density_max_ratio = 0.25;
  double severe_noise_min_sigma = 0.08;
  // A trained model counts as "close" to the inference degradation when its
  // training ratio is within this relative tolerance of the inference ratio
  // and its training sigma within this absolute tolerance of the inference
  // sigma.
  double close_density_rel_tol = 0.5;
  double close_noise_abs_tol_m = 0.02;

  // Throws ConfigOutOfRange.
  void validate() const;
};

enum class ObjectSize { small_object, large_object };

// Large iff the class's representative length reaches min_length_m.
// Throws UnknownClass for classes missing from the table.
ObjectSize classify_object_size(const std::string& class_name,
                                const SizeTable& table, double min_length_m);

// One audit line of the decision path.
struct BranchStep {
  std::string branch;  // e.g. "object_size", "incompleteness"
  std::string option;  // which arrow was taken
  std::string reason;

  bool operator==(const BranchStep&) const = default;
};

// Output of the method-level branches: the surviving methods plus the trace
// of every branch taken so far.
struct MethodSelection {
  std::vector<MethodFeatures> methods;
  std::vector<BranchStep> trace;
};

// Method-level selection: (0) drop methods whose fastest model misses the
// latency budget, when one is set; (1) keep anchor-based methods for large
// target classes, anchor-free for small; (2) judge incompleteness: when it
// is small (ratio above low_density_max_ratio and sigma below
// severe_noise_min_sigma) or some registered model of a surviving method is
// close to the inference degradation, no further filter applies; otherwise
// low density keeps methods with a point-based stage and severe noise keeps
// voxel/pillar methods (voxel preferred when a matching noise-trained model
// exists, pillar otherwise).  When both kinds of incompleteness exceed
// their thresholds, the one with the larger relative exceedance governs
// (recorded in the trace as an extrapolation).
// Throws NoCandidate when no method survives.
MethodSelection select_method(const TargetData& target,
                              const DataFeatures& features,
                              const ModelRegistry& registry,
                              const SelectionThresholds& thresholds = {},
                              const SizeTable& size_table = SizeTable::defaults());

struct SelectionDecision {
  ModelDescriptor model;
  std::vector<BranchStep> trace;  // every branch, ending with the model pick
};

// Model-level selection among the surviving methods' models: minimize the
// degradation distance (|train ratio - inference ratio| when density
// dominates, |train sigma - inference sigma| when noise dominates, with
// undergraded models preferred outright when incompleteness is small).
// Ties break by higher ap_profile on the first target class, then by
// lexicographic model id.
// Throws NoCandidate when the surviving methods have no models.
SelectionDecision select_model(const MethodSelection& selection,
                               const DataFeatures& features,
                               const TargetData& target,
                               const ModelRegistry& registry,
                               const SelectionThresholds& thresholds = {});

// select_method + select_model.
SelectionDecision select(const TargetData& target, const DataFeatures& features,
                         const ModelRegistry& registry,
                         const SelectionThresholds& thresholds = {},
                         const SizeTable& size_table = SizeTable::defaults());

// The trace rendered one "branch=<name> option=<option> reason=..." line
// per step.
std::string format_trace(const std::vector<BranchStep>& trace);

}  // namespace pcsel
