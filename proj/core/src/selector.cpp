#include "pcsel/selector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "pcsel/errors.hpp"

namespace pcsel {
namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

enum class Dominant { none, density, noise };

// Shared reading of the incompleteness features so the method branch and
// the model choice can never disagree.
struct IncompletenessState {
  double ratio;
  double sigma;
  bool small;         // both features inside their thresholds
  Dominant dominant;  // which degradation axis governs distances
  bool extrapolated;  // both exceeded; dominance picked by exceedance
};

IncompletenessState incompleteness_state(const DataFeatures& features,
                                         const SelectionThresholds& t) {
  IncompletenessState s{};
  s.ratio = features.normalized_point_count;
  s.sigma = features.noise_sigma.value_or(0.0);
  const bool density_exceeds = s.ratio <= t.low_density_max_ratio;
  const bool noise_exceeds = s.sigma >= t.severe_noise_min_sigma;
  s.small = !density_exceeds && !noise_exceeds;
  if (s.small) {
    s.dominant = Dominant::none;
  } else if (density_exceeds && noise_exceeds) {
    const double density_exc =
        (t.low_density_max_ratio - s.ratio) / t.low_density_max_ratio;
    const double noise_exc =
        (s.sigma - t.severe_noise_min_sigma) / t.severe_noise_min_sigma;
    s.dominant = density_exc >= noise_exc ? Dominant::density : Dominant::noise;
    s.extrapolated = true;
  } else {
    s.dominant = density_exceeds ? Dominant::density : Dominant::noise;
  }
  return s;
}

bool model_close(const ModelDescriptor& m, const IncompletenessState& s,
                 const SelectionThresholds& t) {
  return std::fabs(m.train_normalized_points - s.ratio) <=
             t.close_density_rel_tol * s.ratio &&
         std::fabs(m.train_noise_sigma() - s.sigma) <= t.close_noise_abs_tol_m;
}

bool method_in(const std::vector<MethodFeatures>& methods,
               const std::string& method_id) {
  return std::any_of(methods.begin(), methods.end(),
                     [&](const MethodFeatures& f) {
                       return f.method_id == method_id;
                     });
}

// AP on `class_name`, with absent entries ranking below every published
// value.
double ap_or_sentinel(const ModelDescriptor& m, const std::string& class_name) {
  auto it = m.ap_profile.find(class_name);
  return it == m.ap_profile.end() ? -1.0 : it->second;
}

}  // namespace

SizeTable SizeTable::defaults() {
  return SizeTable{{{"Car", 3.9},
                    {"Van", 5.0},
                    {"Truck", 10.0},
                    {"Pedestrian", 0.8},
                    {"Cyclist", 1.8}}};
}

void SelectionThresholds::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::config_out_of_range, what);
  };
  require(large_object_min_length_m > 0.0, "large_object_min_length_m <= 0");
  require(low_density_max_ratio > 0.0 && low_density_max_ratio < 1.0,
          "low_density_max_ratio outside (0, 1)");
  require(severe_noise_min_sigma > 0.0, "severe_noise_min_sigma <= 0");
  require(close_density_rel_tol >= 0.0, "close_density_rel_tol < 0");
  require(close_noise_abs_tol_m >= 0.0, "close_noise_abs_tol_m < 0");
}

ObjectSize classify_object_size(const std::string& class_name,
                                const SizeTable& table, double min_length_m) {
  auto it = table.repr_length_m.find(class_name);
  if (it == table.repr_length_m.end()) {
    throw Error(ErrorCode::unknown_class,
                "no representative length for class " + class_name);
  }
  return it->second >= min_length_m ? ObjectSize::large_object
                                    : ObjectSize::small_object;
}

MethodSelection select_method(const TargetData& target,
                              const DataFeatures& features,
                              const ModelRegistry& registry,
                              const SelectionThresholds& thresholds,
                              const SizeTable& size_table) {
  thresholds.validate();
  if (target.classes.empty()) {
    throw Error(ErrorCode::unknown_class, "target has no classes");
  }
  MethodSelection sel;
  sel.methods = registry.methods();

  // (0) latency budget, judged by each method's fastest model
  if (target.latency_budget_s.has_value()) {
    const double budget = *target.latency_budget_s;
    const size_t before = sel.methods.size();
    std::erase_if(sel.methods, [&](const MethodFeatures& method) {
      double fastest = std::numeric_limits<double>::infinity();
      for (const ModelDescriptor* m : registry.models_of(method.method_id)) {
        fastest = std::min(fastest, m->latency_s);
      }
      return !(fastest <= budget);
    });
    sel.trace.push_back(BranchStep{
        "latency", "filtered",
        "budget " + format_double(budget) + " s keeps " +
            std::to_string(sel.methods.size()) + " of " +
            std::to_string(before) + " methods"});
    if (sel.methods.empty()) {
      throw Error(ErrorCode::no_candidate,
                  "no method meets the latency budget");
    }
  }

  // (1) object size picks the box strategy
  const std::string& primary = target.classes.front();
  const ObjectSize size = classify_object_size(
      primary, size_table, thresholds.large_object_min_length_m);
  for (size_t i = 1; i < target.classes.size(); ++i) {
    if (classify_object_size(target.classes[i], size_table,
                             thresholds.large_object_min_length_m) != size) {
      sel.trace.push_back(BranchStep{
          "warning", "mixed_sizes",
          "target classes straddle the size threshold; using first class " +
              primary});
      break;
    }
  }
  const bool large = size == ObjectSize::large_object;
  std::erase_if(sel.methods, [&](const MethodFeatures& method) {
    return method.box_strategy != (large ? BoxStrategy::anchor_based
                                         : BoxStrategy::anchor_free);
  });
  sel.trace.push_back(BranchStep{
      "object_size", large ? "large" : "small",
      "class " + primary + " representative length " +
          format_double(size_table.repr_length_m.at(primary)) + " m " +
          (large ? ">=" : "<") + " " +
          format_double(thresholds.large_object_min_length_m) +
          " m; keeping " + (large ? "anchor-based" : "anchor-free") +
          " methods"});
  if (sel.methods.empty()) {
    throw Error(ErrorCode::no_candidate,
                "no method with the required box strategy");
  }

  // (2) incompleteness
  const IncompletenessState s = incompleteness_state(features, thresholds);
  bool close_model = false;
  std::string close_id;
  for (const ModelDescriptor& m : registry.models) {
    if (method_in(sel.methods, m.method.method_id) &&
        model_close(m, s, thresholds)) {
      close_model = true;
      close_id = m.model_id;
      break;
    }
  }
  if (s.small || close_model) {
    sel.trace.push_back(BranchStep{
        "incompleteness", "small",
        s.small ? "ratio " + format_double(s.ratio) + " > " +
                      format_double(thresholds.low_density_max_ratio) +
                      " and sigma " + format_double(s.sigma) + " < " +
                      format_double(thresholds.severe_noise_min_sigma) +
                      "; no unit filter"
                : "model " + close_id +
                      " is trained close to the inference degradation; no "
                      "unit filter"});
    return sel;
  }

  std::string extrapolation_note;
  if (s.extrapolated) {
    extrapolation_note =
        " (both incompleteness kinds exceed their thresholds; the larger "
        "relative exceedance governs, an extrapolation beyond the published "
        "cases)";
  }
  if (s.dominant == Dominant::density) {
    std::erase_if(sel.methods, [](const MethodFeatures& method) {
      return !method.has_point_stage();
    });
    sel.trace.push_back(BranchStep{
        "incompleteness", "low_density",
        "ratio " + format_double(s.ratio) + " <= " +
            format_double(thresholds.low_density_max_ratio) +
            "; keeping methods with a point-based stage" +
            extrapolation_note});
  } else {
    std::erase_if(sel.methods, [](const MethodFeatures& method) {
      return method.has_point_stage();
    });
    // Prefer voxel units when some surviving voxel method has a
    // noise-trained model matching the measured sigma; otherwise fall back
    // to pillar units if any survive.
    bool voxel_with_noise_model = false;
    for (const ModelDescriptor& m : registry.models) {
      if (m.train_degradation.kind == DegradationKind::gaussian_noise &&
          std::fabs(m.train_degradation.param - s.sigma) <=
              thresholds.close_noise_abs_tol_m &&
          method_in(sel.methods, m.method.method_id) &&
          m.method.has_voxel_stage()) {
        voxel_with_noise_model = true;
        break;
      }
    }
    std::string unit_note;
    if (voxel_with_noise_model) {
      std::erase_if(sel.methods, [](const MethodFeatures& method) {
        return !method.has_voxel_stage();
      });
      unit_note = "; preferring voxel units (matching noise-trained model)";
    } else if (std::any_of(sel.methods.begin(), sel.methods.end(),
                           [](const MethodFeatures& m) {
                             return m.has_pillar_stage();
                           })) {
      std::erase_if(sel.methods, [](const MethodFeatures& method) {
        return !method.has_pillar_stage();
      });
      unit_note = "; preferring pillar units (no matching noise-trained model)";
    }
    sel.trace.push_back(BranchStep{
        "incompleteness", "severe_noise",
        "sigma " + format_double(s.sigma) + " >= " +
            format_double(thresholds.severe_noise_min_sigma) +
            "; keeping voxel/pillar methods" + unit_note +
            extrapolation_note});
  }
  if (sel.methods.empty()) {
    throw Error(ErrorCode::no_candidate,
                "no method matches the incompleteness branch");
  }
  return sel;
}

SelectionDecision select_model(const MethodSelection& selection,
                               const DataFeatures& features,
                               const TargetData& target,
                               const ModelRegistry& registry,
                               const SelectionThresholds& thresholds) {
  thresholds.validate();
  if (target.classes.empty()) {
    throw Error(ErrorCode::unknown_class, "target has no classes");
  }
  const IncompletenessState s = incompleteness_state(features, thresholds);
  const std::string& primary = target.classes.front();

  const ModelDescriptor* best = nullptr;
  double best_distance = 0.0;
  auto distance_of = [&](const ModelDescriptor& m) {
    switch (s.dominant) {
      case Dominant::density:
        return std::fabs(m.train_normalized_points - s.ratio);
      case Dominant::noise:
        return std::fabs(m.train_noise_sigma() - s.sigma);
      case Dominant::none:
        // Small incompleteness: undergraded training data wins outright.
        return m.train_degradation.kind == DegradationKind::none ? 0.0 : 1.0;
    }
    return 0.0;
  };
  for (const ModelDescriptor& m : registry.models) {
    if (!method_in(selection.methods, m.method.method_id)) continue;
    const double distance = distance_of(m);
    if (best == nullptr) {
      best = &m;
      best_distance = distance;
      continue;
    }
    if (distance != best_distance) {
      if (distance < best_distance) {
        best = &m;
        best_distance = distance;
      }
      continue;
    }
    const double ap_new = ap_or_sentinel(m, primary);
    const double ap_best = ap_or_sentinel(*best, primary);
    if (ap_new != ap_best) {
      if (ap_new > ap_best) best = &m;
      continue;
    }
    if (m.model_id < best->model_id) best = &m;
  }
  if (best == nullptr) {
    throw Error(ErrorCode::no_candidate,
                "surviving methods have no registered models");
  }

  SelectionDecision decision;
  decision.model = *best;
  decision.trace = selection.trace;
  std::string reason;
  switch (s.dominant) {
    case Dominant::none:
      reason = "small incompleteness prefers undergraded training data";
      break;
    case Dominant::density:
      reason = "training ratio " +
               format_double(best->train_normalized_points) +
               " is closest to inference ratio " + format_double(s.ratio);
      break;
    case Dominant::noise:
      reason = "training sigma " + format_double(best->train_noise_sigma()) +
               " is closest to inference sigma " + format_double(s.sigma);
      break;
  }
  reason += "; ties break by ap." + primary + " then model id";
  decision.trace.push_back(BranchStep{"model", best->model_id, reason});
  return decision;
}

SelectionDecision select(const TargetData& target, const DataFeatures& features,
                         const ModelRegistry& registry,
                         const SelectionThresholds& thresholds,
                         const SizeTable& size_table) {
  return select_model(
      select_method(target, features, registry, thresholds, size_table),
      features, target, registry, thresholds);
}

std::string format_trace(const std::vector<BranchStep>& trace) {
  std::string out;
  for (const BranchStep& step : trace) {
    out += "branch=" + step.branch + " option=" + step.option +
           " reason=" + step.reason + "\n";
  }
  return out;
}

}  // namespace pcsel
