#include "pcsel/registry.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "pcsel/errors.hpp"

namespace pcsel {
namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, int line_no) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::malformed_line,
                "line " + std::to_string(line_no) + ": bad number '" + token +
                    "'");
  }
  return v;
}

StageUnit parse_stage(const std::string& value, bool allow_none, int line_no) {
  if (value == "point") return StageUnit::point;
  if (value == "voxel") return StageUnit::voxel;
  if (value == "pillar") return StageUnit::pillar;
  if (allow_none && value == "none") return StageUnit::none;
  throw Error(ErrorCode::unknown_enum,
              "line " + std::to_string(line_no) + ": stage unit '" + value +
                  "'");
}

DegradationSpec parse_train(const std::string& value, int line_no) {
  DegradationSpec spec;
  if (value == "none") return spec;
  const size_t colon = value.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::unknown_enum,
                "line " + std::to_string(line_no) + ": train spec '" + value +
                    "'");
  }
  const std::string kind = value.substr(0, colon);
  spec.param = parse_double(value.substr(colon + 1), line_no);
  if (kind == "voxel_grid") {
    spec.kind = DegradationKind::voxel_grid;
  } else if (kind == "uniform") {
    spec.kind = DegradationKind::uniform;
  } else if (kind == "random") {
    spec.kind = DegradationKind::random;
  } else if (kind == "noise") {
    spec.kind = DegradationKind::gaussian_noise;
  } else {
    throw Error(ErrorCode::unknown_enum,
                "line " + std::to_string(line_no) + ": train kind '" + kind +
                    "'");
  }
  return spec;
}

}  // namespace

const char* to_string(StageUnit u) {
  switch (u) {
    case StageUnit::point: return "point";
    case StageUnit::voxel: return "voxel";
    case StageUnit::pillar: return "pillar";
    case StageUnit::none: return "none";
  }
  return "unknown";
}

const char* to_string(BoxStrategy b) {
  return b == BoxStrategy::anchor_based ? "anchor" : "free";
}

const ModelDescriptor* ModelRegistry::find(const std::string& model_id) const {
  for (const ModelDescriptor& m : models) {
    if (m.model_id == model_id) return &m;
  }
  return nullptr;
}

std::vector<MethodFeatures> ModelRegistry::methods() const {
  std::vector<MethodFeatures> out;
  for (const ModelDescriptor& m : models) {
    if (std::none_of(out.begin(), out.end(), [&](const MethodFeatures& f) {
          return f.method_id == m.method.method_id;
        })) {
      out.push_back(m.method);
    }
  }
  return out;
}

std::vector<const ModelDescriptor*> ModelRegistry::models_of(
    const std::string& method_id) const {
  std::vector<const ModelDescriptor*> out;
  for (const ModelDescriptor& m : models) {
    if (m.method.method_id == method_id) out.push_back(&m);
  }
  return out;
}

ModelRegistry parse_registry(const std::string& text) {
  ModelRegistry registry;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string head;
    if (!(tokens >> head)) continue;  // blank or comment-only
    if (head != "model") {
      throw Error(ErrorCode::malformed_line,
                  "line " + std::to_string(line_no) +
                      ": expected 'model', got '" + head + "'");
    }
    ModelDescriptor model;
    if (!(tokens >> model.model_id)) {
      throw Error(ErrorCode::malformed_line,
                  "line " + std::to_string(line_no) + ": missing model id");
    }
    bool have_method = false, have_stages = false, have_stage1 = false,
         have_stage2 = false, have_box = false, have_train = false,
         have_ratio = false, have_latency = false;
    std::string token;
    while (tokens >> token) {
      const size_t eq = token.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::malformed_line,
                    "line " + std::to_string(line_no) + ": token '" + token +
                        "' is not key=value");
      }
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "method") {
        model.method.method_id = value;
        have_method = true;
      } else if (key == "stages") {
        if (value != "1" && value != "2") {
          throw Error(ErrorCode::unknown_enum,
                      "line " + std::to_string(line_no) + ": stages '" +
                          value + "'");
        }
        model.method.num_stages = value == "1" ? 1 : 2;
        have_stages = true;
      } else if (key == "stage1") {
        model.method.stage1_unit = parse_stage(value, false, line_no);
        have_stage1 = true;
      } else if (key == "stage2") {
        model.method.stage2_unit = parse_stage(value, true, line_no);
        have_stage2 = true;
      } else if (key == "box") {
        if (value == "anchor") {
          model.method.box_strategy = BoxStrategy::anchor_based;
        } else if (value == "free") {
          model.method.box_strategy = BoxStrategy::anchor_free;
        } else {
          throw Error(ErrorCode::unknown_enum,
                      "line " + std::to_string(line_no) + ": box '" + value +
                          "'");
        }
        have_box = true;
      } else if (key == "train") {
        model.train_degradation = parse_train(value, line_no);
        have_train = true;
      } else if (key == "ratio") {
        model.train_normalized_points = parse_double(value, line_no);
        have_ratio = true;
      } else if (key == "latency_s") {
        model.latency_s = parse_double(value, line_no);
        have_latency = true;
      } else if (key.rfind("ap.", 0) == 0 && key.size() > 3) {
        model.ap_profile[key.substr(3)] = parse_double(value, line_no);
      } else {
        throw Error(ErrorCode::malformed_line,
                    "line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
      }
    }
    if (!have_method || !have_stages || !have_stage1 || !have_stage2 ||
        !have_box || !have_train || !have_ratio || !have_latency) {
      throw Error(ErrorCode::malformed_line,
                  "line " + std::to_string(line_no) + ": missing required key");
    }
    if ((model.method.num_stages == 1) !=
        (model.method.stage2_unit == StageUnit::none)) {
      throw Error(ErrorCode::malformed_line,
                  "line " + std::to_string(line_no) +
                      ": stages and stage2 disagree");
    }
    if (!(model.train_normalized_points > 0.0) ||
        model.train_normalized_points > 1.0) {
      throw Error(ErrorCode::field_out_of_range,
                  "line " + std::to_string(line_no) + ": ratio " +
                      format_double(model.train_normalized_points));
    }
    if (!(model.latency_s > 0.0)) {
      throw Error(ErrorCode::field_out_of_range,
                  "line " + std::to_string(line_no) + ": latency_s " +
                      format_double(model.latency_s));
    }
    for (const auto& [class_name, ap] : model.ap_profile) {
      if (ap < 0.0 || ap > 100.0) {
        throw Error(ErrorCode::field_out_of_range,
                    "line " + std::to_string(line_no) + ": ap." + class_name +
                        " " + format_double(ap));
      }
    }
    if (registry.find(model.model_id) != nullptr) {
      throw Error(ErrorCode::duplicate_id,
                  "line " + std::to_string(line_no) + ": model id '" +
                      model.model_id + "'");
    }
    for (const ModelDescriptor& existing : registry.models) {
      if (existing.method.method_id == model.method.method_id &&
          !(existing.method == model.method)) {
        throw Error(ErrorCode::malformed_line,
                    "line " + std::to_string(line_no) + ": method '" +
                        model.method.method_id +
                        "' redefined with different features");
      }
    }
    registry.models.push_back(std::move(model));
  }
  return registry;
}

std::string format_registry_line(const ModelDescriptor& model) {
  std::string out = "model " + model.model_id;
  out += " method=" + model.method.method_id;
  out += " stages=" + std::to_string(model.method.num_stages);
  out += std::string(" stage1=") + to_string(model.method.stage1_unit);
  out += std::string(" stage2=") + to_string(model.method.stage2_unit);
  out += std::string(" box=") + to_string(model.method.box_strategy);
  out += " train=";
  switch (model.train_degradation.kind) {
    case DegradationKind::none: out += "none"; break;
    case DegradationKind::voxel_grid:
      out += "voxel_grid:" + format_double(model.train_degradation.param);
      break;
    case DegradationKind::uniform:
      out += "uniform:" + format_double(model.train_degradation.param);
      break;
    case DegradationKind::random:
      out += "random:" + format_double(model.train_degradation.param);
      break;
    case DegradationKind::gaussian_noise:
      out += "noise:" + format_double(model.train_degradation.param);
      break;
  }
  out += " ratio=" + format_double(model.train_normalized_points);
  out += " latency_s=" + format_double(model.latency_s);
  for (const auto& [class_name, ap] : model.ap_profile) {
    out += " ap." + class_name + "=" + format_double(ap);
  }
  return out;
}

}  // namespace pcsel
