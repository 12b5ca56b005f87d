#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "pcsel/selector.hpp"

using namespace pcsel;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

const ModelRegistry& kitti_registry() {
  static const ModelRegistry registry =
      parse_registry(read_text(std::string(PCSEL_DATA_DIR) + "/registry_kitti.txt"));
  return registry;
}

// One syntactically complete line to mutate in the grammar error cases.
const char kValidLine[] =
    "model M:base method=M stages=2 stage1=voxel stage2=point box=anchor "
    "train=none ratio=1.0 latency_s=0.1 ap.Car=50";

void expect_parse_error(const std::string& text, ErrorCode code) {
  try {
    parse_registry(text);
    FAIL("expected an error for: " << text);
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

DataFeatures features_of(double ratio, std::optional<double> sigma = {}) {
  DataFeatures f;
  f.normalized_point_count = ratio;
  f.noise_sigma = sigma;
  f.frames_analyzed = 1;
  return f;
}

TargetData target_of(std::vector<std::string> classes,
                     std::optional<double> budget = {}) {
  return TargetData{std::move(classes), budget};
}

}  // namespace

TEST_CASE("registry fixture structure") {
  const ModelRegistry& reg = kitti_registry();
  CHECK(reg.models.size() == 52);

  const auto methods = reg.methods();
  REQUIRE(methods.size() == 6);
  CHECK(methods[0].method_id == "PointRCNN");
  CHECK(methods[1].method_id == "Part-A2-free");
  CHECK(methods[2].method_id == "Part-A2-anchor");
  CHECK(methods[3].method_id == "PV-RCNN");
  CHECK(methods[4].method_id == "SECOND");
  CHECK(methods[5].method_id == "PointPillars");

  CHECK(methods[0] == MethodFeatures{"PointRCNN", 2, StageUnit::point,
                                     StageUnit::point, BoxStrategy::anchor_free});
  CHECK(methods[3] == MethodFeatures{"PV-RCNN", 2, StageUnit::voxel,
                                     StageUnit::point, BoxStrategy::anchor_based});
  CHECK(methods[5] == MethodFeatures{"PointPillars", 1, StageUnit::pillar,
                                     StageUnit::none, BoxStrategy::anchor_based});
  CHECK(methods[3].has_point_stage());
  CHECK(methods[3].has_voxel_stage());
  CHECK_FALSE(methods[3].has_pillar_stage());
  CHECK(methods[5].has_pillar_stage());
  CHECK_FALSE(methods[5].has_point_stage());

  // The two methods whose 1/8 voxel-grid training did not converge have one
  // model fewer.
  CHECK(reg.models_of("PointRCNN").size() == 9);
  CHECK(reg.models_of("Part-A2-free").size() == 9);
  CHECK(reg.models_of("Part-A2-anchor").size() == 8);
  CHECK(reg.models_of("PV-RCNN").size() == 8);
  CHECK(reg.models_of("SECOND").size() == 9);
  CHECK(reg.models_of("PointPillars").size() == 9);
  CHECK(reg.find("PV-RCNN:VoxelGrid-1/8") == nullptr);

  const ModelDescriptor* pv = reg.find("PV-RCNN:Original");
  REQUIRE(pv != nullptr);
  CHECK(pv->ap_profile.at("Car") == 82.8);
  CHECK(pv->latency_s == 0.12);
  CHECK(pv->train_degradation.kind == DegradationKind::none);
  CHECK(pv->train_normalized_points == 1.0);
  CHECK(pv->train_noise_sigma() == 0.0);

  const ModelDescriptor* noisy = reg.find("SECOND:Noise-0.08");
  REQUIRE(noisy != nullptr);
  CHECK(noisy->train_degradation.kind == DegradationKind::gaussian_noise);
  CHECK(noisy->train_noise_sigma() == 0.08);
  CHECK(noisy->train_normalized_points == 1.0);
  CHECK(noisy->ap_profile.empty());
}

TEST_CASE("registry grammar") {
  SUBCASE("comments, blanks and inline comments") {
    const ModelRegistry reg = parse_registry(
        "# header comment\n\n" + std::string(kValidLine) + "  # trailing\n");
    REQUIRE(reg.models.size() == 1);
    CHECK(reg.models[0].model_id == "M:base");
    CHECK(reg.models[0].method.num_stages == 2);
    CHECK(reg.models[0].ap_profile.at("Car") == 50.0);
  }

  SUBCASE("every descriptor reparses from its formatted line") {
    for (const ModelDescriptor& m : kitti_registry().models) {
      const ModelRegistry reg = parse_registry(format_registry_line(m) + "\n");
      REQUIRE(reg.models.size() == 1);
      const ModelDescriptor& back = reg.models[0];
      CHECK(back.model_id == m.model_id);
      CHECK(back.method == m.method);
      CHECK(back.train_degradation == m.train_degradation);
      CHECK(back.train_normalized_points == m.train_normalized_points);
      CHECK(back.ap_profile == m.ap_profile);
      CHECK(back.latency_s == m.latency_s);
    }
  }

  SUBCASE("malformed lines") {
    auto mutate = [](const std::string& from, const std::string& to) {
      std::string line = kValidLine;
      const size_t at = line.find(from);
      REQUIRE(at != std::string::npos);
      line.replace(at, from.size(), to);
      return line;
    };
    expect_parse_error("mdoel X\n", ErrorCode::malformed_line);
    expect_parse_error("model\n", ErrorCode::malformed_line);
    expect_parse_error(std::string(kValidLine) + " loose\n",
                       ErrorCode::malformed_line);
    expect_parse_error(mutate("ratio=", "ration="), ErrorCode::malformed_line);
    expect_parse_error(mutate(" latency_s=0.1", ""), ErrorCode::malformed_line);
    expect_parse_error(mutate("ratio=1.0", "ratio=abc"),
                       ErrorCode::malformed_line);
    expect_parse_error(mutate("stages=2", "stages=1"),
                       ErrorCode::malformed_line);  // stage2 disagrees
    expect_parse_error(mutate("stage2=point", "stage2=none"),
                       ErrorCode::malformed_line);
    expect_parse_error(mutate("ap.Car=50", "ap.=50"), ErrorCode::malformed_line);
    // same method name with different architecture features
    std::string other = kValidLine;
    other.replace(other.find("M:base"), 6, "M:other");
    other.replace(other.find("box=anchor"), 10, "box=free");
    expect_parse_error(std::string(kValidLine) + "\n" + other + "\n",
                       ErrorCode::malformed_line);
  }

  SUBCASE("unknown enums") {
    auto with = [](const std::string& from, const std::string& to) {
      std::string line = kValidLine;
      line.replace(line.find(from), from.size(), to);
      return line;
    };
    expect_parse_error(with("stages=2", "stages=3"), ErrorCode::unknown_enum);
    expect_parse_error(with("stage1=voxel", "stage1=mesh"),
                       ErrorCode::unknown_enum);
    expect_parse_error(with("stage1=voxel", "stage1=none"),
                       ErrorCode::unknown_enum);  // stage1 may not be none
    expect_parse_error(with("box=anchor", "box=square"),
                       ErrorCode::unknown_enum);
    expect_parse_error(with("train=none", "train=magic:1"),
                       ErrorCode::unknown_enum);
    expect_parse_error(with("train=none", "train=noise"),
                       ErrorCode::unknown_enum);  // parametric kinds need ':'
  }

  SUBCASE("field ranges") {
    auto with = [](const std::string& from, const std::string& to) {
      std::string line = kValidLine;
      line.replace(line.find(from), from.size(), to);
      return line;
    };
    expect_parse_error(with("ratio=1.0", "ratio=0"),
                       ErrorCode::field_out_of_range);
    expect_parse_error(with("ratio=1.0", "ratio=1.5"),
                       ErrorCode::field_out_of_range);
    expect_parse_error(with("latency_s=0.1", "latency_s=0"),
                       ErrorCode::field_out_of_range);
    expect_parse_error(with("ap.Car=50", "ap.Car=100.5"),
                       ErrorCode::field_out_of_range);
    expect_parse_error(with("ap.Car=50", "ap.Car=-1"),
                       ErrorCode::field_out_of_range);
  }

  SUBCASE("duplicate model ids") {
    expect_parse_error(std::string(kValidLine) + "\n" + kValidLine + "\n",
                       ErrorCode::duplicate_id);
  }
}

TEST_CASE("classify_object_size") {
  const SizeTable table = SizeTable::defaults();
  CHECK(classify_object_size("Car", table, 3.0) == ObjectSize::large_object);
  CHECK(classify_object_size("Van", table, 3.0) == ObjectSize::large_object);
  CHECK(classify_object_size("Truck", table, 3.0) == ObjectSize::large_object);
  CHECK(classify_object_size("Pedestrian", table, 3.0) ==
        ObjectSize::small_object);
  CHECK(classify_object_size("Cyclist", table, 3.0) ==
        ObjectSize::small_object);
  // the threshold itself counts as large
  CHECK(classify_object_size("Cyclist", table, 1.8) ==
        ObjectSize::large_object);
  try {
    classify_object_size("Unicorn", table, 3.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_class);
  }
}

TEST_CASE("threshold validation") {
  CHECK_NOTHROW(SelectionThresholds{}.validate());
  auto expect_invalid = [](SelectionThresholds t) {
    try {
      t.validate();
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config_out_of_range);
    }
  };
  SelectionThresholds t;
  t.large_object_min_length_m = 0.0;
  expect_invalid(t);
  t = {};
  t.low_density_max_ratio = 0.0;
  expect_invalid(t);
  t = {};
  t.low_density_max_ratio = 1.0;  // the ratio scale's endpoint is excluded
  expect_invalid(t);
  t = {};
  t.severe_noise_min_sigma = -0.1;
  expect_invalid(t);
  t = {};
  t.close_density_rel_tol = -0.5;
  expect_invalid(t);
  t = {};
  t.close_noise_abs_tol_m = -0.01;
  expect_invalid(t);
  // select_method itself rejects bad thresholds
  t = {};
  t.severe_noise_min_sigma = 0.0;
  try {
    select_method(target_of({"Car"}), features_of(1.0), kitti_registry(), t);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_out_of_range);
  }
}

TEST_CASE("select_method branches") {
  const ModelRegistry& reg = kitti_registry();

  SUBCASE("large target keeps anchor-based methods") {
    const MethodSelection sel =
        select_method(target_of({"Car"}), features_of(1.0), reg);
    REQUIRE(sel.methods.size() == 4);
    CHECK(sel.methods[0].method_id == "Part-A2-anchor");
    CHECK(sel.methods[1].method_id == "PV-RCNN");
    CHECK(sel.methods[2].method_id == "SECOND");
    CHECK(sel.methods[3].method_id == "PointPillars");
    REQUIRE(sel.trace.size() == 2);
    CHECK(sel.trace[0] ==
          BranchStep{"object_size", "large",
                     "class Car representative length 3.9 m >= 3 m; keeping "
                     "anchor-based methods"});
    CHECK(sel.trace[1] ==
          BranchStep{"incompleteness", "small",
                     "ratio 1 > 0.25 and sigma 0 < 0.08; no unit filter"});
  }

  SUBCASE("small target keeps anchor-free methods") {
    const MethodSelection sel =
        select_method(target_of({"Pedestrian"}), features_of(1.0), reg);
    REQUIRE(sel.methods.size() == 2);
    CHECK(sel.methods[0].method_id == "PointRCNN");
    CHECK(sel.methods[1].method_id == "Part-A2-free");
    CHECK(sel.trace[0] ==
          BranchStep{"object_size", "small",
                     "class Pedestrian representative length 0.8 m < 3 m; "
                     "keeping anchor-free methods"});
  }

  SUBCASE("latency budget filters by each method's fastest model") {
    const MethodSelection sel =
        select_method(target_of({"Car"}, 0.05), features_of(1.0), reg);
    REQUIRE(sel.methods.size() == 2);
    CHECK(sel.methods[0].method_id == "SECOND");
    CHECK(sel.methods[1].method_id == "PointPillars");
    CHECK(sel.trace[0] ==
          BranchStep{"latency", "filtered",
                     "budget 0.05 s keeps 2 of 6 methods"});
    try {
      select_method(target_of({"Car"}, 0.001), features_of(1.0), reg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_candidate);
    }
  }

  SUBCASE("mixed target sizes warn and follow the first class") {
    const MethodSelection sel = select_method(
        target_of({"Car", "Pedestrian"}), features_of(1.0), reg);
    REQUIRE(sel.trace.size() == 3);
    CHECK(sel.trace[0] ==
          BranchStep{"warning", "mixed_sizes",
                     "target classes straddle the size threshold; using first "
                     "class Car"});
    CHECK(sel.trace[1].option == "large");
    // same-size pairs do not warn
    const MethodSelection quiet = select_method(
        target_of({"Car", "Van"}), features_of(1.0), reg);
    CHECK(quiet.trace.size() == 2);
  }

  SUBCASE("low density keeps point-stage methods") {
    const MethodSelection sel =
        select_method(target_of({"Car"}), features_of(0.08), reg);
    REQUIRE(sel.methods.size() == 1);
    CHECK(sel.methods[0].method_id == "PV-RCNN");
    CHECK(sel.trace[1] ==
          BranchStep{"incompleteness", "low_density",
                     "ratio 0.08 <= 0.25; keeping methods with a point-based "
                     "stage"});
  }

  SUBCASE("a close-trained model suppresses the unit filter") {
    const MethodSelection sel = select_method(
        target_of({"Pedestrian"}), features_of(1.0, 0.08), reg);
    REQUIRE(sel.methods.size() == 2);  // both anchor-free methods survive
    CHECK(sel.trace[1] ==
          BranchStep{"incompleteness", "small",
                     "model PointRCNN:Noise-0.08 is trained close to the "
                     "inference degradation; no unit filter"});
  }

  SUBCASE("severe noise prefers voxel units when a matching model exists") {
    const MethodSelection sel =
        select_method(target_of({"Car"}), features_of(0.30, 0.09), reg);
    REQUIRE(sel.methods.size() == 2);
    CHECK(sel.methods[0].method_id == "Part-A2-anchor");
    CHECK(sel.methods[1].method_id == "SECOND");
    CHECK(sel.trace[1] ==
          BranchStep{"incompleteness", "severe_noise",
                     "sigma 0.09 >= 0.08; keeping voxel/pillar methods; "
                     "preferring voxel units (matching noise-trained model)"});
  }

  SUBCASE("severe noise falls back to pillar units otherwise") {
    const MethodSelection sel =
        select_method(target_of({"Car"}), features_of(1.0, 0.15), reg);
    REQUIRE(sel.methods.size() == 1);
    CHECK(sel.methods[0].method_id == "PointPillars");
    CHECK(sel.trace[1] ==
          BranchStep{"incompleteness", "severe_noise",
                     "sigma 0.15 >= 0.08; keeping voxel/pillar methods; "
                     "preferring pillar units (no matching noise-trained "
                     "model)"});
  }

  SUBCASE("severe noise keeps plain voxel methods when neither applies") {
    const MethodSelection sel = select_method(
        target_of({"Pedestrian"}), features_of(1.0, 0.20), reg);
    REQUIRE(sel.methods.size() == 1);
    CHECK(sel.methods[0].method_id == "Part-A2-free");
    CHECK(sel.trace[1].reason ==
          "sigma 0.2 >= 0.08; keeping voxel/pillar methods");
  }

  SUBCASE("when both kinds exceed, the larger relative exceedance governs") {
    // density exceedance 0.6 vs noise exceedance 0.5: density governs
    const MethodSelection density = select_method(
        target_of({"Car"}), features_of(0.10, 0.12), reg);
    REQUIRE(density.methods.size() == 1);
    CHECK(density.methods[0].method_id == "PV-RCNN");
    CHECK(density.trace[1].option == "low_density");
    CHECK(density.trace[1].reason.find(
              "an extrapolation beyond the published cases") !=
          std::string::npos);
    // density exceedance 0.2 vs noise exceedance 1.5: noise governs
    const MethodSelection noise = select_method(
        target_of({"Car"}), features_of(0.20, 0.20), reg);
    REQUIRE(noise.methods.size() == 1);
    CHECK(noise.methods[0].method_id == "PointPillars");
    CHECK(noise.trace[1].option == "severe_noise");
    CHECK(noise.trace[1].reason.find("extrapolation") != std::string::npos);
  }

  SUBCASE("errors") {
    try {
      select_method(target_of({}), features_of(1.0), reg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_class);
    }
    try {
      select_method(target_of({"Unicorn"}), features_of(1.0), reg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_class);
    }
    // a registry whose only method has the wrong box strategy
    const ModelRegistry second_only = parse_registry(
        "model SECOND:Original method=SECOND stages=1 stage1=voxel "
        "stage2=none box=anchor train=none ratio=1.0 latency_s=0.04\n");
    try {
      select_method(target_of({"Pedestrian"}), features_of(1.0), second_only);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_candidate);
    }
    // severe noise with only point-stage methods surviving
    const ModelRegistry pv_only = parse_registry(
        "model PV-RCNN:Original method=PV-RCNN stages=2 stage1=voxel "
        "stage2=point box=anchor train=none ratio=1.0 latency_s=0.12\n");
    try {
      select_method(target_of({"Car"}), features_of(1.0, 0.20), pv_only);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_candidate);
    }
  }
}

TEST_CASE("select end to end on the registry fixture") {
  const ModelRegistry& reg = kitti_registry();

  SUBCASE("reference request fixtures") {
    auto chosen = [&](const std::string& cls, double ratio,
                      std::optional<double> sigma = {}) {
      return select(target_of({cls}), features_of(ratio, sigma), reg);
    };
    CHECK(chosen("Car", 1.0).model.model_id == "PV-RCNN:Original");
    CHECK(chosen("Pedestrian", 1.0).model.model_id == "Part-A2-free:Original");
    CHECK(chosen("Car", 0.080).model.model_id == "PV-RCNN:Uniform-1/8");
    CHECK(chosen("Pedestrian", 1.0, 0.08).model.model_id ==
          "Part-A2-free:Noise-0.08");
    CHECK(chosen("Car", 0.25).model.model_id == "PV-RCNN:Uniform-1/4");
    CHECK(chosen("Pedestrian", 0.08).model.model_id ==
          "PointRCNN:Uniform-1/8");
    CHECK(chosen("Car", 0.30, 0.09).model.model_id ==
          "Part-A2-anchor:Noise-0.08");
    CHECK(chosen("Car", 1.0, 0.15).model.model_id ==
          "PointPillars:Noise-0.08");
  }

  SUBCASE("model step trace wording") {
    const SelectionDecision full =
        select(target_of({"Car"}), features_of(1.0), reg);
    REQUIRE(full.trace.size() == 3);
    CHECK(full.trace[2] ==
          BranchStep{"model", "PV-RCNN:Original",
                     "small incompleteness prefers undergraded training data; "
                     "ties break by ap.Car then model id"});

    const SelectionDecision sparse =
        select(target_of({"Car"}), features_of(0.08), reg);
    CHECK(sparse.trace.back() ==
          BranchStep{"model", "PV-RCNN:Uniform-1/8",
                     "training ratio 0.123 is closest to inference ratio 0.08; "
                     "ties break by ap.Car then model id"});

    const SelectionDecision noisy =
        select(target_of({"Pedestrian"}), features_of(1.0, 0.08), reg);
    CHECK(noisy.trace.back() ==
          BranchStep{"model", "Part-A2-free:Noise-0.08",
                     "training sigma 0.08 is closest to inference sigma 0.08; "
                     "ties break by ap.Pedestrian then model id"});

    CHECK(format_trace(full.trace) ==
          "branch=object_size option=large reason=class Car representative "
          "length 3.9 m >= 3 m; keeping anchor-based methods\n"
          "branch=incompleteness option=small reason=ratio 1 > 0.25 and sigma "
          "0 < 0.08; no unit filter\n"
          "branch=model option=PV-RCNN:Original reason=small incompleteness "
          "prefers undergraded training data; ties break by ap.Car then model "
          "id\n");
  }

  SUBCASE("a latency budget steers the small-incompleteness pick") {
    const SelectionDecision fast =
        select(target_of({"Car"}, 0.05), features_of(1.0), reg);
    CHECK(fast.model.model_id == "SECOND:Original");  // ap.Car 78.8 vs 75.7
    CHECK(fast.trace.size() == 4);
  }

  SUBCASE("the chosen training ratio tracks the inference ratio") {
    // As density drops below the threshold, the winner's training ratio
    // steps down monotonically toward the sparsest training variant.
    struct Case {
      double ratio;
      const char* expected;
    };
    // Ties at equal distance and absent AP resolve to the lexicographically
    // smallest id, which ASCII order makes "PV-RCNN:Uniform-..." here.
    const Case cases[] = {
        {0.20, "PV-RCNN:Uniform-1/4"},  // close model, no unit filter
        {0.123, "PV-RCNN:Uniform-1/8"},
        {0.08, "PV-RCNN:Uniform-1/8"},  // beyond tolerance: unit filter on
        {0.03, "PV-RCNN:Uniform-1/8"},
    };
    double previous = 1.0;
    for (const Case& c : cases) {
      const SelectionDecision d =
          select(target_of({"Car"}), features_of(c.ratio), reg);
      CHECK(d.model.model_id == c.expected);
      CHECK(d.model.train_normalized_points <= previous);
      previous = d.model.train_normalized_points;
    }
  }

  SUBCASE("decisions are deterministic and traces are well formed") {
    const double ratios[] = {0.05, 0.123, 0.25, 0.3, 0.6, 1.0};
    const std::optional<double> sigmas[] = {std::nullopt, 0.0, 0.04, 0.08, 0.2};
    for (const char* cls : {"Car", "Pedestrian"}) {
      for (double ratio : ratios) {
        for (const auto& sigma : sigmas) {
          const SelectionDecision a =
              select(target_of({cls}), features_of(ratio, sigma), reg);
          const SelectionDecision b =
              select(target_of({cls}), features_of(ratio, sigma), reg);
          CHECK(a.model.model_id == b.model.model_id);
          CHECK(a.trace == b.trace);
          REQUIRE(reg.find(a.model.model_id) != nullptr);
          REQUIRE(a.trace.size() >= 3);
          CHECK(a.trace.front().branch == "object_size");
          CHECK(a.trace[1].branch == "incompleteness");
          CHECK(a.trace.back().branch == "model");
          CHECK(a.trace.back().option == a.model.model_id);
          CHECK(format_trace(a.trace).find("branch=model option=" +
                                           a.model.model_id + " reason=") !=
                std::string::npos);
        }
      }
    }
  }

  SUBCASE("accuracy scaling does not change any winner") {
    // AP only breaks ties, so halving every published AP preserves order.
    ModelRegistry scaled = reg;
    std::string text;
    for (ModelDescriptor& m : scaled.models) {
      for (auto& [cls, ap] : m.ap_profile) ap *= 0.5;
      text += format_registry_line(m) + "\n";
    }
    const ModelRegistry reparsed = parse_registry(text);
    for (const char* cls : {"Car", "Pedestrian"}) {
      for (double ratio : {1.0, 0.08}) {
        CHECK(select(target_of({cls}), features_of(ratio), reparsed)
                  .model.model_id ==
              select(target_of({cls}), features_of(ratio), reg).model.model_id);
      }
    }
  }
}

TEST_CASE("select_model tie breaking") {
  const char* common =
      " method=M stages=1 stage1=voxel stage2=none box=anchor train=none "
      "ratio=1.0 latency_s=0.05";
  SUBCASE("higher AP on the first target class wins") {
    const ModelRegistry reg = parse_registry(
        "model B:one" + std::string(common) + " ap.Car=50\n" +
        "model A:two" + common + " ap.Car=50\n" +
        "model C:three" + common + " ap.Car=60\n");
    const SelectionDecision d =
        select(target_of({"Car"}), features_of(1.0), reg);
    CHECK(d.model.model_id == "C:three");
  }
  SUBCASE("equal AP falls back to the lexicographically smaller id") {
    const ModelRegistry reg = parse_registry(
        "model B:one" + std::string(common) + " ap.Car=50\n" +
        "model A:two" + common + " ap.Car=50\n");
    CHECK(select(target_of({"Car"}), features_of(1.0), reg).model.model_id ==
          "A:two");
  }
  SUBCASE("published AP outranks absent AP") {
    const ModelRegistry reg = parse_registry(
        "model A:blank" + std::string(common) + "\n" +
        "model B:rated" + common + " ap.Car=1\n");
    CHECK(select(target_of({"Car"}), features_of(1.0), reg).model.model_id ==
          "B:rated");
  }
  SUBCASE("no models for the surviving methods") {
    MethodSelection sel;
    sel.methods.push_back(MethodFeatures{"Ghost", 1, StageUnit::voxel,
                                         StageUnit::none,
                                         BoxStrategy::anchor_based});
    try {
      select_model(sel, features_of(1.0), target_of({"Car"}),
                   kitti_registry());
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::no_candidate);
    }
  }
}
