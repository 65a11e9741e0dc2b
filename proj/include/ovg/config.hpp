#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ovg/core.hpp"
#include "ovg/eval.hpp"
#include "ovg/geom.hpp"
#include "ovg/grasp.hpp"
#include "ovg/pipeline.hpp"
#include "ovg/scene.hpp"

namespace ovg {

/// One file drives every command. All knobs round-trip losslessly through
/// JSON; `config init` writes the annotated default.
struct RunConfig {
    std::uint64_t seed = 42;
    std::string output_dir = "out";

    PipelineConfig pipeline;
    GridGeometry grid;
    Camera camera;
    SceneGenOptions grounding_opts;
    SceneGenOptions grasp_opts;
    GraspProtocolConfig grasp;
    SuiteSpec suites;
    std::size_t export_samples = 2;  // depth/cloud exports per grasp suite

    SuiteSpec suite_spec() const {
        SuiteSpec s = suites;
        s.grounding_opts = grounding_opts;
        s.grasp_opts = grasp_opts;
        return s;
    }

    void validate() const {
        pipeline.align.validate();
        camera.validate();
        grasp.gripper.validate();
        if (pipeline.query_count < 1) throw ConfigError("query_count must be >= 1");
        if (grasp.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
        if (output_dir.empty()) throw ConfigError("output_dir must be nonempty");
    }
};

inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
    using json = nlohmann::ordered_json;
    return json{
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"alignment",
         {{"alpha", c.pipeline.align.alpha},
          {"lambda", c.pipeline.align.lambda},
          {"beta", c.pipeline.align.beta},
          {"theta", c.pipeline.align.theta},
          {"proj_dim", c.pipeline.align.proj_dim},
          {"num_heads", c.pipeline.num_heads},
          {"weight_seed", c.pipeline.weight_seed}}},
        {"grounding",
         {{"query_count", c.pipeline.query_count},
          {"noise_sigma", c.pipeline.noise_sigma},
          {"feature_dim", c.pipeline.feature_dim}}},
        {"world",
         {{"grid_rows", c.grid.grid_rows},
          {"grid_cols", c.grid.grid_cols},
          {"image_w", c.grid.image_w},
          {"image_h", c.grid.image_h},
          {"fx", c.camera.fx},
          {"fy", c.camera.fy},
          {"cx", c.camera.cx},
          {"cy", c.camera.cy},
          {"camera_height_m", c.camera.height_m},
          {"objects_per_scene", c.grounding_opts.n_objects},
          {"min_size_m", c.grounding_opts.min_size_m},
          {"max_size_m", c.grounding_opts.max_size_m},
          {"relation_clause_prob", c.grounding_opts.relation_clause_prob}}},
        {"grasp",
         {{"max_attempts", c.grasp.max_attempts},
          {"min_score", c.grasp.min_score},
          {"max_tilt_deg", c.grasp.max_tilt_deg},
          {"friction", c.grasp.gripper.friction_coefficient},
          {"max_width_m", c.grasp.gripper.max_width_m},
          {"finger_depth_m", c.grasp.gripper.finger_depth_m},
          {"contact_tol_m", c.grasp.closure.contact_tol_m},
          {"min_sweep_points", c.grasp.closure.min_sweep_points},
          {"sweep_half_extent_m", c.grasp.closure.sweep_half_extent_m},
          {"clearance_m", c.grasp.clearance_m},
          {"cloud_points", c.grasp.cloud_points},
          {"candidate_count", c.grasp.candidate_count}}},
        {"suites",
         {{"grounding_per_split", c.suites.grounding_per_split},
          {"grasp_per_split", c.suites.grasp_per_split},
          {"task_classes", c.suites.task_classes},
          {"scenes_per_task", c.suites.scenes_per_task},
          {"export_samples", c.export_samples}}}};
}

inline RunConfig config_from_json(const nlohmann::ordered_json& j) {
    RunConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output_dir = j.at("output_dir").get<std::string>();

    const auto& a = j.at("alignment");
    c.pipeline.align.alpha = a.at("alpha").get<double>();
    c.pipeline.align.lambda = a.at("lambda").get<double>();
    c.pipeline.align.beta = a.at("beta").get<double>();
    c.pipeline.align.theta = a.at("theta").get<double>();
    c.pipeline.align.proj_dim = a.at("proj_dim").get<std::size_t>();
    c.pipeline.num_heads = a.at("num_heads").get<std::size_t>();
    c.pipeline.weight_seed = a.at("weight_seed").get<std::uint64_t>();

    const auto& g = j.at("grounding");
    c.pipeline.query_count = g.at("query_count").get<std::size_t>();
    c.pipeline.noise_sigma = g.at("noise_sigma").get<double>();
    c.pipeline.feature_dim = g.at("feature_dim").get<std::size_t>();

    const auto& w = j.at("world");
    c.grid.grid_rows = w.at("grid_rows").get<int>();
    c.grid.grid_cols = w.at("grid_cols").get<int>();
    c.grid.image_w = w.at("image_w").get<int>();
    c.grid.image_h = w.at("image_h").get<int>();
    c.camera.fx = w.at("fx").get<double>();
    c.camera.fy = w.at("fy").get<double>();
    c.camera.cx = w.at("cx").get<double>();
    c.camera.cy = w.at("cy").get<double>();
    c.camera.height_m = w.at("camera_height_m").get<double>();
    c.grounding_opts.n_objects = w.at("objects_per_scene").get<int>();
    c.grounding_opts.min_size_m = w.at("min_size_m").get<double>();
    c.grounding_opts.max_size_m = w.at("max_size_m").get<double>();
    c.grounding_opts.relation_clause_prob = w.at("relation_clause_prob").get<double>();
    c.grasp_opts = c.grounding_opts;
    c.grasp_opts.relation_clause_prob = 0.0;

    const auto& gr = j.at("grasp");
    c.grasp.max_attempts = gr.at("max_attempts").get<int>();
    c.grasp.min_score = gr.at("min_score").get<double>();
    c.grasp.max_tilt_deg = gr.at("max_tilt_deg").get<double>();
    c.grasp.gripper.friction_coefficient = gr.at("friction").get<double>();
    c.grasp.gripper.max_width_m = gr.at("max_width_m").get<double>();
    c.grasp.gripper.finger_depth_m = gr.at("finger_depth_m").get<double>();
    c.grasp.closure.contact_tol_m = gr.at("contact_tol_m").get<double>();
    c.grasp.closure.min_sweep_points = gr.at("min_sweep_points").get<int>();
    c.grasp.closure.sweep_half_extent_m = gr.at("sweep_half_extent_m").get<double>();
    c.grasp.clearance_m = gr.at("clearance_m").get<double>();
    c.grasp.cloud_points = gr.at("cloud_points").get<std::size_t>();
    c.grasp.candidate_count = gr.at("candidate_count").get<std::size_t>();

    const auto& s = j.at("suites");
    c.suites.grounding_per_split = s.at("grounding_per_split").get<std::size_t>();
    c.suites.grasp_per_split = s.at("grasp_per_split").get<std::size_t>();
    c.suites.task_classes = s.at("task_classes").get<std::vector<std::string>>();
    c.suites.scenes_per_task = s.at("scenes_per_task").get<std::size_t>();
    c.export_samples = s.at("export_samples").get<std::size_t>();

    c.validate();
    return c;
}

/// The annotated default emitted by `config init`. Comments survive loading:
/// the parser strips them.
inline std::string default_config_text() {
    return R"({
  // master seed; every generator below derives its stream from it
  "seed": 42,
  // all artifacts land here (override with OVG_OUTPUT_DIR)
  "output_dir": "out",
  "alignment": {
    // residual blend of image-attended text features into the text branch
    "alpha": 0.5,
    // balance between constrained and raw image features
    "lambda": 0.6,
    // constraint score amplitude (its exact value at a perfect match)
    "beta": 1.0,
    // constraint score bandwidth
    "theta": 0.5,
    // shared projection space for the cross-modal cosine
    "proj_dim": 32,
    // attention heads in the text-image fusion stage
    "num_heads": 1,
    // seed of the fixed projection weights
    "weight_seed": 20240512
  },
  "grounding": {
    // decoder queries kept after language-guided selection
    "query_count": 32,
    // per-component gaussian noise on synthetic features
    "noise_sigma": 0.05,
    // dimension of image-cell and token embeddings
    "feature_dim": 32
  },
  "world": {
    "grid_rows": 12,
    "grid_cols": 16,
    "image_w": 640,
    "image_h": 480,
    "fx": 580.0,
    "fy": 580.0,
    "cx": 320.0,
    "cy": 240.0,
    "camera_height_m": 1.4,
    "objects_per_scene": 8,
    "min_size_m": 0.03,
    "max_size_m": 0.07,
    // chance of a relative-object clause when none is needed to disambiguate
    "relation_clause_prob": 0.0
  },
  "grasp": {
    // grasp tries per scene before it is marked failed
    "max_attempts": 3,
    // candidate filter: minimum antipodal quality score
    "min_score": 0.3,
    // candidate filter: maximum approach tilt from vertical, degrees
    "max_tilt_deg": 45.0,
    "friction": 0.4,
    // jaw span of the modeled parallel gripper
    "max_width_m": 0.085,
    "finger_depth_m": 0.04,
    "contact_tol_m": 0.003,
    "min_sweep_points": 20,
    "sweep_half_extent_m": 0.01,
    "clearance_m": 0.005,
    "cloud_points": 2048,
    "candidate_count": 64
  },
  "suites": {
    "grounding_per_split": 500,
    "grasp_per_split": 100,
    // optional per-object suites, e.g. ["apple", "power_drill"]
    "task_classes": [],
    "scenes_per_task": 10,
    // depth/cloud sample exports per grasp suite
    "export_samples": 2
  }
})";
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(f, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config " + path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + " missing or mistyped field: " + e.what());
    }
}

inline void save_config(const RunConfig& c, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << config_to_json(c).dump(2) << "\n";
}

}  // namespace ovg
