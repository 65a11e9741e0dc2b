#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovg/core.hpp"
#include "ovg/eval.hpp"
#include "ovg/geom.hpp"
#include "ovg/grasp.hpp"
#include "ovg/scene.hpp"

namespace ovg {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON encodings. Field order is fixed so reruns are byte-identical.
// ---------------------------------------------------------------------------

inline json box_to_json(const Box& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

inline Box box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw IoError("box must be a 4-element array");
    return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline json scene_to_json(const SceneDescription& s) {
    json objects = json::array();
    for (const SceneObject& o : s.objects) {
        objects.push_back({{"class", o.class_name},
                           {"color", color_names()[o.color]},
                           {"shape", shape_word(o.shape)},
                           {"size_m", o.size_m},
                           {"cell", {o.grid_row, o.grid_col}},
                           {"pos", {o.world_pos[0], o.world_pos[1], o.world_pos[2]}},
                           {"novel", o.is_novel}});
    }
    json j{{"scene_id", s.id},
           {"split", s.split},
           {"tag", s.tag},
           {"seed", s.seed},
           {"objects", std::move(objects)},
           {"target_index", s.target_index},
           {"relative_index", s.relative_index},
           {"description", s.description},
           {"gt_box", box_to_json(s.target_box())},
           {"image", {s.grid.image_w, s.grid.image_h}},
           {"grid", {s.grid.grid_rows, s.grid.grid_cols}},
           {"camera",
            {{"fx", s.camera.fx},
             {"fy", s.camera.fy},
             {"cx", s.camera.cx},
             {"cy", s.camera.cy},
             {"height_m", s.camera.height_m}}}};
    return j;
}

inline SceneDescription scene_from_json(const json& j) {
    SceneDescription s;
    s.id = j.at("scene_id").get<std::string>();
    s.split = j.at("split").get<std::string>();
    s.tag = j.at("tag").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.target_index = j.at("target_index").get<int>();
    s.relative_index = j.at("relative_index").get<int>();
    s.description = j.at("description").get<std::string>();
    s.grid.image_w = j.at("image")[0].get<int>();
    s.grid.image_h = j.at("image")[1].get<int>();
    s.grid.grid_rows = j.at("grid")[0].get<int>();
    s.grid.grid_cols = j.at("grid")[1].get<int>();
    const json& cam = j.at("camera");
    s.camera.fx = cam.at("fx").get<double>();
    s.camera.fy = cam.at("fy").get<double>();
    s.camera.cx = cam.at("cx").get<double>();
    s.camera.cy = cam.at("cy").get<double>();
    s.camera.height_m = cam.at("height_m").get<double>();

    const auto& colors = color_names();
    const auto& shapes = shape_words();
    for (const json& oj : j.at("objects")) {
        SceneObject o;
        o.class_name = oj.at("class").get<std::string>();
        const std::string color = oj.at("color").get<std::string>();
        const std::string shape = oj.at("shape").get<std::string>();
        o.color = static_cast<int>(std::find(colors.begin(), colors.end(), color) - colors.begin());
        if (o.color == static_cast<int>(colors.size())) throw IoError("unknown color " + color);
        const auto sit = std::find(shapes.begin(), shapes.end(), shape);
        if (sit == shapes.end()) throw IoError("unknown shape " + shape);
        o.shape = static_cast<Shape>(sit - shapes.begin());
        o.size_m = oj.at("size_m").get<double>();
        o.grid_row = oj.at("cell")[0].get<int>();
        o.grid_col = oj.at("cell")[1].get<int>();
        o.world_pos = {oj.at("pos")[0].get<double>(), oj.at("pos")[1].get<double>(),
                       oj.at("pos")[2].get<double>()};
        o.is_novel = oj.at("novel").get<bool>();
        s.objects.push_back(std::move(o));
    }
    return s;
}

inline json grounding_record_to_json(const GroundingRecord& r) {
    return json{{"scene_id", r.scene_id},
                {"split", r.split},
                {"description", r.description},
                {"box", box_to_json(r.predicted.box)},
                {"score", r.predicted.score},
                {"gt_box", box_to_json(r.ground_truth)}};
}

inline GroundingRecord grounding_record_from_json(const json& j) {
    GroundingRecord r;
    r.scene_id = j.at("scene_id").get<std::string>();
    r.split = j.at("split").get<std::string>();
    r.description = j.at("description").get<std::string>();
    r.predicted.box = box_from_json(j.at("box"));
    r.predicted.score = j.at("score").get<double>();
    r.ground_truth = box_from_json(j.at("gt_box"));
    return r;
}

inline json outcome_to_json(const GraspOutcome& o) {
    return json{{"scene_id", o.scene_id},
                {"split", o.split},
                {"single_or_multi", o.tag},
                {"attempts_used", o.attempts_used},
                {"success", o.success},
                {"grasped_target", o.grasped_target},
                {"grasped_object", o.grasped_object},
                {"failure", o.failure}};
}

inline GraspOutcome outcome_from_json(const json& j) {
    GraspOutcome o;
    o.scene_id = j.at("scene_id").get<std::string>();
    o.split = j.at("split").get<std::string>();
    o.tag = j.at("single_or_multi").get<std::string>();
    o.attempts_used = j.at("attempts_used").get<int>();
    o.success = j.at("success").get<bool>();
    o.grasped_target = j.at("grasped_target").get<bool>();
    o.grasped_object = j.at("grasped_object").get<int>();
    o.failure = j.at("failure").get<std::string>();
    return o;
}

// ---------------------------------------------------------------------------
// JSONL files
// ---------------------------------------------------------------------------

inline void write_jsonl(const std::string& path, const std::vector<json>& lines) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    for (const json& j : lines) f << j.dump() << "\n";
    if (!f) throw IoError("write failed: " + path);
}

inline std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for read: " + path);
    std::vector<json> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line));
    }
    return out;
}

// ---------------------------------------------------------------------------
// ASCII PLY point clouds
// ---------------------------------------------------------------------------

inline void save_ply(const PointCloud& cloud, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    const bool normals = cloud.has_normals();
    f << "ply\nformat ascii 1.0\nelement vertex " << cloud.points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
    if (normals) f << "property double nx\nproperty double ny\nproperty double nz\n";
    f << "end_header\n";
    char buf[160];
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        if (normals) {
            const Vec3& n = cloud.normals[i];
            std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g %.9g %.9g\n", p[0], p[1], p[2],
                          n[0], n[1], n[2]);
        } else {
            std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p[0], p[1], p[2]);
        }
        f << buf;
    }
    if (!f) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Manifest hashing
// ---------------------------------------------------------------------------

inline std::string file_hash_hex(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for read: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 14];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) {
        const std::streamsize got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!f) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace ovg
