#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ovg/config.hpp"
#include "ovg/eval.hpp"
#include "ovg/grasp.hpp"
#include "ovg/io.hpp"
#include "ovg/pipeline.hpp"

namespace ovg {

namespace fs = std::filesystem;

inline std::string resolve_output_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("OVG_OUTPUT_DIR"); env && *env) return env;
    return cfg.output_dir;
}

namespace detail {

inline void write_manifest(const std::string& dir, const std::string& stage,
                           const std::vector<std::string>& files, std::uint64_t seed) {
    std::vector<json> lines;
    lines.push_back(json{{"stage", stage}, {"seed", seed}, {"files", files.size()}});
    for (const std::string& f : files) {
        const std::string path = dir + "/" + f;
        lines.push_back(json{{"file", f},
                             {"hash", file_hash_hex(path)},
                             {"bytes", static_cast<std::uint64_t>(fs::file_size(path))}});
    }
    write_jsonl(dir + "/manifest_" + stage + ".jsonl", lines);
}

inline std::vector<SceneDescription> read_scene_file(const std::string& path) {
    std::vector<SceneDescription> out;
    for (const json& j : read_jsonl(path)) out.push_back(scene_from_json(j));
    return out;
}

inline std::vector<SceneDescription> require_scene_file(const std::string& dir,
                                                        const std::string& name) {
    const std::string path = dir + "/" + name;
    if (!fs::exists(path))
        throw IoError("missing " + path + "; run `ovg generate` with this config first");
    return read_scene_file(path);
}

inline double percent(double rate) { return 100.0 * rate; }

inline std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// generate: scene suites, sample depth/cloud exports, manifest
// ---------------------------------------------------------------------------

inline void run_generate(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = resolve_output_dir(cfg);
    fs::create_directories(dir);
    fs::create_directories(dir + "/samples");

    const SplitSpec split;
    const SceneSuites suites = build_suites(split, cfg.suite_spec(), cfg.seed, cfg.grid, cfg.camera);

    std::vector<std::string> files;
    const auto dump = [&](const std::vector<SceneDescription>& scenes, const std::string& name) {
        if (scenes.empty()) return;
        std::vector<json> lines;
        lines.reserve(scenes.size());
        for (const SceneDescription& s : scenes) lines.push_back(scene_to_json(s));
        write_jsonl(dir + "/" + name, lines);
        files.push_back(name);
    };
    dump(suites.grounding_base, "scenes_grounding_base.jsonl");
    dump(suites.grounding_novel, "scenes_grounding_novel.jsonl");
    dump(suites.grasp_base, "scenes_grasp_base.jsonl");
    dump(suites.grasp_novel, "scenes_grasp_novel.jsonl");
    dump(suites.task, "scenes_task.jsonl");

    // a few depth maps and target clouds so the binary formats are exercised
    // end to end; full suites are rendered on demand during `grasp`
    const auto export_samples = [&](const std::vector<SceneDescription>& scenes,
                                    const std::string& stem) {
        for (std::size_t i = 0; i < std::min(cfg.export_samples, scenes.size()); ++i) {
            const SceneDescription& s = scenes[i];
            char name[96];
            std::snprintf(name, sizeof name, "samples/%s_%04zu_depth.ovgm", stem.c_str(), i);
            save_matrix(render_depth(s), dir + "/" + name);
            files.push_back(name);
            std::snprintf(name, sizeof name, "samples/%s_%04zu_target.ply", stem.c_str(), i);
            save_ply(sample_point_cloud(s.target(), cfg.grasp.cloud_points,
                                        mix_seed(s.seed, 0x67726370u)),
                     dir + "/" + name);
            files.push_back(name);
        }
    };
    export_samples(suites.grasp_base, "grasp_base");
    export_samples(suites.grasp_novel, "grasp_novel");

    detail::write_manifest(dir, "generate", files, cfg.seed);
}

// ---------------------------------------------------------------------------
// ground: grounding records + per-split precision
// ---------------------------------------------------------------------------

inline void run_ground(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = resolve_output_dir(cfg);

    std::vector<std::string> files;
    std::vector<GroundingRecord> grounding_records;  // precision-bearing suites

    const auto ground_suite = [&](const std::string& scene_file, const std::string& out_file,
                                  std::vector<GroundingRecord>* collect, bool required) {
        if (!required && !fs::exists(dir + "/" + scene_file)) return;
        const std::vector<SceneDescription> scenes = detail::require_scene_file(dir, scene_file);
        std::vector<json> lines;
        lines.reserve(scenes.size());
        for (const SceneDescription& scene : scenes) {
            const GroundResult res = ground_scene(scene, cfg.pipeline);
            GroundingRecord rec{scene.id, scene.split, scene.description, res.predicted,
                                res.ground_truth};
            lines.push_back(grounding_record_to_json(rec));
            if (collect) collect->push_back(std::move(rec));
        }
        write_jsonl(dir + "/" + out_file, lines);
        files.push_back(out_file);
    };

    ground_suite("scenes_grounding_base.jsonl", "grounding_base.jsonl", &grounding_records, true);
    ground_suite("scenes_grounding_novel.jsonl", "grounding_novel.jsonl", &grounding_records, true);

    std::vector<GroundingRecord> grasp_records;
    ground_suite("scenes_grasp_base.jsonl", "grounding_grasp_base.jsonl", &grasp_records, true);
    ground_suite("scenes_grasp_novel.jsonl", "grounding_grasp_novel.jsonl", &grasp_records, true);
    ground_suite("scenes_task.jsonl", "grounding_task.jsonl", &grasp_records, false);

    const std::map<std::string, SplitPrecision> precision = precision_at_05(grounding_records);
    std::vector<json> metric_lines;
    for (const auto& [split_name, sp] : precision)
        metric_lines.push_back(json{{"metric", "precision_at_0.5"},
                                    {"split", split_name},
                                    {"hits", sp.hits},
                                    {"count", sp.count},
                                    {"precision", sp.precision()}});
    write_jsonl(dir + "/metrics_ground.jsonl", metric_lines);
    files.push_back("metrics_ground.jsonl");

    detail::write_manifest(dir, "ground", files, cfg.seed);
}

// ---------------------------------------------------------------------------
// grasp: attempt protocol over the grasp suites
// ---------------------------------------------------------------------------

inline void run_grasp(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = resolve_output_dir(cfg);

    std::vector<std::string> files;
    std::vector<GraspOutcome> split_outcomes;

    const auto grasp_suite = [&](const std::string& scene_file, const std::string& ground_file,
                                 const std::string& out_file, std::vector<GraspOutcome>* collect,
                                 bool required) {
        if (!required && !fs::exists(dir + "/" + scene_file)) return;
        const std::vector<SceneDescription> scenes = detail::require_scene_file(dir, scene_file);
        if (!fs::exists(dir + "/" + ground_file))
            throw IoError("missing " + dir + "/" + ground_file +
                          "; run `ovg ground` with this config first");
        std::map<std::string, GroundingRecord> by_id;
        for (const json& j : read_jsonl(dir + "/" + ground_file)) {
            GroundingRecord r = grounding_record_from_json(j);
            by_id.emplace(r.scene_id, std::move(r));
        }
        std::vector<json> lines;
        lines.reserve(scenes.size());
        for (const SceneDescription& scene : scenes) {
            const auto it = by_id.find(scene.id);
            if (it == by_id.end())
                throw IoError("no grounding record for scene " + scene.id + " in " + ground_file);
            GraspOutcome outcome = attempt_protocol(scene, it->second.predicted, cfg.grasp);
            lines.push_back(outcome_to_json(outcome));
            if (collect) collect->push_back(std::move(outcome));
        }
        write_jsonl(dir + "/" + out_file, lines);
        files.push_back(out_file);
    };

    grasp_suite("scenes_grasp_base.jsonl", "grounding_grasp_base.jsonl", "outcomes_base.jsonl",
                &split_outcomes, true);
    grasp_suite("scenes_grasp_novel.jsonl", "grounding_grasp_novel.jsonl", "outcomes_novel.jsonl",
                &split_outcomes, true);
    grasp_suite("scenes_task.jsonl", "grounding_task.jsonl", "outcomes_task.jsonl", nullptr, false);

    std::vector<json> metric_lines;
    for (const std::string split_name : {"base", "novel"}) {
        std::vector<GraspOutcome> subset;
        for (const GraspOutcome& o : split_outcomes)
            if (o.split == split_name) subset.push_back(o);
        if (subset.empty()) continue;
        const SuccessTable table = success_table(subset, cfg.grasp.max_attempts);
        for (int b = 1; b <= table.max_attempts; ++b)
            metric_lines.push_back(json{{"metric", "success_rate"},
                                        {"split", split_name},
                                        {"attempts", b},
                                        {"single", table.rate(b, SuccessTable::kSingle)},
                                        {"multi", table.rate(b, SuccessTable::kMulti)},
                                        {"total", table.rate(b, SuccessTable::kTotal)}});
    }
    write_jsonl(dir + "/metrics_grasp.jsonl", metric_lines);
    files.push_back("metrics_grasp.jsonl");

    detail::write_manifest(dir, "grasp", files, cfg.seed);
}

// ---------------------------------------------------------------------------
// ablate: the four-row module toggle table
// ---------------------------------------------------------------------------

inline void run_ablate(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = resolve_output_dir(cfg);

    std::vector<SceneDescription> scenes =
        detail::require_scene_file(dir, "scenes_grounding_base.jsonl");
    const std::vector<SceneDescription> novel =
        detail::require_scene_file(dir, "scenes_grounding_novel.jsonl");
    scenes.insert(scenes.end(), novel.begin(), novel.end());

    const std::vector<AblationRow> rows = ablation_table(scenes, cfg.pipeline);
    std::vector<json> lines;
    for (const AblationRow& row : rows) {
        json j{{"igla", row.igla}, {"lgia", row.lgia}};
        for (const auto& [split_name, sp] : row.per_split) {
            j[split_name + "_hits"] = sp.hits;
            j[split_name + "_count"] = sp.count;
            j[split_name + "_precision"] = sp.precision();
        }
        lines.push_back(std::move(j));
    }
    write_jsonl(dir + "/ablation.jsonl", lines);
    detail::write_manifest(dir, "ablate", {"ablation.jsonl"}, cfg.seed);
}

// ---------------------------------------------------------------------------
// report: human-readable tables + invariant re-checks
// ---------------------------------------------------------------------------

/// Rebuilds every metric from the raw JSONL records and cross-checks the
/// values the earlier stages reported. Returns false (and still writes the
/// report) when an invariant fails, so CI can gate on the exit code.
inline bool run_report(const RunConfig& cfg) {
    cfg.validate();
    const std::string dir = resolve_output_dir(cfg);
    bool ok = true;
    std::string problems;

    // precision recount from the raw grounding records
    std::vector<GroundingRecord> records;
    for (const std::string name : {"grounding_base.jsonl", "grounding_novel.jsonl"}) {
        if (!fs::exists(dir + "/" + name))
            throw IoError("missing " + dir + "/" + name + "; run `ovg ground` first");
        for (const json& j : read_jsonl(dir + "/" + name))
            records.push_back(grounding_record_from_json(j));
    }
    const std::map<std::string, SplitPrecision> recount = precision_at_05(records);

    for (const json& j : read_jsonl(dir + "/metrics_ground.jsonl")) {
        const std::string split_name = j.at("split").get<std::string>();
        const auto it = recount.find(split_name);
        if (it == recount.end() || it->second.hits != j.at("hits").get<std::size_t>() ||
            it->second.count != j.at("count").get<std::size_t>()) {
            ok = false;
            problems += "precision recount mismatch for split " + split_name + "\n";
        }
    }

    // success tables recomputed from outcomes
    std::map<std::string, SuccessTable> tables;
    for (const std::string split_name : {"base", "novel"}) {
        const std::string name = dir + "/outcomes_" + split_name + ".jsonl";
        if (!fs::exists(name)) throw IoError("missing " + name + "; run `ovg grasp` first");
        std::vector<GraspOutcome> outcomes;
        for (const json& j : read_jsonl(name)) outcomes.push_back(outcome_from_json(j));
        if (outcomes.empty()) continue;
        SuccessTable table = success_table(outcomes, cfg.grasp.max_attempts);
        if (!table.monotone()) {
            ok = false;
            problems += "success table not monotone for split " + split_name + "\n";
        }
        tables.emplace(split_name, std::move(table));
    }

    // assemble the markdown report
    std::string md = "# Evaluation report\n\n## Grounding precision@0.5\n\n"
                     "| split | precision | hits | scenes |\n|---|---|---|---|\n";
    for (const auto& [split_name, sp] : recount)
        md += "| " + split_name + " | " + detail::fmt1(detail::percent(sp.precision())) + " | " +
              std::to_string(sp.hits) + " | " + std::to_string(sp.count) + " |\n";

    for (const auto& [split_name, table] : tables) {
        md += "\n## Grasp success rate, " + split_name +
              " (cumulative %)\n\n| attempts | single | multi | total |\n|---|---|---|---|\n";
        for (int b = 1; b <= table.max_attempts; ++b)
            md += "| " + std::to_string(b) + " | " +
                  detail::fmt1(detail::percent(table.rate(b, SuccessTable::kSingle))) + " | " +
                  detail::fmt1(detail::percent(table.rate(b, SuccessTable::kMulti))) + " | " +
                  detail::fmt1(detail::percent(table.rate(b, SuccessTable::kTotal))) + " |\n";
    }

    if (fs::exists(dir + "/ablation.jsonl")) {
        md += "\n## Ablation (precision@0.5, %)\n\n| igla | lgia | base | novel |\n|---|---|---|---|\n";
        for (const json& j : read_jsonl(dir + "/ablation.jsonl")) {
            md += std::string("| ") + (j.at("igla").get<bool>() ? "on" : "off") + " | " +
                  (j.at("lgia").get<bool>() ? "on" : "off") + " | " +
                  detail::fmt1(detail::percent(j.value("base_precision", 0.0))) + " | " +
                  detail::fmt1(detail::percent(j.value("novel_precision", 0.0))) + " |\n";
        }
    }

    if (fs::exists(dir + "/outcomes_task.jsonl")) {
        std::map<std::string, std::pair<int, int>> per_class;  // class -> (successes, total)
        std::map<std::string, SceneDescription> scene_by_id;
        for (const SceneDescription& s : detail::read_scene_file(dir + "/scenes_task.jsonl"))
            scene_by_id.emplace(s.id, s);
        for (const json& j : read_jsonl(dir + "/outcomes_task.jsonl")) {
            const GraspOutcome o = outcome_from_json(j);
            const auto it = scene_by_id.find(o.scene_id);
            if (it == scene_by_id.end()) continue;
            auto& [hits, total] = per_class[it->second.target().class_name];
            ++total;
            if (o.success) ++hits;
        }
        md += "\n## Task suites\n\n| object | success |\n|---|---|\n";
        for (const auto& [cls, counts] : per_class)
            md += "| " + cls + " | " + std::to_string(counts.first) + "/" +
                  std::to_string(counts.second) + " |\n";
    }

    if (!ok) md += "\n## Invariant violations\n\n```\n" + problems + "```\n";

    std::ofstream f(dir + "/report.md", std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + dir + "/report.md");
    f << md;
    f.close();

    detail::write_manifest(dir, "report", {"report.md"}, cfg.seed);
    return ok;
}

}  // namespace ovg
