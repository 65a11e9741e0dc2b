#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ovg/core.hpp"
#include "ovg/grasp.hpp"
#include "ovg/grounding.hpp"
#include "ovg/pipeline.hpp"
#include "ovg/scene.hpp"

namespace ovg {

struct GroundingRecord {
    std::string scene_id;
    std::string split;  // "base" | "novel"
    std::string description;
    ScoredBox predicted;
    Box ground_truth;
};

struct SplitPrecision {
    std::size_t hits = 0;
    std::size_t count = 0;
    double precision() const { return count == 0 ? 0.0 : static_cast<double>(hits) / count; }
};

/// precision@0.5 per split: a record counts as a hit only when its IoU
/// strictly exceeds 0.5. Splits with no records simply do not appear.
inline std::map<std::string, SplitPrecision> precision_at_05(
    const std::vector<GroundingRecord>& records) {
    if (records.empty()) throw ParamError("precision_at_05: no records");
    std::map<std::string, SplitPrecision> out;
    for (const GroundingRecord& r : records) {
        SplitPrecision& sp = out[r.split];
        ++sp.count;
        if (iou(r.predicted.box, r.ground_truth) > 0.5) ++sp.hits;
    }
    return out;
}

/// Cumulative success rates by attempt budget (rows) and scenario (columns
/// single / multi / total). Rates are non-decreasing in the budget because a
/// success within k attempts is a success within k+1.
struct SuccessTable {
    int max_attempts = 3;
    std::vector<std::array<std::size_t, 3>> successes;  // [budget-1][column]
    std::array<std::size_t, 3> totals{0, 0, 0};

    static constexpr int kSingle = 0, kMulti = 1, kTotal = 2;

    double rate(int budget, int column) const {
        if (totals[column] == 0) return 0.0;
        return static_cast<double>(successes[budget - 1][column]) / totals[column];
    }

    bool monotone() const {
        for (int col = 0; col < 3; ++col)
            for (int b = 2; b <= max_attempts; ++b)
                if (rate(b, col) + 1e-12 < rate(b - 1, col)) return false;
        return true;
    }
};

inline SuccessTable success_table(const std::vector<GraspOutcome>& outcomes, int max_attempts = 3) {
    SuccessTable table;
    table.max_attempts = max_attempts;
    table.successes.assign(max_attempts, {0, 0, 0});
    for (const GraspOutcome& o : outcomes) {
        const int col = o.tag == "multi" ? SuccessTable::kMulti : SuccessTable::kSingle;
        ++table.totals[col];
        ++table.totals[SuccessTable::kTotal];
        if (!o.success) continue;
        for (int b = o.attempts_used; b <= max_attempts; ++b) {
            ++table.successes[b - 1][col];
            ++table.successes[b - 1][SuccessTable::kTotal];
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

struct SuiteSpec {
    std::size_t grounding_per_split = 500;
    std::size_t grasp_per_split = 100;  // half single-grasp, half multi-grasp
    SceneGenOptions grounding_opts;
    SceneGenOptions grasp_opts;
    std::vector<std::string> task_classes;  // optional per-object suites
    std::size_t scenes_per_task = 10;
};

struct SceneSuites {
    std::vector<SceneDescription> grounding_base;
    std::vector<SceneDescription> grounding_novel;
    std::vector<SceneDescription> grasp_base;
    std::vector<SceneDescription> grasp_novel;
    std::vector<SceneDescription> task;

    std::vector<const std::vector<SceneDescription>*> all() const {
        return {&grounding_base, &grounding_novel, &grasp_base, &grasp_novel, &task};
    }
};

namespace detail {

inline std::string suite_scene_id(const std::string& suite, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu", index);
    return suite + "/" + buf;
}

}  // namespace detail

/// Generates the disjoint evaluation suites: grounding scenes per split,
/// grasp scenes per split (first half single, second half with an identical
/// pair), plus optional fixed-class task scenes.
inline SceneSuites build_suites(const SplitSpec& split, const SuiteSpec& spec, std::uint64_t seed,
                                const GridGeometry& grid = GridGeometry{},
                                const Camera& camera = Camera{}) {
    split.validate();
    SceneSuites suites;

    const auto fill = [&](std::vector<SceneDescription>& out, const std::string& suite_name,
                          const std::string& split_name, std::size_t count,
                          const SceneGenOptions& opts, std::uint64_t salt) {
        out.reserve(out.size() + count);
        for (std::size_t i = 0; i < count; ++i) {
            SceneDescription scene = generate_scene(mix_seed(seed, mix_seed(salt, i)), split,
                                                    split_name, opts, grid, camera);
            scene.id = detail::suite_scene_id(suite_name, out.size());
            scene.tag = opts.identical_pair ? "multi" : "single";
            out.push_back(std::move(scene));
        }
    };

    fill(suites.grounding_base, "grounding_base", "base", spec.grounding_per_split,
         spec.grounding_opts, 0xb15e5u);
    fill(suites.grounding_novel, "grounding_novel", "novel", spec.grounding_per_split,
         spec.grounding_opts, 0x0701e5u);

    SceneGenOptions single = spec.grasp_opts;
    single.identical_pair = false;
    SceneGenOptions multi = spec.grasp_opts;
    multi.identical_pair = true;
    const std::size_t half = spec.grasp_per_split / 2;
    fill(suites.grasp_base, "grasp_base", "base", spec.grasp_per_split - half, single, 0x6b0501u);
    fill(suites.grasp_base, "grasp_base", "base", half, multi, 0x6b0502u);
    fill(suites.grasp_novel, "grasp_novel", "novel", spec.grasp_per_split - half, single, 0x6b0503u);
    fill(suites.grasp_novel, "grasp_novel", "novel", half, multi, 0x6b0504u);

    std::unordered_set<std::string> novel_set(split.novel_classes.begin(), split.novel_classes.end());
    for (std::size_t t = 0; t < spec.task_classes.size(); ++t) {
        SceneGenOptions opts = spec.grasp_opts;
        opts.identical_pair = false;
        opts.force_target_class = spec.task_classes[t];
        const std::string split_name = novel_set.count(spec.task_classes[t]) ? "novel" : "base";
        fill(suites.task, "task", split_name, spec.scenes_per_task, opts, 0x7461736bu + t);
    }
    return suites;
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

struct AblationRow {
    bool igla = false;
    bool lgia = false;
    std::map<std::string, SplitPrecision> per_split;
};

/// One grounding sweep with the two alignment stages toggled as requested.
inline AblationRow ablation_run(bool igla_on, bool lgia_on,
                                const std::vector<SceneDescription>& scenes,
                                const PipelineConfig& base_cfg) {
    if (scenes.empty()) throw ParamError("ablation_run: empty suite");
    PipelineConfig cfg = base_cfg;
    cfg.use_igla = igla_on;
    cfg.use_lgia = lgia_on;

    std::vector<GroundingRecord> records;
    records.reserve(scenes.size());
    for (const SceneDescription& scene : scenes) {
        const GroundResult res = ground_scene(scene, cfg);
        records.push_back({scene.id, scene.split, scene.description, res.predicted, res.ground_truth});
    }
    AblationRow row;
    row.igla = igla_on;
    row.lgia = lgia_on;
    row.per_split = precision_at_05(records);
    return row;
}

/// The four-row table: each stage independently off/on.
inline std::vector<AblationRow> ablation_table(const std::vector<SceneDescription>& scenes,
                                               const PipelineConfig& cfg) {
    std::vector<AblationRow> rows;
    for (const auto& [igla_on, lgia_on] :
         {std::pair{false, false}, std::pair{true, false}, std::pair{false, true}, std::pair{true, true}})
        rows.push_back(ablation_run(igla_on, lgia_on, scenes, cfg));
    return rows;
}

}  // namespace ovg
