// Acceptance suite: one self-contained check per release gate, each printing
// a single PASS/FAIL line. Exits nonzero if any gate fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ovg/commands.hpp"
#include "ovg/config.hpp"
#include "ovg/eval.hpp"
#include "ovg/grasp.hpp"
#include "ovg/io.hpp"
#include "ovg/pipeline.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// gate 1: analytic constraint-score gradients vs central finite differences,
// plus bit-consistency of the peak value
void gate_alignment_gradients() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string why;

    ovg::Rng rng(101);
    std::vector<double> t(8, 0.0);
    t[0] = 1.0;
    const double h = 1e-6;
    double worst = 0.0;
    for (int it = 0; it < 100 && ok; ++it) {
        const double dot_v = rng.uniform(-0.9, 0.9);
        const double beta = rng.uniform(0.2, 2.0);
        const double theta = rng.uniform(0.3, 1.5);

        ovg::Matrix row(1, 8);
        const double s = std::sqrt(std::max(0.0, 1.0 - dot_v * dot_v));
        row(0, 0) = dot_v;
        row(0, 1) = s;

        const auto [d_beta, d_theta] = ovg::constraint_score_grad(row, t, beta, theta);
        const double fd_beta = (ovg::constraint_score(row, t, beta + h, theta).scores[0] -
                                ovg::constraint_score(row, t, beta - h, theta).scores[0]) /
                               (2.0 * h);
        const double fd_theta = (ovg::constraint_score(row, t, beta, theta + h).scores[0] -
                                 ovg::constraint_score(row, t, beta, theta - h).scores[0]) /
                                (2.0 * h);
        const double rel_b = std::abs(d_beta[0] - fd_beta) / std::max(1e-12, std::abs(fd_beta));
        const double rel_t = std::abs(d_theta[0] - fd_theta) / std::max(1e-12, std::abs(fd_theta));
        worst = std::max({worst, rel_b, rel_t});
        if (rel_b > 1e-5 || rel_t > 1e-5) {
            ok = false;
            why = "gradient mismatch at config " + std::to_string(it);
        }
    }

    // peak: dot = 1 must return beta itself, bitwise
    for (double beta : {0.3, 1.0, 1.7}) {
        ovg::Matrix row(1, 8);
        row(0, 0) = 1.0;
        if (ovg::constraint_score(row, t, beta, 0.5).scores[0] != beta) {
            ok = false;
            why = "score at perfect match is not bit-equal to beta";
        }
    }

    const double dt = seconds_since(t0);
    if (ok && dt >= 1.0) {
        ok = false;
        why = "runtime budget exceeded";
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "100 configs, worst rel err %.2e, %.3fs", worst, dt);
    report("alignment gradcheck", ok, ok ? buf : why);
}

// gate 2: attention vs the naive scaled-dot oracle, softmax row sums,
// key/value permutation invariance
void gate_attention_oracle() {
    bool ok = true;
    std::string why;
    ovg::Rng rng(102);
    double worst = 0.0;

    for (int it = 0; it < 50 && ok; ++it) {
        const std::size_t dim = 2 * (1 + rng.below(8));
        const std::size_t nq = 1 + rng.below(9), nk = 1 + rng.below(9);
        const auto cfg = ovg::AttentionConfig::standard(1, dim);
        const ovg::Matrix q = oracle::random_matrix(rng, nq, dim);
        const ovg::Matrix k = oracle::random_matrix(rng, nk, dim);
        const ovg::Matrix v = oracle::random_matrix(rng, nk, dim);

        const ovg::Matrix got = multi_head_attention(q, k, v, cfg);
        const ovg::Matrix want = oracle::scaled_dot_attention(q, k, v, cfg.scale);
        for (std::size_t i = 0; i < got.data.size(); ++i) {
            worst = std::max(worst, std::abs(got.data[i] - want.data[i]));
            if (std::abs(got.data[i] - want.data[i]) >= 1e-10) {
                ok = false;
                why = "oracle mismatch on shape " + std::to_string(it);
            }
        }
    }

    for (int it = 0; it < 20 && ok; ++it) {
        const ovg::Matrix m = oracle::random_matrix(rng, 1 + rng.below(8), 1 + rng.below(8), -50, 50);
        const ovg::Matrix s = row_softmax(m);
        for (std::size_t i = 0; i < s.rows; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < s.cols; ++j) sum += s(i, j);
            if (std::abs(sum - 1.0) >= 1e-9) {
                ok = false;
                why = "softmax row sum off";
            }
        }
    }

    for (int it = 0; it < 20 && ok; ++it) {
        const auto cfg = ovg::AttentionConfig::standard(1, 8);
        const ovg::Matrix q = oracle::random_matrix(rng, 4, 8);
        const ovg::Matrix k = oracle::random_matrix(rng, 4, 8);
        const ovg::Matrix v = oracle::random_matrix(rng, 4, 8);
        std::size_t perm[4] = {3, 1, 0, 2};
        ovg::Matrix kp(4, 8), vp(4, 8);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 8; ++j) {
                kp(i, j) = k(perm[i], j);
                vp(i, j) = v(perm[i], j);
            }
        const ovg::Matrix a = multi_head_attention(q, k, v, cfg);
        const ovg::Matrix b = multi_head_attention(q, kp, vp, cfg);
        for (std::size_t i = 0; i < a.data.size(); ++i)
            if (std::abs(a.data[i] - b.data[i]) >= 1e-10) {
                ok = false;
                why = "permutation variance";
            }
    }

    char buf[128];
    std::snprintf(buf, sizeof buf, "50 shapes, worst oracle gap %.2e", worst);
    report("attention oracle", ok, ok ? buf : why);
}

// gate 3: analytic IoU vs integer rasterization; strict > 0.5 at the boundary
void gate_iou_oracle() {
    bool ok = true;
    std::string why;
    ovg::Rng rng(103);
    double worst = 0.0;
    for (int it = 0; it < 200 && ok; ++it) {
        const auto make = [&]() {
            const int x0 = static_cast<int>(rng.below(40));
            const int y0 = static_cast<int>(rng.below(40));
            return ovg::Box{static_cast<double>(x0), static_cast<double>(y0),
                            static_cast<double>(x0 + 1 + rng.below(24)),
                            static_cast<double>(y0 + 1 + rng.below(24))};
        };
        const ovg::Box a = make(), b = make();
        const double gap = std::abs(ovg::iou(a, b) - oracle::rasterized_iou(a, b, 64, 64));
        worst = std::max(worst, gap);
        if (gap >= 1e-9) {
            ok = false;
            why = "rasterization mismatch";
        }
    }

    // equal 3x1 boxes overlapping by 2 give IoU = 0.5 exactly: a miss
    const ovg::Box a{0, 0, 3, 1}, b{1, 0, 4, 1};
    ovg::GroundingRecord boundary{"b/0", "base", "d", {a, 0.9}, b};
    if (ovg::iou(a, b) != 0.5 || ovg::precision_at_05({boundary}).at("base").hits != 0) {
        ok = false;
        why = "strictness at the 0.5 boundary violated";
    }

    char buf[128];
    std::snprintf(buf, sizeof buf, "200 pairs, worst gap %.2e, boundary strict", worst);
    report("iou oracle", ok, ok ? buf : why);
}

// gate 4: synthetic grounding precision at noise 0.05, 500 scenes per split
void gate_grounding_precision() {
    const auto t0 = Clock::now();
    ovg::SplitSpec split;
    ovg::SuiteSpec spec;
    spec.grounding_per_split = 500;
    spec.grasp_per_split = 0;
    const ovg::SceneSuites suites = build_suites(split, spec, 424242);

    ovg::PipelineConfig cfg;
    cfg.noise_sigma = 0.05;

    std::vector<ovg::GroundingRecord> records;
    for (const auto* suite : {&suites.grounding_base, &suites.grounding_novel})
        for (const auto& scene : *suite) {
            const ovg::GroundResult r = ground_scene(scene, cfg);
            records.push_back({scene.id, scene.split, scene.description, r.predicted, r.ground_truth});
        }
    const auto precision = ovg::precision_at_05(records);
    const double base = precision.at("base").precision();
    const double novel = precision.at("novel").precision();
    const double dt = seconds_since(t0);

    const bool ok = base >= 0.95 && novel >= 0.95 && dt < 120.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "base %.3f, novel %.3f on 500+500 scenes, %.1fs", base, novel, dt);
    report("synthetic grounding", ok, buf);
}

// gate 5: the ablation table has exactly the four flag rows, reproduces
// bit-exactly, and the all-off row equals a hand-rolled baseline pipeline
void gate_ablation_structure() {
    bool ok = true;
    std::string why;

    ovg::SplitSpec split;
    ovg::SuiteSpec spec;
    spec.grounding_per_split = 40;
    spec.grasp_per_split = 0;
    const ovg::SceneSuites suites = build_suites(split, spec, 515151);
    std::vector<ovg::SceneDescription> scenes = suites.grounding_base;
    scenes.insert(scenes.end(), suites.grounding_novel.begin(), suites.grounding_novel.end());

    const ovg::PipelineConfig cfg;
    const auto rows = ablation_table(scenes, cfg);
    const bool shape_ok = rows.size() == 4 && !rows[0].igla && !rows[0].lgia && rows[1].igla &&
                          !rows[1].lgia && !rows[2].igla && rows[2].lgia && rows[3].igla &&
                          rows[3].lgia;
    if (!shape_ok) {
        ok = false;
        why = "row shape is not the expected four flag tuples";
    }

    const auto rows2 = ablation_table(scenes, cfg);
    for (std::size_t i = 0; ok && i < 4; ++i)
        for (const auto& [split_name, sp] : rows[i].per_split)
            if (rows2[i].per_split.at(split_name).hits != sp.hits ||
                rows2[i].per_split.at(split_name).count != sp.count) {
                ok = false;
                why = "rows not reproducible under the fixed seed";
            }

    // all-off row must equal the raw pipeline: features -> queries -> decode
    ovg::PipelineConfig off = cfg;
    off.use_igla = false;
    off.use_lgia = false;
    for (std::size_t i = 0; ok && i < scenes.size(); ++i) {
        const ovg::SceneDescription& scene = scenes[i];
        const ovg::FeatureMap fm =
            render_features(scene, off.noise_sigma, scene.seed, off.feature_dim);
        const ovg::TextSequence tl = ovg::embed_text(scene.description, off.feature_dim);
        const ovg::QuerySet qs = select_queries(fm, tl, off.query_count);
        const ovg::ScoredBox baseline = ovg::argmax_box(decode(qs, fm, tl));
        const ovg::GroundResult via_pipeline = ground_scene(scene, off);
        if (!(via_pipeline.predicted.box == baseline.box) ||
            via_pipeline.predicted.score != baseline.score) {
            ok = false;
            why = "toggled-off pipeline differs from the raw baseline path";
        }
    }

    report("ablation structure", ok, ok ? "4 rows, bit-stable, baseline path identical" : why);
}

// gate 6: grasp protocol on 100 single-object scenes (30 mm spheres and
// 40 mm boxes): success rate, monotone table, immediate termination
void gate_grasp_protocol() {
    const auto t0 = Clock::now();
    ovg::SplitSpec split;
    const ovg::PipelineConfig pcfg;
    const ovg::GraspProtocolConfig gcfg;

    std::vector<ovg::GraspOutcome> outcomes;
    bool termination_ok = true;
    for (int i = 0; i < 100; ++i) {
        ovg::SceneGenOptions opts;
        opts.n_objects = 1;
        opts.shapes = {i % 2 == 0 ? ovg::Shape::sphere : ovg::Shape::box};
        opts.fixed_size_m = i % 2 == 0 ? 0.06 : 0.04;
        ovg::SceneDescription scene = generate_scene(616100 + i, split, "base", opts);
        scene.id = "gate6/" + std::to_string(i);
        scene.tag = "single";

        const ovg::GroundResult r = ground_scene(scene, pcfg);
        const ovg::GraspOutcome o = attempt_protocol(scene, r.predicted, gcfg);
        outcomes.push_back(o);

        // replay the first attempt in isolation: when the nearest filtered
        // pose closes, the protocol must have stopped at attempt 1
        try {
            const ovg::Matrix depth = render_depth(scene);
            const ovg::PointCloud crop = ovg::crop_cloud(depth, r.predicted.box, scene.camera);
            std::vector<double> zs;
            for (const auto& p : crop.points) zs.push_back(p[2]);
            std::nth_element(zs.begin(), zs.begin() + zs.size() / 2, zs.end());
            const ovg::Vec3 center = scene.camera.backproject(
                (r.predicted.box.x_min + r.predicted.box.x_max) / 2.0,
                (r.predicted.box.y_min + r.predicted.box.y_max) / 2.0, zs[zs.size() / 2]);
            const ovg::PointCloud surface = ovg::sample_point_cloud(
                scene.objects[0], gcfg.cloud_points, ovg::mix_seed(scene.seed, 0x67726370u));
            const auto pool = ovg::filter_poses(
                ovg::generate_candidates(surface, gcfg.candidate_count,
                                         ovg::mix_seed(scene.seed, 0x63616e64u), gcfg.gripper,
                                         gcfg.clearance_m),
                gcfg.min_score, gcfg.max_tilt_deg);
            if (!pool.empty() &&
                ovg::closure_check(ovg::select_pose(pool, center), surface, gcfg.gripper,
                                   gcfg.closure)) {
                if (!(o.success && o.attempts_used == 1)) termination_ok = false;
            }
        } catch (const ovg::Error&) {
            // a failed first attempt implies nothing about termination
        }
    }

    const ovg::SuccessTable table = success_table(outcomes, gcfg.max_attempts);
    const double rate = table.rate(gcfg.max_attempts, ovg::SuccessTable::kTotal);
    int first_attempt_successes = 0;
    for (const auto& o : outcomes)
        if (o.success && o.attempts_used == 1) ++first_attempt_successes;

    const double dt = seconds_since(t0);
    const bool ok = rate >= 0.80 && table.monotone() && termination_ok && dt < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "success %.2f, %d/%zu first-attempt, monotone=%d, %.1fs", rate,
                  first_attempt_successes, outcomes.size(), table.monotone() ? 1 : 0, dt);
    report("grasp protocol", ok, buf);
}

// gate 7: generate -> ground -> grasp -> report twice from one config,
// byte-identical JSONL manifests (and artifacts)
void gate_determinism() {
    bool ok = true;
    std::string why;

    const fs::path base = fs::temp_directory_path() / "ovg_acceptance_det";
    fs::remove_all(base);

    const auto run_all = [&](const std::string& dir) {
        ovg::RunConfig cfg;
        cfg.seed = 42;
        cfg.output_dir = dir;
        cfg.suites.grounding_per_split = 60;
        cfg.suites.grasp_per_split = 20;
        cfg.export_samples = 1;
        ovg::run_generate(cfg);
        ovg::run_ground(cfg);
        ovg::run_grasp(cfg);
        if (!ovg::run_report(cfg)) {
            ok = false;
            why = "report stage flagged invariant violations";
        }
    };
    run_all((base / "a").string());
    run_all((base / "b").string());

    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(base / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), base / "a");
        ++compared;
        if (slurp(entry.path().string()) != slurp((base / "b" / rel).string())) {
            ok = false;
            why = "byte mismatch in " + rel.string();
            break;
        }
    }
    if (compared < 10 && ok) {
        ok = false;
        why = "suspiciously few artifacts compared";
    }
    fs::remove_all(base);

    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu artifacts byte-identical across two runs", compared);
    report("determinism", ok, ok ? buf : why);
}

// gate 8: 1000 generated descriptions parse back perfectly and identical-pair
// descriptions resolve to the annotated target
void gate_annotation_grammar() {
    bool ok = true;
    std::string why;
    ovg::SplitSpec split;

    int parsed_ok = 0, pair_scenes = 0;
    for (int i = 0; i < 1000 && ok; ++i) {
        ovg::SceneGenOptions opts;
        opts.identical_pair = i % 3 == 0;
        opts.relation_clause_prob = i % 2 == 0 ? 0.5 : 0.0;
        const ovg::SceneDescription scene =
            generate_scene(818000 + i, split, i % 2 ? "base" : "novel", opts);
        try {
            const ovg::ParsedAnnotation parsed = ovg::parse_annotation(scene.description);
            if (ovg::render_annotation(parsed) != scene.description) {
                ok = false;
                why = "round trip changed the string at scene " + std::to_string(i);
                break;
            }
            if (opts.identical_pair) {
                ++pair_scenes;
                if (ovg::resolve_target(scene, parsed) != scene.target_index) {
                    ok = false;
                    why = "twin not disambiguated at scene " + std::to_string(i);
                    break;
                }
            }
            ++parsed_ok;
        } catch (const ovg::Error& e) {
            ok = false;
            why = std::string("parse failure: ") + e.what();
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d/1000 parsed, %d twin scenes resolved", parsed_ok, pair_scenes);
    report("annotation grammar", ok, ok ? buf : why);
}

}  // namespace

int main() {
    gate_alignment_gradients();
    gate_attention_oracle();
    gate_iou_oracle();
    gate_grounding_precision();
    gate_ablation_structure();
    gate_grasp_protocol();
    gate_determinism();
    gate_annotation_grammar();

    if (failures == 0) {
        std::printf("all gates passed\n");
        return 0;
    }
    std::printf("%d gate(s) failed\n", failures);
    return 1;
}
