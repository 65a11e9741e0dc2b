#pragma once

#include <cstdint>
#include <vector>

#include "ovg/alignment.hpp"
#include "ovg/features.hpp"
#include "ovg/grounding.hpp"
#include "ovg/matrix.hpp"
#include "ovg/scene.hpp"

namespace ovg {

/// Everything the grounding pipeline needs beyond the scene itself.
struct PipelineConfig {
    AlignmentParams align;
    std::size_t num_heads = 1;
    std::size_t feature_dim = 32;
    std::uint64_t weight_seed = 20240512;
    std::size_t query_count = 32;
    double noise_sigma = 0.05;
    bool use_igla = true;
    bool use_lgia = true;

    AttentionConfig attention() const { return AttentionConfig::standard(num_heads, feature_dim); }
};

struct GroundResult {
    ScoredBox predicted;
    Box ground_truth;
    double iou_value = 0.0;
};

/// Feature extraction -> IGLA -> LGIA -> query selection -> decode -> argmax.
/// Toggling a stage off passes its input through untouched, which is exactly
/// the ablation baseline.
inline GroundResult ground_scene(const SceneDescription& scene, const PipelineConfig& cfg) {
    const FeatureMap features = render_features(scene, cfg.noise_sigma, scene.seed, cfg.feature_dim);
    const TextSequence tokens = embed_text(scene.description, cfg.feature_dim);

    const TextSequence fused_text =
        cfg.use_igla ? igla(features, tokens, cfg.align, cfg.attention()) : tokens;

    FeatureMap fused_image = features;
    if (cfg.use_lgia) {
        const Matrix projection = init_projection(cfg.feature_dim, cfg.align.proj_dim, cfg.weight_seed);
        const std::vector<double> bias(cfg.align.proj_dim, 0.0);
        const Matrix image_proj = lgia_project(features.features, projection, bias);
        const std::vector<double> pooled = pool_text(lgia_project(fused_text.tokens, projection, bias));
        const ConstraintField field =
            constraint_score(image_proj, pooled, cfg.align.beta, cfg.align.theta);
        fused_image = lgia_blend(features, field, cfg.align.lambda);
    }

    const QuerySet queries = select_queries(fused_image, fused_text, cfg.query_count);
    const std::vector<ScoredBox> boxes = decode(queries, fused_image, fused_text);

    GroundResult result;
    result.predicted = argmax_box(boxes);
    result.ground_truth = scene.target_box();
    result.iou_value = iou(result.predicted.box, result.ground_truth);
    return result;
}

}  // namespace ovg
