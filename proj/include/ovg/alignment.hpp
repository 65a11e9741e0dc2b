#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ovg/core.hpp"
#include "ovg/features.hpp"
#include "ovg/matrix.hpp"

namespace ovg {

/// Blend and score parameters for the two alignment stages.
///   alpha  - IGLA residual blend on the text branch
///   lambda - LGIA balance between constrained and raw image features
///   beta   - constraint score amplitude (its upper bound)
///   theta  - constraint score bandwidth
struct AlignmentParams {
    double alpha = 0.5;
    double lambda = 0.6;
    double beta = 1.0;
    double theta = 0.5;
    std::size_t proj_dim = 32;

    void validate() const {
        if (alpha < 0.0 || alpha > 1.0) throw ParamError("alpha must be in [0,1]");
        if (lambda < 0.0 || lambda > 1.0) throw ParamError("lambda must be in [0,1]");
        if (!(beta > 0.0)) throw ParamError("beta must be > 0");
        if (!(theta > 0.0)) throw ParamError("theta must be > 0");
    }
};

/// Per-location constraint scores, each in (0, beta_used].
struct ConstraintField {
    std::vector<double> scores;
    double beta_used = 0.0;
    double theta_used = 0.0;
};

/// Image-guided language attention: cross-attend text tokens (queries) over
/// image locations (keys/values) and blend the result back into the tokens.
/// With alpha = 0 the tokens pass through untouched.
inline Matrix igla(const Matrix& image_features, const Matrix& text_tokens,
                   const AlignmentParams& params, const AttentionConfig& cfg,
                   const AttentionWeights* weights = nullptr) {
    params.validate();
    if (image_features.cols != text_tokens.cols)
        throw DimensionError("igla: image and text feature dimensions differ");
    if (params.alpha == 0.0) return text_tokens;

    Matrix fused = multi_head_attention(text_tokens, image_features, image_features, cfg, weights);
    for (std::size_t i = 0; i < fused.data.size(); ++i)
        fused.data[i] = params.alpha * fused.data[i] + text_tokens.data[i];
    return fused;
}

/// FC layer + L2 row normalization, mapping features into the shared space
/// where image/text cosine similarity is taken.
inline Matrix lgia_project(const Matrix& features, const Matrix& weights,
                           const std::vector<double>& bias, double eps = 1e-12) {
    return l2_normalize_rows(linear(features, weights, bias), eps);
}

/// Mean over token rows, re-normalized to unit length. Collapses a projected
/// text sequence to the single sentence vector the constraint score dots
/// against every image location.
inline std::vector<double> pool_text(const Matrix& projected_tokens, double eps = 1e-12) {
    if (projected_tokens.rows == 0) throw EmptyTextError();
    std::vector<double> mean(projected_tokens.cols, 0.0);
    for (std::size_t i = 0; i < projected_tokens.rows; ++i) {
        const double* r = projected_tokens.row(i);
        for (std::size_t j = 0; j < projected_tokens.cols; ++j) mean[j] += r[j];
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < mean.size(); ++j) {
        mean[j] /= static_cast<double>(projected_tokens.rows);
        sq += mean[j] * mean[j];
    }
    const double norm = std::sqrt(sq);
    if (norm < eps) throw RowDegenerateError(0);
    for (double& v : mean) v /= norm;
    return mean;
}

namespace detail {

inline void check_score_params(const Matrix& projected_image, const std::vector<double>& pooled_text,
                               double beta, double theta) {
    if (!(beta > 0.0)) throw ParamError("constraint score: beta must be > 0");
    if (!(theta > 0.0)) throw ParamError("constraint score: theta must be > 0");
    if (projected_image.cols != pooled_text.size())
        throw DimensionError("constraint score: feature dimensions differ");
}

inline double row_dot(const Matrix& m, std::size_t i, const std::vector<double>& v) {
    double dot = 0.0;
    const double* r = m.row(i);
    for (std::size_t j = 0; j < v.size(); ++j) dot += r[j] * v[j];
    return dot;
}

}  // namespace detail

/// Gaussian similarity gain per image location:
///   S(x) = beta * exp(-(1 - dot(x))^2 / (2 theta^2))
/// Peaks at exactly beta when the location matches the pooled text head-on,
/// and decays monotonically as the cosine drops.
inline ConstraintField constraint_score(const Matrix& projected_image,
                                        const std::vector<double>& pooled_text, double beta,
                                        double theta) {
    detail::check_score_params(projected_image, pooled_text, beta, theta);
    ConstraintField field;
    field.beta_used = beta;
    field.theta_used = theta;
    field.scores.resize(projected_image.rows);
    const double inv = 1.0 / (2.0 * theta * theta);
    for (std::size_t i = 0; i < projected_image.rows; ++i) {
        const double gap = 1.0 - detail::row_dot(projected_image, i, pooled_text);
        field.scores[i] = beta * std::exp(-gap * gap * inv);
    }
    return field;
}

/// Analytic partials of the constraint score in its two scalar parameters:
///   dS/dbeta  = S / beta
///   dS/dtheta = S * (1 - dot)^2 / theta^3
/// Exists purely to make the score verifiable against finite differences.
inline std::pair<std::vector<double>, std::vector<double>> constraint_score_grad(
    const Matrix& projected_image, const std::vector<double>& pooled_text, double beta,
    double theta) {
    detail::check_score_params(projected_image, pooled_text, beta, theta);
    std::vector<double> d_beta(projected_image.rows), d_theta(projected_image.rows);
    const double inv = 1.0 / (2.0 * theta * theta);
    const double theta3 = theta * theta * theta;
    for (std::size_t i = 0; i < projected_image.rows; ++i) {
        const double gap = 1.0 - detail::row_dot(projected_image, i, pooled_text);
        const double s = beta * std::exp(-gap * gap * inv);
        d_beta[i] = s / beta;
        d_theta[i] = s * gap * gap / theta3;
    }
    return {std::move(d_beta), std::move(d_theta)};
}

/// Language-guided image attention, final step: scale each image location by
/// lambda*S(x) + (1 - lambda). With beta <= 1 this can only attenuate.
inline Matrix lgia_blend(const Matrix& image_features, const ConstraintField& field, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw ParamError("lgia_blend: lambda must be in [0,1]");
    if (field.scores.size() != image_features.rows)
        throw DimensionError("lgia_blend: one score per image location required");
    Matrix out = image_features;
    for (std::size_t i = 0; i < out.rows; ++i) {
        const double gain = lambda * field.scores[i] + (1.0 - lambda);
        double* r = out.row(i);
        for (std::size_t j = 0; j < out.cols; ++j) r[j] *= gain;
    }
    return out;
}

/// Seeded init for the shared LGIA projection: uniform in +-1/sqrt(fan_in).
/// One matrix serves both modalities so that "the same dimensional space"
/// means something without any training.
inline Matrix init_projection(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x70726f6au));  // "proj"
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    Matrix w(in_dim, out_dim);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

inline TextSequence igla(const FeatureMap& image, const TextSequence& text,
                         const AlignmentParams& params, const AttentionConfig& cfg,
                         const AttentionWeights* weights = nullptr) {
    TextSequence out = text;
    out.tokens = igla(image.features, text.tokens, params, cfg, weights);
    return out;
}

inline FeatureMap lgia_blend(const FeatureMap& image, const ConstraintField& field, double lambda) {
    FeatureMap out = image;
    out.features = lgia_blend(image.features, field, lambda);
    return out;
}

}  // namespace ovg
