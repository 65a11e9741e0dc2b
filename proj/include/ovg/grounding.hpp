#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "ovg/core.hpp"
#include "ovg/features.hpp"
#include "ovg/matrix.hpp"

namespace ovg {

struct ScoredBox {
    Box box;
    double score = 0.0;  // in (0, 1)
};

/// Top-k image locations by text similarity, kept as decoder queries.
struct QuerySet {
    std::vector<std::size_t> indices;  // unique, descending selection score
    Matrix features;                   // selected rows of the feature map
    std::size_t k = 0;
};

namespace detail {

inline double max_token_dot(const Matrix& features, std::size_t row, const Matrix& tokens) {
    double best = -std::numeric_limits<double>::infinity();
    const double* f = features.row(row);
    for (std::size_t t = 0; t < tokens.rows; ++t) {
        const double* tok = tokens.row(t);
        double dot = 0.0;
        for (std::size_t j = 0; j < features.cols; ++j) dot += f[j] * tok[j];
        best = std::max(best, dot);
    }
    return best;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace detail

/// Score every location by its best dot product against the text tokens and
/// keep the top k. Ties go to the lower location index.
inline QuerySet select_queries(const FeatureMap& image, const TextSequence& text, std::size_t k) {
    if (k < 1) throw ParamError("select_queries: k must be >= 1");
    image.validate();
    const std::size_t n = image.features.rows;
    if (n == 0) throw EmptySceneError();
    if (image.features.cols != text.tokens.cols)
        throw DimensionError("select_queries: feature dimensions differ");

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i)
        scores[i] = detail::max_token_dot(image.features, i, text.tokens);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    QuerySet qs;
    qs.k = k;
    const std::size_t take = std::min(k, n);
    qs.indices.assign(order.begin(), order.begin() + take);
    qs.features = Matrix(take, image.features.cols);
    for (std::size_t i = 0; i < take; ++i)
        std::copy_n(image.features.row(qs.indices[i]), image.features.cols, qs.features.row(i));
    return qs;
}

/// Stand-in for the learned cross-modality decoder: each query becomes the
/// box of its grid cell (side taken from the footprint hint) scored by the
/// sigmoid of its best text-token similarity. Deterministic by construction.
inline std::vector<ScoredBox> decode(const QuerySet& queries, const FeatureMap& image,
                                     const TextSequence& text) {
    if (queries.indices.empty()) throw DimensionError("decode: empty query set");
    image.validate();
    std::vector<ScoredBox> out;
    out.reserve(queries.indices.size());
    for (std::size_t i = 0; i < queries.indices.size(); ++i) {
        const std::size_t cell = queries.indices[i];
        const int r = static_cast<int>(cell) / image.grid.grid_cols;
        const int c = static_cast<int>(cell) % image.grid.grid_cols;
        ScoredBox sb;
        sb.box = image.grid.cell_box(r, c, image.footprint_px[cell]);
        sb.score = detail::sigmoid(detail::max_token_dot(queries.features, i, text.tokens));
        out.push_back(sb);
    }
    return out;
}

/// Strict maximum by score; ties resolved to the lowest index.
inline ScoredBox argmax_box(const std::vector<ScoredBox>& boxes) {
    if (boxes.empty()) throw EmptyCandidatesError();
    std::size_t best = 0;
    for (std::size_t i = 1; i < boxes.size(); ++i)
        if (boxes[i].score > boxes[best].score) best = i;
    return boxes[best];
}

inline double iou(const Box& a, const Box& b) {
    a.validate();
    b.validate();
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

}  // namespace ovg
