#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ovg/core.hpp"
#include "ovg/matrix.hpp"

namespace ovg {

/// Axis-aligned pixel box, [x_min, x_max) x [y_min, y_max).
struct Box {
    double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    void validate() const {
        if (!(x_min < x_max) || !(y_min < y_max)) throw DimensionError("degenerate box");
    }

    bool operator==(const Box& o) const {
        return x_min == o.x_min && y_min == o.y_min && x_max == o.x_max && y_max == o.y_max;
    }
};

/// The image-plane grid the synthetic world lives on. Locations are cells,
/// indexed row-major; cell (r, c) covers a cell_w x cell_h pixel patch.
struct GridGeometry {
    int grid_rows = 12;
    int grid_cols = 16;
    int image_w = 640;
    int image_h = 480;

    double cell_w() const { return static_cast<double>(image_w) / grid_cols; }
    double cell_h() const { return static_cast<double>(image_h) / grid_rows; }
    int cell_count() const { return grid_rows * grid_cols; }
    int cell_index(int r, int c) const { return r * grid_cols + c; }

    double cell_center_x(int c) const { return c * cell_w() + cell_w() / 2.0; }
    double cell_center_y(int r) const { return r * cell_h() + cell_h() / 2.0; }

    /// Box of side `side_px` centered on cell (r, c), clamped to the image.
    /// Both the ground-truth boxes and the decoder's box head go through
    /// here, which is what makes them exactly consistent.
    Box cell_box(int r, int c, double side_px) const {
        Box b;
        b.x_min = std::max(0.0, cell_center_x(c) - side_px / 2.0);
        b.y_min = std::max(0.0, cell_center_y(r) - side_px / 2.0);
        b.x_max = std::min(static_cast<double>(image_w), cell_center_x(c) + side_px / 2.0);
        b.y_max = std::min(static_cast<double>(image_h), cell_center_y(r) + side_px / 2.0);
        return b;
    }
};

/// Per-location image features plus the grid metadata the box head reads.
/// footprint_px[i] is the pixel extent hint for cell i: the projected object
/// footprint where an object sits, a default window elsewhere.
struct FeatureMap {
    Matrix features;  // cell_count x dim, row-major by cell index
    GridGeometry grid;
    std::vector<double> footprint_px;

    void validate() const {
        if (features.rows != static_cast<std::size_t>(grid.cell_count()))
            throw DimensionError("feature map rows != grid cell count");
        if (footprint_px.size() != features.rows)
            throw DimensionError("feature map needs one footprint per cell");
    }
};

/// Token features for one description.
struct TextSequence {
    Matrix tokens;  // token_count x dim
    std::string text;
};

}  // namespace ovg
