#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "ovg/core.hpp"

namespace ovg {

struct Vec3 {
    double v[3]{0.0, 0.0, 0.0};

    Vec3() = default;
    Vec3(double x, double y, double z) : v{x, y, z} {}
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    if (n < 1e-15) throw ParamError("cannot normalize near-zero vector");
    return {v[0] / n, v[1] / n, v[2] / n};
}

/// Top-down pinhole camera. Frame: origin at the optical center, x along
/// image u (right), y along image v (down in the image), z along the view
/// ray toward the table plane, which sits at z = height_m.
struct Camera {
    double fx = 580.0;
    double fy = 580.0;
    double cx = 320.0;
    double cy = 240.0;
    double height_m = 1.4;

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0) || !(height_m > 0.0))
            throw ParamError("camera: fx, fy, height must be > 0");
    }

    Vec3 backproject(double u, double v, double z) const {
        return {(u - cx) * z / fx, (v - cy) * z / fy, z};
    }

    /// Pixel extent of a `size_m` object footprint, evaluated at table depth.
    double footprint_px(double size_m) const { return fx * size_m / height_m; }
};

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // empty when absent; unit length otherwise

    bool has_normals() const { return !normals.empty(); }

    void validate() const {
        if (has_normals() && normals.size() != points.size())
            throw DimensionError("point cloud: normal count != point count");
        for (const Vec3& n : normals)
            if (std::abs(norm(n) - 1.0) > 1e-6) throw DimensionError("point cloud: non-unit normal");
    }
};

inline Vec3 centroid(const PointCloud& cloud) {
    if (cloud.points.empty()) throw EmptyCropError();
    Vec3 c{0, 0, 0};
    for (const Vec3& p : cloud.points) c = c + p;
    return (1.0 / static_cast<double>(cloud.points.size())) * c;
}

}  // namespace ovg
