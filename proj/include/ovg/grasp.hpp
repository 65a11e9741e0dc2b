#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ovg/core.hpp"
#include "ovg/features.hpp"
#include "ovg/geom.hpp"
#include "ovg/grounding.hpp"
#include "ovg/matrix.hpp"
#include "ovg/scene.hpp"

namespace ovg {

/// Parallel-jaw pose. Rotation columns: approach axis (wrist to object),
/// closing axis (jaw travel), minor axis (their cross product).
struct GraspPose {
    Vec3 approach{0, 0, 1};
    Vec3 closing{1, 0, 0};
    Vec3 minor{0, 1, 0};
    Vec3 translation{0, 0, 0};  // mid-point between jaw tips
    double width_m = 0.0;
    double score = 0.0;

    void validate(double max_width_m = 0.085) const {
        const double tol = 1e-8;
        if (std::abs(norm(approach) - 1.0) > tol || std::abs(norm(closing) - 1.0) > tol ||
            std::abs(norm(minor) - 1.0) > tol)
            throw ParamError("grasp pose: rotation columns must be unit length");
        if (std::abs(dot(approach, closing)) > tol || std::abs(dot(approach, minor)) > tol ||
            std::abs(dot(closing, minor)) > tol)
            throw ParamError("grasp pose: rotation columns must be orthogonal");
        if (!(width_m > 0.0) || width_m > max_width_m + 1e-12)
            throw ParamError("grasp pose: width outside (0, max jaw span]");
        if (score < 0.0 || score > 1.0) throw ParamError("grasp pose: score outside [0, 1]");
    }

    /// Degrees between the approach axis and straight-down; 0 is a perfect
    /// top-down grasp, 90 a horizontal one.
    double tilt_deg() const {
        const double c = std::clamp(approach[2], -1.0, 1.0);
        return std::acos(c) * 180.0 / 3.14159265358979323846;
    }
};

struct GripperModel {
    double max_width_m = 0.085;  // ROBOTIQ-85 jaw span
    double finger_depth_m = 0.04;
    double friction_coefficient = 0.4;

    void validate() const {
        if (!(max_width_m > 0.0) || !(finger_depth_m > 0.0) || !(friction_coefficient > 0.0))
            throw ParamError("gripper: all fields must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Cropping
// ---------------------------------------------------------------------------

/// Back-projects every in-box pixel whose depth departs from the table plane
/// by more than 1 mm. Pixel (u, v) is in the box when x_min <= u < x_max and
/// y_min <= v < y_max.
inline PointCloud crop_cloud(const Matrix& depth, const Box& box, const Camera& camera) {
    box.validate();
    camera.validate();
    const int W = static_cast<int>(depth.cols), H = static_cast<int>(depth.rows);
    if (box.x_min < 0.0 || box.y_min < 0.0 || box.x_max > W || box.y_max > H)
        throw DimensionError("crop_cloud: box exceeds image bounds");

    PointCloud out;
    const int u0 = static_cast<int>(std::ceil(box.x_min));
    const int v0 = static_cast<int>(std::ceil(box.y_min));
    for (int v = v0; v < box.y_max; ++v) {
        for (int u = u0; u < box.x_max; ++u) {
            const double z = depth(static_cast<std::size_t>(v), static_cast<std::size_t>(u));
            if (std::abs(z - camera.height_m) > 1e-3)
                out.points.push_back(camera.backproject(u, v, z));
        }
    }
    if (out.points.empty()) throw EmptyCropError();
    return out;
}

// ---------------------------------------------------------------------------
// Normal estimation (k-nearest plane fit)
// ---------------------------------------------------------------------------

namespace detail {

// Smallest eigenvector of a symmetric 3x3 via cyclic Jacobi sweeps.
inline Vec3 smallest_eigenvector(double a[3][3]) {
    double v[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int sweep = 0; sweep < 16; ++sweep) {
        double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off < 1e-14) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < 3; ++i) {
                    const double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (int i = 0; i < 3; ++i) {
                    const double api = a[p][i], aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for (int i = 0; i < 3; ++i) {
                    const double vip = v[i][p], viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    int min_i = 0;
    for (int i = 1; i < 3; ++i)
        if (a[i][i] < a[min_i][min_i]) min_i = i;
    return normalized(Vec3{v[0][min_i], v[1][min_i], v[2][min_i]});
}

}  // namespace detail

/// Fills in normals by fitting a plane through each point's k nearest
/// neighbours. Signs are oriented away from the cloud centroid, falling back
/// to "toward the camera" when the point sits on a plane through it.
inline PointCloud estimate_normals(const PointCloud& cloud, std::size_t k = 10) {
    if (cloud.points.size() < k + 1) throw ParamError("estimate_normals: too few points");
    PointCloud out = cloud;
    out.normals.resize(cloud.points.size());
    const Vec3 center = centroid(cloud);

    const std::size_t n = cloud.points.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = cloud.points[i];
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3 d = cloud.points[j] - p;
            dist[j] = {dot(d, d), j};
        }
        std::partial_sort(dist.begin(), dist.begin() + k + 1, dist.end());

        Vec3 mean{0, 0, 0};
        for (std::size_t m = 1; m <= k; ++m) mean = mean + cloud.points[dist[m].second];
        mean = (1.0 / static_cast<double>(k)) * mean;

        double cov[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        for (std::size_t m = 1; m <= k; ++m) {
            const Vec3 d = cloud.points[dist[m].second] - mean;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) cov[r][c] += d[r] * d[c];
        }
        Vec3 normal = detail::smallest_eigenvector(cov);
        const double side = dot(p - center, normal);
        if (side < -1e-9) normal = -1.0 * normal;
        else if (side < 1e-9 && normal[2] > 0.0) normal = -1.0 * normal;  // face the camera
        out.normals[i] = normal;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Candidate generation and selection
// ---------------------------------------------------------------------------

/// Antipodal sampler. Draws a contact point, finds the opposing contact whose
/// normal best lines up inside the friction cone, and closes along the pair.
/// The approach axis is the most-downward direction perpendicular to closing.
inline std::vector<GraspPose> generate_candidates(const PointCloud& input, std::size_t n,
                                                  std::uint64_t seed,
                                                  const GripperModel& gripper = GripperModel{},
                                                  double clearance_m = 0.005) {
    if (n < 1) throw ParamError("generate_candidates: n must be >= 1");
    gripper.validate();
    const PointCloud cloud = input.has_normals() ? input : estimate_normals(input);
    cloud.validate();

    const double cone = std::atan(gripper.friction_coefficient);
    const double cos_cone = std::cos(cone);
    Rng rng(mix_seed(seed, 0x67726173u));  // "gras"

    std::vector<GraspPose> poses;
    const std::size_t max_trials = 24 * n;
    for (std::size_t trial = 0; trial < max_trials && poses.size() < n; ++trial) {
        const std::size_t i = rng.below(cloud.points.size());
        const Vec3& p = cloud.points[i];
        const Vec3& np = cloud.normals[i];

        std::size_t best_j = cloud.points.size();
        double best_worst_cos = cos_cone;
        for (std::size_t j = 0; j < cloud.points.size(); ++j) {
            if (j == i) continue;
            const Vec3 diff = p - cloud.points[j];
            const double w = norm(diff);
            if (w < 1e-4 || w + clearance_m > gripper.max_width_m) continue;
            const Vec3 axis = (1.0 / w) * diff;
            const double ca = dot(np, axis);
            const double cb = -dot(cloud.normals[j], axis);
            const double worst = std::min(ca, cb);
            if (worst > best_worst_cos) {
                best_worst_cos = worst;
                best_j = j;
            }
        }
        if (best_j == cloud.points.size()) continue;

        const Vec3& q = cloud.points[best_j];
        const Vec3 closing = normalized(p - q);
        Vec3 down{0, 0, 1};
        Vec3 approach = down - dot(down, closing) * closing;
        if (norm(approach) < 1e-6) {
            const Vec3 x_axis{1, 0, 0};
            approach = x_axis - dot(x_axis, closing) * closing;
        }
        approach = normalized(approach);

        GraspPose pose;
        pose.approach = approach;
        pose.closing = closing;
        pose.minor = cross(approach, closing);
        pose.translation = 0.5 * (p + q);
        pose.width_m = norm(p - q) + clearance_m;
        pose.score = std::clamp(best_worst_cos, 0.0, 1.0);
        pose.validate(gripper.max_width_m);
        poses.push_back(pose);
    }
    if (poses.empty()) throw NoCandidatesError();
    return poses;
}

/// Keeps poses with score >= min_score and tilt <= max_tilt_deg, in order.
inline std::vector<GraspPose> filter_poses(const std::vector<GraspPose>& poses, double min_score,
                                           double max_tilt_deg) {
    if (!std::isfinite(min_score) || !std::isfinite(max_tilt_deg))
        throw ParamError("filter_poses: thresholds must be finite");
    std::vector<GraspPose> out;
    for (const GraspPose& p : poses)
        if (p.score >= min_score && p.tilt_deg() <= max_tilt_deg) out.push_back(p);
    return out;
}

/// Nearest pose to the target center, Euclidean; ties go to the lower index.
inline GraspPose select_pose(const std::vector<GraspPose>& poses, const Vec3& target_center) {
    if (poses.empty()) throw NoCandidatesError();
    std::size_t best = 0;
    double best_d = norm(poses[0].translation - target_center);
    for (std::size_t i = 1; i < poses.size(); ++i) {
        const double d = norm(poses[i].translation - target_center);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return poses[best];
}

// ---------------------------------------------------------------------------
// Closure verification
// ---------------------------------------------------------------------------

struct ClosureConfig {
    double contact_tol_m = 0.003;
    int min_sweep_points = 20;
    double sweep_half_extent_m = 0.01;  // jaw plate half-width along the minor axis
};

/// Geometric grasp verdict:
///  (a) the jaw sweep volume holds enough of the cloud,
///  (b) both jaws meet contact normals inside the friction cone, and
///  (c) the measured closing span fits the jaw travel.
inline bool closure_check(const GraspPose& pose, const PointCloud& input,
                          const GripperModel& gripper, const ClosureConfig& cfg = ClosureConfig{}) {
    pose.validate(gripper.max_width_m);
    gripper.validate();
    const PointCloud cloud = input.has_normals() ? input : estimate_normals(input);

    struct Contact {
        double u;
        Vec3 normal;
    };
    // band: everything between the finger plates, regardless of the commanded
    // opening; its closing-axis span is what the jaws must accommodate
    std::vector<Contact> band;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3 rel = cloud.points[i] - pose.translation;
        const double a = dot(rel, pose.approach);
        const double m = dot(rel, pose.minor);
        if (std::abs(a) <= gripper.finger_depth_m / 2.0 && std::abs(m) <= cfg.sweep_half_extent_m)
            band.push_back({dot(rel, pose.closing), cloud.normals[i]});
    }

    std::vector<Contact> sweep;
    for (const Contact& c : band)
        if (std::abs(c.u) <= pose.width_m / 2.0) sweep.push_back(c);
    if (static_cast<int>(sweep.size()) < cfg.min_sweep_points) return false;

    double u_max = -std::numeric_limits<double>::infinity();
    double u_min = std::numeric_limits<double>::infinity();
    for (const Contact& c : band) {
        u_max = std::max(u_max, c.u);
        u_min = std::min(u_min, c.u);
    }
    if (u_max - u_min > gripper.max_width_m) return false;

    const double cos_cone = std::cos(std::atan(gripper.friction_coefficient));
    bool plus_ok = false, minus_ok = false;
    for (const Contact& c : band) {
        if (c.u >= u_max - cfg.contact_tol_m && dot(c.normal, pose.closing) >= cos_cone)
            plus_ok = true;
        if (c.u <= u_min + cfg.contact_tol_m && -dot(c.normal, pose.closing) >= cos_cone)
            minus_ok = true;
        if (plus_ok && minus_ok) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Attempt protocol
// ---------------------------------------------------------------------------

struct GraspProtocolConfig {
    int max_attempts = 3;
    double min_score = 0.3;
    double max_tilt_deg = 45.0;
    GripperModel gripper{};
    ClosureConfig closure{};
    std::size_t cloud_points = 2048;
    std::size_t candidate_count = 64;
    double clearance_m = 0.005;
};

struct GraspOutcome {
    std::string scene_id;
    std::string split;
    std::string tag;  // "single" | "multi"
    int attempts_used = 0;
    bool success = false;
    bool grasped_target = false;
    int grasped_object = -1;
    std::string failure;  // "", "empty_crop", "no_candidates", "closure"
};

/// Runs the grasp stack on one grounded scene: crop the depth image with the
/// predicted box, lift the box center to 3D via the median crop depth,
/// complete the identified object's surface, then walk poses nearest-first
/// through closure checks. Any success ends the scene immediately, whether or
/// not the grasped object was the referred one; a failed pose is discarded
/// and the next nearest tried, up to max_attempts.
inline GraspOutcome attempt_protocol(const SceneDescription& scene, const ScoredBox& grounding,
                                     const GraspProtocolConfig& cfg = GraspProtocolConfig{}) {
    if (cfg.max_attempts < 1) throw ParamError("attempt_protocol: max_attempts must be >= 1");
    GraspOutcome outcome;
    outcome.scene_id = scene.id;
    outcome.split = scene.split;
    outcome.tag = scene.tag;

    const Matrix depth = render_depth(scene);
    PointCloud crop;
    try {
        crop = crop_cloud(depth, grounding.box, scene.camera);
    } catch (const EmptyCropError&) {
        outcome.attempts_used = cfg.max_attempts;
        outcome.failure = "empty_crop";
        return outcome;
    }

    // 2D box center lifted to 3D at the median crop depth
    std::vector<double> depths;
    depths.reserve(crop.points.size());
    for (const Vec3& p : crop.points) depths.push_back(p[2]);
    std::nth_element(depths.begin(), depths.begin() + depths.size() / 2, depths.end());
    const double median_z = depths[depths.size() / 2];
    const Vec3 target_center = scene.camera.backproject((grounding.box.x_min + grounding.box.x_max) / 2.0,
                                                        (grounding.box.y_min + grounding.box.y_max) / 2.0,
                                                        median_z);

    // the object the crop landed on; grasping it may or may not hit the target
    int nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const Vec3& w = scene.objects[i].world_pos;
        const double dx = w[0] - target_center[0], dy = w[1] - target_center[1];
        const double d = dx * dx + dy * dy;
        if (d < nearest_d) {
            nearest_d = d;
            nearest = static_cast<int>(i);
        }
    }
    outcome.grasped_object = nearest;

    std::vector<GraspPose> pool;
    try {
        const PointCloud surface = sample_point_cloud(scene.objects[nearest], cfg.cloud_points,
                                                      mix_seed(scene.seed, 0x67726370u));
        const std::vector<GraspPose> candidates = generate_candidates(
            surface, cfg.candidate_count, mix_seed(scene.seed, 0x63616e64u), cfg.gripper,
            cfg.clearance_m);
        pool = filter_poses(candidates, cfg.min_score, cfg.max_tilt_deg);

        for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
            outcome.attempts_used = attempt;
            if (pool.empty()) {
                outcome.failure = "no_candidates";
                continue;
            }
            const GraspPose pose = select_pose(pool, target_center);
            if (closure_check(pose, surface, cfg.gripper, cfg.closure)) {
                outcome.success = true;
                outcome.failure.clear();
                outcome.grasped_target = nearest == scene.target_index;
                return outcome;
            }
            outcome.failure = "closure";
            // drop the failed pose, next nearest goes on the following attempt
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (norm(pool[i].translation - pose.translation) < 1e-12 &&
                    norm(pool[i].closing - pose.closing) < 1e-12) {
                    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
                    break;
                }
            }
        }
    } catch (const NoCandidatesError&) {
        outcome.attempts_used = cfg.max_attempts;
        outcome.failure = "no_candidates";
    }
    outcome.attempts_used = cfg.max_attempts;
    return outcome;
}

}  // namespace ovg
