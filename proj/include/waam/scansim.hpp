#pragma once

// Laser line scanner simulation.
//
// A frame is one laser line across the bead at a fixed path coordinate. The
// line returns points only where it hits the bead crown; the rest of the
// field of view looks past the wall and is out of measuring range.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "waam/errors.hpp"
#include "waam/geometry.hpp"
#include "waam/plant.hpp"
#include "waam/random.hpp"

namespace waam {

struct ScannerConfig {
    double standoff = 100.0;         // mm
    double fov = 50.0;               // mm across the laser line
    double frame_rate = 100.0;       // Hz
    double z_noise_sigma = 0.02;     // mm
    double outlier_rate = 0.01;      // fraction of points replaced
    double outlier_magnitude = 3.0;  // mm, minimum displacement of an outlier
    std::size_t points_per_line = 401;
    double pose_error_sigma = 0.02;  // mm, per-frame registration error
    double scan_speed = 20.0;        // mm/s along the path
    double side_pass_length = 10.0;  // mm covered at each open-path end
    double side_pass_offset = 15.0;  // mm lateral offset of the side passes
    double crown_ratio = 0.25;       // crown sagitta / bead width

    void validate() const {
        if (standoff < 65.0 || standoff > 125.0) throw ConfigError("scanner standoff outside [65, 125] mm");
        if (fov < 40.0 || fov > 60.0) throw ConfigError("scanner field of view outside [40, 60] mm");
        if (!(frame_rate > 0.0)) throw ConfigError("scanner frame rate must be > 0");
        if (outlier_rate < 0.0 || outlier_rate >= 1.0) throw ConfigError("outlier rate must be in [0, 1)");
        if (points_per_line < 1) throw ConfigError("points per line must be >= 1");
        if (z_noise_sigma < 0.0 || pose_error_sigma < 0.0 || outlier_magnitude < 0.0)
            throw ConfigError("scanner noise parameters must be >= 0");
        if (!(scan_speed > 0.0)) throw ConfigError("scan speed must be > 0");
        if (!(crown_ratio > 0.0 && crown_ratio <= 0.5)) throw ConfigError("crown ratio must be in (0, 0.5]");
    }

    /// Configuration with every noise source switched off.
    [[nodiscard]] ScannerConfig exact() const {
        ScannerConfig c = *this;
        c.z_noise_sigma = 0.0;
        c.outlier_rate = 0.0;
        c.pose_error_sigma = 0.0;
        return c;
    }
};

enum class PassKind { main, side_start, side_end };

struct ScanPose {
    double s = 0.0;        // path coordinate of the laser line
    double lateral = 0.0;  // offset of the line centre across the bead
    PassKind pass = PassKind::main;
};

enum class PointTag : std::uint8_t { inlier, outlier };

struct ScanFrame {
    ScanPose pose;
    std::vector<Point3> points;  // (s, lateral, height), registered
    std::vector<PointTag> tags;
};

/// Merged cloud in the positioner frame: x = s, y = lateral, z = height.
/// Tags are kept for test oracles only; the filters never read them.
struct PointCloud {
    std::vector<Point3> points;
    std::vector<PointTag> tags;

    [[nodiscard]] std::size_t size() const { return points.size(); }
    [[nodiscard]] bool empty() const { return points.empty(); }

    void append(const ScanFrame& frame) {
        points.insert(points.end(), frame.points.begin(), frame.points.end());
        tags.insert(tags.end(), frame.tags.begin(), frame.tags.end());
    }

    [[nodiscard]] PointCloud select(std::span<const std::size_t> indices) const {
        PointCloud out;
        out.points.reserve(indices.size());
        out.tags.reserve(indices.size());
        for (auto i : indices) {
            out.points.push_back(points[i]);
            out.tags.push_back(tags[i]);
        }
        return out;
    }
};

inline std::vector<ScanPose> plan_scan_path(const WeldPath& path, const ScannerConfig& config) {
    validate(path);
    const double step = config.scan_speed / config.frame_rate;
    const double length = path.arc_length;
    std::vector<ScanPose> poses;
    const auto frames = static_cast<std::size_t>(std::floor(length / step + 1e-9));
    const std::size_t main_count = path.closed ? std::max<std::size_t>(frames, 1) : frames + 1;
    for (std::size_t j = 0; j < main_count; ++j)
        poses.push_back({std::min(step * static_cast<double>(j), length), 0.0, PassKind::main});
    if (!path.closed && config.side_pass_length > 0.0) {
        const double side = std::min(config.side_pass_length, length);
        const auto side_frames = static_cast<std::size_t>(std::floor(side / step + 1e-9));
        for (std::size_t j = 0; j <= side_frames; ++j)
            poses.push_back({std::min(step * static_cast<double>(j), side), config.side_pass_offset,
                             PassKind::side_start});
        for (std::size_t j = 0; j <= side_frames; ++j)
            poses.push_back({std::max(length - side + step * static_cast<double>(j), length - side),
                             -config.side_pass_offset, PassKind::side_end});
        poses.back().s = std::min(poses.back().s, length);
    }
    return poses;
}

/// Drop of a circular-arc crown of chord `width` at lateral offset y from the
/// crest. Negative values mean the line missed the bead.
inline double crown_drop(double y, double width, double crown_ratio) {
    const double half = 0.5 * width;
    if (std::abs(y) > half) return -1.0;
    const double sag = crown_ratio * width;
    const double radius = (half * half + sag * sag) / (2.0 * sag);
    return radius - std::sqrt(radius * radius - y * y);
}

/// One laser line. `length`/`closed` describe the path the pose lives on;
/// `surface_offset` maps path coordinates onto the surface grid.
inline ScanFrame capture_frame(const SurfaceHeightField& surface, double surface_offset,
                               double path_length, bool closed, double bead_width,
                               const ScanPose& pose, const ScannerConfig& config, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    ScanFrame frame;
    frame.pose = pose;

    double ds = 0.0, dy = 0.0, dz = 0.0;
    if (config.pose_error_sigma > 0.0) {
        ds = config.pose_error_sigma * normal(rng);
        dy = config.pose_error_sigma * normal(rng);
        dz = config.pose_error_sigma * normal(rng);
    }
    const double crest = surface.height_at(surface_offset + pose.s);
    const auto n = config.points_per_line;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = n == 1 ? 0.0
                                : (static_cast<double>(i) / static_cast<double>(n - 1) - 0.5) * config.fov;
        const double y = pose.lateral + u;
        const double drop = crown_drop(y, bead_width, config.crown_ratio);
        if (drop < 0.0) continue;
        double z = crest - drop;
        if (config.z_noise_sigma > 0.0) z += config.z_noise_sigma * normal(rng);
        auto tag = PointTag::inlier;
        if (config.outlier_rate > 0.0 && uniform(rng) < config.outlier_rate) {
            const double sign = uniform(rng) < 0.5 ? -1.0 : 1.0;
            z += sign * config.outlier_magnitude * (1.0 + uniform(rng));
            tag = PointTag::outlier;
        }
        double s = pose.s + ds;
        if (closed) {
            s = std::fmod(s, path_length);
            if (s < 0.0) s += path_length;
        }
        frame.points.push_back({s, y + dy, z + dz});
        frame.tags.push_back(tag);
    }
    return frame;
}

/// Sweep the poses over the surface and merge the frames.
inline PointCloud simulate_scan(const SurfaceHeightField& surface, double surface_offset,
                                double path_length, bool closed, double bead_width,
                                std::span<const ScanPose> poses, const ScannerConfig& config,
                                std::uint64_t seed) {
    if (poses.empty()) throw ContractViolation("scan needs at least one pose");
    auto rng = make_rng(seed, 0x5ca7);
    PointCloud cloud;
    for (const auto& pose : poses)
        cloud.append(capture_frame(surface, surface_offset, path_length, closed, bead_width, pose,
                                   config, rng));
    return cloud;
}

/// Scan one layer path laid on the surface.
inline PointCloud simulate_scan(const SurfaceHeightField& surface, const LayerPlan& layer,
                                double bead_width, const ScannerConfig& config, std::uint64_t seed) {
    const auto poses = plan_scan_path(layer.path, config);
    return simulate_scan(surface, layer.s_offset, layer.path.arc_length, layer.path.closed,
                         bead_width, poses, config, seed);
}

}  // namespace waam
