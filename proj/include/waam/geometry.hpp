#pragma once

// Deposition paths, layer slicing and uniform motion segmentation.
//
// Paths live in a workpiece frame: x/y in the build plate, z the layer
// height. Every path is parameterised by arc length s in [0, arc_length];
// the same parameterisation is used for welding, scanning and metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "waam/errors.hpp"

namespace waam {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
};

struct WeldPath {
    std::vector<Point3> points;
    std::vector<double> s;  // arc-length coordinate of each point
    double arc_length = 0.0;
    bool closed = false;

    friend bool operator==(const WeldPath&, const WeldPath&) = default;
};

struct PathSegment {
    std::size_t index = 0;
    double s_start = 0.0;
    double s_end = 0.0;
    double length = 0.0;
};

enum class PartKind { wall, blade, cylinder };

inline std::string to_string(PartKind kind) {
    switch (kind) {
        case PartKind::wall: return "wall";
        case PartKind::blade: return "blade";
        case PartKind::cylinder: return "cylinder";
    }
    return "unknown";
}

inline PartKind part_kind_from_string(const std::string& name) {
    if (name == "wall") return PartKind::wall;
    if (name == "blade") return PartKind::blade;
    if (name == "cylinder") return PartKind::cylinder;
    throw ConfigError("unknown part kind '" + name + "'");
}

struct WallDims {
    double width = 65.0;
    double thickness = 4.0;
};

/// Generic fan-blade stand-in: a circular arc whose length shrinks linearly
/// with height, symmetrically about the base midpoint.
struct BladeDims {
    double base_width = 65.0;
    double taper_rate = 0.8;   // mm of path length lost per mm of height
    double curvature = 0.01;   // 1/mm, 0 gives a straight wall
    double thickness = 4.0;
};

struct CylinderDims {
    double radius = 35.0;
};

struct PartSpec {
    PartKind kind = PartKind::wall;
    WallDims wall{};
    BladeDims blade{};
    CylinderDims cylinder{};
    double target_height = 50.0;

    [[nodiscard]] bool closed() const { return kind == PartKind::cylinder; }

    /// Path length of the layer whose bottom sits at `height`.
    [[nodiscard]] double path_length_at(double height) const {
        switch (kind) {
            case PartKind::wall: return wall.width;
            case PartKind::blade: return blade.base_width - blade.taper_rate * height;
            case PartKind::cylinder: return 2.0 * std::numbers::pi * cylinder.radius;
        }
        return 0.0;
    }

    /// Where the layer at `height` starts on the base (first-layer) path.
    [[nodiscard]] double path_offset_at(double height) const {
        if (kind != PartKind::blade) return 0.0;
        return 0.5 * (blade.base_width - path_length_at(height));
    }

    [[nodiscard]] double base_length() const { return path_length_at(0.0); }

    void validate() const {
        if (!(target_height > 0.0)) throw ConfigError("part target_height must be > 0");
        switch (kind) {
            case PartKind::wall:
                if (!(wall.width > 0.0 && wall.thickness > 0.0))
                    throw ConfigError("wall width and thickness must be > 0");
                break;
            case PartKind::blade:
                if (!(blade.base_width > 0.0 && blade.thickness > 0.0))
                    throw ConfigError("blade base width and thickness must be > 0");
                if (blade.taper_rate < 0.0 || blade.curvature < 0.0)
                    throw ConfigError("blade taper and curvature must be >= 0");
                if (!(path_length_at(target_height) > 0.0))
                    throw ConfigError("blade path length vanishes below the target height");
                break;
            case PartKind::cylinder:
                if (!(cylinder.radius > 0.0)) throw ConfigError("cylinder radius must be > 0");
                break;
        }
    }
};

struct LayerPlan {
    std::size_t index = 0;
    double desired_height = 0.0;  // per-layer deposition height
    double base_height = 0.0;     // nominal height the layer is welded on
    double s_offset = 0.0;        // start of this layer on the base path
    WeldPath path;
    std::vector<PathSegment> segments;
};

inline void validate(const WeldPath& path) {
    if (path.points.size() < 2 || path.points.size() != path.s.size())
        throw GeometryError("path needs >= 2 points with matching arc-length coordinates");
    if (!(path.arc_length > 0.0)) throw GeometryError("path arc length must be > 0");
    for (std::size_t i = 1; i < path.s.size(); ++i)
        if (!(path.s[i] > path.s[i - 1]))
            throw GeometryError("path arc-length coordinates must strictly increase");
    if (path.closed) {
        const auto& a = path.points.front();
        const auto& b = path.points.back();
        if (std::hypot(a.x - b.x, a.y - b.y, a.z - b.z) > 1e-9)
            throw GeometryError("closed path must end where it starts");
    }
}

namespace detail {

inline WeldPath straight_path(double start, double length, double z) {
    WeldPath path;
    path.points = {{start, 0.0, z}, {start + length, 0.0, z}};
    path.s = {0.0, length};
    path.arc_length = length;
    return path;
}

// Arc of the circle with the given curvature, centred on the base midpoint,
// covering base coordinates [start, start + length].
inline WeldPath arc_path(double base_width, double curvature, double start, double length,
                         double z) {
    if (curvature == 0.0) return straight_path(start, length, z);
    const double radius = 1.0 / curvature;
    const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(length)) + 1);
    WeldPath path;
    path.points.reserve(n);
    path.s.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = length * static_cast<double>(i) / static_cast<double>(n - 1);
        const double theta = (start + s - 0.5 * base_width) * curvature;
        path.points.push_back({0.5 * base_width + radius * std::sin(theta),
                               radius * (1.0 - std::cos(theta)), z});
        path.s.push_back(s);
    }
    path.arc_length = length;
    return path;
}

inline WeldPath circle_path(double radius, double z) {
    const double circumference = 2.0 * std::numbers::pi * radius;
    constexpr std::size_t n = 361;
    WeldPath path;
    path.closed = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
        const double theta = 2.0 * std::numbers::pi * frac;
        path.points.push_back({radius * std::cos(theta), radius * std::sin(theta), z});
        path.s.push_back(circumference * frac);
    }
    path.points.back() = path.points.front();
    path.s.back() = circumference;
    path.arc_length = circumference;
    return path;
}

}  // namespace detail

/// Deposition path for the layer whose bottom is at `height_so_far`.
inline WeldPath build_path(const PartSpec& part, double height_so_far) {
    switch (part.kind) {
        case PartKind::wall:
            if (!(part.wall.width > 0.0)) throw GeometryError("wall width must be > 0");
            return detail::straight_path(0.0, part.wall.width, height_so_far);
        case PartKind::blade: {
            const double length = part.path_length_at(height_so_far);
            if (!(length > 0.0))
                throw GeometryError("blade path degenerates at height " +
                                    std::to_string(height_so_far) + " mm");
            return detail::arc_path(part.blade.base_width, part.blade.curvature,
                                    part.path_offset_at(height_so_far), length, height_so_far);
        }
        case PartKind::cylinder:
            if (!(part.cylinder.radius > 0.0)) throw GeometryError("cylinder radius must be > 0");
            return detail::circle_path(part.cylinder.radius, height_so_far);
    }
    throw GeometryError("unknown part kind");
}

inline std::vector<PathSegment> segment_path(const WeldPath& path, std::size_t n_segments) {
    if (n_segments < 1) throw DomainError("segment count must be >= 1");
    const double length = path.arc_length / static_cast<double>(n_segments);
    std::vector<PathSegment> segments(n_segments);
    for (std::size_t k = 0; k < n_segments; ++k) {
        segments[k].index = k;
        segments[k].s_start = length * static_cast<double>(k);
        segments[k].s_end = k + 1 == n_segments ? path.arc_length
                                                : length * static_cast<double>(k + 1);
        segments[k].length = length;
    }
    return segments;
}

/// Number of layers of height `layer_height` needed to reach `target_height`.
inline std::size_t layer_count(double target_height, double layer_height) {
    if (!(layer_height > 0.0)) throw DomainError("layer height must be > 0");
    // Guards against ratios like 2.34/2.34 landing a hair above an integer.
    return static_cast<std::size_t>(std::ceil(target_height / layer_height - 1e-9));
}

inline LayerPlan plan_layer(const PartSpec& part, std::size_t index, double layer_height,
                            std::size_t n_segments) {
    LayerPlan layer;
    layer.index = index;
    layer.desired_height = layer_height;
    layer.base_height = layer_height * static_cast<double>(index);
    layer.s_offset = part.path_offset_at(layer.base_height);
    layer.path = build_path(part, layer.base_height);
    layer.segments = segment_path(layer.path, n_segments);
    return layer;
}

inline std::vector<LayerPlan> slice_part(const PartSpec& part, double layer_height,
                                         std::size_t n_segments = 40) {
    const std::size_t n = layer_count(part.target_height, layer_height);
    std::vector<LayerPlan> layers;
    layers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) layers.push_back(plan_layer(part, i, layer_height, n_segments));
    return layers;
}

}  // namespace waam
