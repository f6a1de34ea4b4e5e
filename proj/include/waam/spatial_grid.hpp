#pragma once

// Uniform hash grid for fixed-radius and k-nearest-neighbour queries on
// point clouds of a few hundred thousand points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "waam/geometry.hpp"

namespace waam {

class SpatialGrid {
public:
    SpatialGrid(std::span<const Point3> points, double cell) : points_(points), cell_(cell) {
        for (std::uint32_t i = 0; i < points.size(); ++i) cells_[key(coord(points[i]))].push_back(i);
    }

    /// Indices of all points within `radius` of point i (excluding i), radius <= cell.
    void radius_neighbors(std::size_t i, double radius, std::vector<std::uint32_t>& out) const {
        out.clear();
        const auto c = coord(points_[i]);
        const double r2 = radius * radius;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = cells_.find(key({c.x + dx, c.y + dy, c.z + dz}));
                    if (it == cells_.end()) continue;
                    for (auto j : it->second)
                        if (j != i && dist2(points_[i], points_[j]) <= r2) out.push_back(j);
                }
    }

    /// Mean distance from point i to its k nearest neighbours (excluding i).
    [[nodiscard]] double mean_knn_distance(std::size_t i, std::size_t k) const {
        const auto c = coord(points_[i]);
        std::vector<double> best;  // max-heap of the k smallest squared distances
        best.reserve(k + 1);
        for (int ring = 0;; ++ring) {
            visit_shell(c, ring, [&](std::uint32_t j) {
                if (j == i) return;
                const double d2 = dist2(points_[i], points_[j]);
                if (best.size() < k) {
                    best.push_back(d2);
                    std::push_heap(best.begin(), best.end());
                } else if (d2 < best.front()) {
                    std::pop_heap(best.begin(), best.end());
                    best.back() = d2;
                    std::push_heap(best.begin(), best.end());
                }
            });
            // Every unvisited point is at least ring * cell away.
            const double reach = static_cast<double>(ring) * cell_;
            if (best.size() == k && best.front() <= reach * reach) break;
            if (ring > max_ring_) break;
        }
        double sum = 0.0;
        for (double d2 : best) sum += std::sqrt(d2);
        return best.empty() ? 0.0 : sum / static_cast<double>(best.size());
    }

private:
    struct Coord {
        std::int64_t x, y, z;
    };

    [[nodiscard]] Coord coord(const Point3& p) const {
        return {static_cast<std::int64_t>(std::floor(p.x / cell_)),
                static_cast<std::int64_t>(std::floor(p.y / cell_)),
                static_cast<std::int64_t>(std::floor(p.z / cell_))};
    }

    [[nodiscard]] Coord coord_offset(Coord c, std::int64_t dx, std::int64_t dy, std::int64_t dz) const {
        return {c.x + dx, c.y + dy, c.z + dz};
    }

    static std::uint64_t key(Coord c) {
        const auto ux = static_cast<std::uint64_t>(c.x) & 0x1fffff;
        const auto uy = static_cast<std::uint64_t>(c.y) & 0x1fffff;
        const auto uz = static_cast<std::uint64_t>(c.z) & 0x1fffff;
        return (ux << 42) | (uy << 21) | uz;
    }

    static double dist2(const Point3& a, const Point3& b) {
        const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
        return dx * dx + dy * dy + dz * dz;
    }

    template <class F>
    void visit_shell(Coord c, int ring, F&& f) const {
        const std::int64_t r = ring;
        for (std::int64_t dx = -r; dx <= r; ++dx)
            for (std::int64_t dy = -r; dy <= r; ++dy)
                for (std::int64_t dz = -r; dz <= r; ++dz) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
                    auto it = cells_.find(key(coord_offset(c, dx, dy, dz)));
                    if (it == cells_.end()) continue;
                    for (auto j : it->second) f(j);
                }
    }

    std::span<const Point3> points_;
    double cell_;
    int max_ring_ = 64;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

}  // namespace waam
