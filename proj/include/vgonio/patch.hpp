#pragma once

#include "vgonio/mesh.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace vgonio {

enum class DistanceMetric { Geodesic, Euclidean };

std::string_view to_string(DistanceMetric metric) noexcept;
DistanceMetric parse_metric(std::string_view text);

inline constexpr std::size_t kMinPatchSize = 6;

/// Vertices within distance `radius` of a seed vertex. Members are stored in
/// ascending vertex index order.
struct Patch {
    std::vector<std::uint32_t> indices;
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    std::vector<double> distances; ///< distance from the seed under `metric`
    Vec3 center;                   ///< seed vertex position
    double radius = 0.0;           ///< largest member distance from the seed
    double requested_radius = 0.0;
    DistanceMetric metric = DistanceMetric::Geodesic;
    std::uint32_t seed = 0;
    double snap_distance = 0.0; ///< distance from a requested point to the seed (0 when seeded directly)

    std::size_t size() const noexcept { return indices.size(); }
};

/// Graph distances from `source` over `graph`, stopping at `limit`; returns
/// (vertex, distance) pairs for every vertex reached within the limit.
std::vector<std::pair<std::uint32_t, double>> dijkstra_within(const KnnGraph& graph, std::uint32_t source, double limit);

Patch extract_patch_by_seed(const TriangleMesh& mesh, const KnnGraph& graph, std::uint32_t seed, double radius,
                            DistanceMetric metric, std::size_t min_size = kMinPatchSize);

/// Nearest vertex to `point` (lowest index on ties) and its distance.
std::pair<std::uint32_t, double> nearest_vertex(const TriangleMesh& mesh, const Vec3& point);

/// Snaps `point` to the nearest vertex and extracts the patch there. Fails with
/// SnapTooFar when the snap is longer than the radius.
Patch extract_patch_by_point(const TriangleMesh& mesh, const KnnGraph& graph, const Vec3& point, double radius,
                             DistanceMetric metric, std::size_t min_size = kMinPatchSize);

} // namespace vgonio
