#include "vgonio/patch.hpp"

#include "vgonio/error.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <string>

namespace vgonio {

std::string_view to_string(DistanceMetric metric) noexcept
{
    return metric == DistanceMetric::Geodesic ? "geodesic" : "euclidean";
}

DistanceMetric parse_metric(std::string_view text)
{
    if (text == "geodesic") return DistanceMetric::Geodesic;
    if (text == "euclidean") return DistanceMetric::Euclidean;
    throw Error(ErrorCode::InvalidParams, "unknown metric '" + std::string(text) + "'");
}

std::vector<std::pair<std::uint32_t, double>> dijkstra_within(const KnnGraph& graph, std::uint32_t source, double limit)
{
    const std::size_t n = graph.vertex_count();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<std::pair<std::uint32_t, double>> reached;

    dist[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[v]) continue;
        reached.emplace_back(v, d);
        for (const KnnEdge& e : graph.neighbors(v)) {
            const double nd = d + e.length;
            if (nd <= limit && nd < dist[e.target]) {
                dist[e.target] = nd;
                heap.emplace(nd, e.target);
            }
        }
    }
    return reached;
}

Patch extract_patch_by_seed(const TriangleMesh& mesh, const KnnGraph& graph, std::uint32_t seed, double radius,
                            DistanceMetric metric, std::size_t min_size)
{
    if (seed >= mesh.vertex_count()) {
        throw Error(ErrorCode::SeedOutOfRange, "seed " + std::to_string(seed) + " outside mesh of " +
                                                   std::to_string(mesh.vertex_count()) + " vertices");
    }
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorCode::PatchTooSmall, "radius must be positive, got " + std::to_string(radius));
    }

    std::vector<std::pair<std::uint32_t, double>> members;
    const Vec3& center = mesh.vertices[seed];
    if (metric == DistanceMetric::Geodesic) {
        if (graph.vertex_count() != mesh.vertex_count()) {
            throw Error(ErrorCode::InvalidParams, "graph does not match mesh");
        }
        members = dijkstra_within(graph, seed, radius);
    } else {
        for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
            const double d = distance(center, mesh.vertices[i]);
            if (d <= radius) members.emplace_back(static_cast<std::uint32_t>(i), d);
        }
    }
    if (members.size() < min_size) {
        throw Error(ErrorCode::PatchTooSmall, std::to_string(members.size()) + " vertices within radius " +
                                                  std::to_string(radius) + ", need " + std::to_string(min_size));
    }
    std::sort(members.begin(), members.end());

    Patch patch;
    patch.center = center;
    patch.requested_radius = radius;
    patch.metric = metric;
    patch.seed = seed;
    patch.indices.reserve(members.size());
    patch.positions.reserve(members.size());
    patch.normals.reserve(members.size());
    patch.distances.reserve(members.size());
    for (const auto& [v, d] : members) {
        patch.indices.push_back(v);
        patch.positions.push_back(mesh.vertices[v]);
        patch.normals.push_back(mesh.normals[v]);
        patch.distances.push_back(d);
        patch.radius = std::max(patch.radius, d);
    }
    return patch;
}

std::pair<std::uint32_t, double> nearest_vertex(const TriangleMesh& mesh, const Vec3& point)
{
    if (mesh.vertices.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no vertices");
    std::uint32_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        const double d2 = squared_distance(point, mesh.vertices[i]);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<std::uint32_t>(i);
        }
    }
    return {best, std::sqrt(best_d2)};
}

Patch extract_patch_by_point(const TriangleMesh& mesh, const KnnGraph& graph, const Vec3& point, double radius,
                             DistanceMetric metric, std::size_t min_size)
{
    if (!is_finite(point)) throw Error(ErrorCode::NonFinite, "requested point is not finite");
    const auto [seed, snap] = nearest_vertex(mesh, point);
    if (radius > 0.0 && snap > radius) {
        throw Error(ErrorCode::SnapTooFar, "nearest vertex is " + std::to_string(snap) + " away, beyond radius " +
                                               std::to_string(radius));
    }
    Patch patch = extract_patch_by_seed(mesh, graph, seed, radius, metric, min_size);
    patch.snap_distance = snap;
    return patch;
}

} // namespace vgonio
