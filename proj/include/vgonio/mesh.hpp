#pragma once

#include "vgonio/linalg.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vgonio {

using Face = std::array<std::uint32_t, 3>;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend constexpr bool operator==(const Rgb&, const Rgb&) = default;
};

/// Triangle mesh (or point cloud when `faces` is empty) with one unit normal
/// per vertex. `colors` is either empty or one entry per vertex.
struct TriangleMesh {
    std::string name;
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Vec3> normals;
    std::vector<Rgb> colors;

    std::size_t vertex_count() const noexcept { return vertices.size(); }
    std::size_t face_count() const noexcept { return faces.size(); }
    bool has_colors() const noexcept { return !colors.empty(); }
};

struct BoundingBox {
    Vec3 min;
    Vec3 max;
};

BoundingBox bounding_box(std::span<const Vec3> points);

/// Throws unless indices are in range, faces are non-degenerate, normals are
/// unit length and attribute arrays match the vertex count.
void validate(const TriangleMesh& mesh);

inline constexpr int kDefaultKnn = 10;

struct KnnEdge {
    std::uint32_t target = 0;
    double length = 0.0;
    friend constexpr bool operator==(const KnnEdge&, const KnnEdge&) = default;
};

/// Symmetrized k-nearest-neighbour graph in CSR layout; each adjacency list
/// is sorted by target index.
struct KnnGraph {
    int k = 0;
    std::vector<std::size_t> offsets; // size vertex_count + 1
    std::vector<KnnEdge> edges;

    std::size_t vertex_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::span<const KnnEdge> neighbors(std::size_t v) const noexcept
    {
        return {edges.data() + offsets[v], edges.data() + offsets[v + 1]};
    }
    friend bool operator==(const KnnGraph&, const KnnGraph&) = default;
};

/// The `k` nearest other vertices of every vertex, ordered by (distance, index).
/// OpenMP-parallel over query vertices with a uniform hash grid.
std::vector<std::vector<std::uint32_t>> k_nearest(std::span<const Vec3> points, int k);

/// k-NN graph over the vertices, symmetrized, with mesh edges merged in.
KnnGraph build_knn_graph(const TriangleMesh& mesh, int k = kDefaultKnn);

/// Symmetrizes per-vertex neighbour lists and merges mesh edges.
KnnGraph assemble_graph(const TriangleMesh& mesh, std::span<const std::vector<std::uint32_t>> nearest, int k);

/// Unit outward normals. Meshes with faces use area-weighted face normals;
/// point clouds (and vertices with no usable incident area) use PCA over the
/// k nearest neighbours with orientation propagated along the graph.
std::vector<Vec3> estimate_normals(const TriangleMesh& mesh, int k = kDefaultKnn);

/// Unnormalized area-weighted normal sums, gathered per vertex in ascending
/// face order.
std::vector<Vec3> area_weighted_normal_sums(const TriangleMesh& mesh);

/// Flips every normal when more vertices point toward the centroid than away
/// from it. Returns true if a flip happened.
bool orient_outward(std::span<const Vec3> vertices, std::span<Vec3> normals);

} // namespace vgonio
