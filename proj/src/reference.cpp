#include "vgonio/reference.hpp"

#include "vgonio/error.hpp"

#include <algorithm>
#include <string>

namespace vgonio::reference {

std::vector<std::vector<std::uint32_t>> k_nearest(std::span<const Vec3> points, int k)
{
    if (k < 1) throw Error(ErrorCode::InvalidParams, "k must be at least 1");
    if (points.size() <= static_cast<std::size_t>(k)) {
        throw Error(ErrorCode::TooFewVertices, "k-NN with k=" + std::to_string(k) + " needs more vertices");
    }
    const auto kk = static_cast<std::size_t>(k);
    std::vector<std::vector<std::uint32_t>> out(points.size());
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::size_t i = 0; i < points.size(); ++i) {
        all.clear();
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (j != i) all.emplace_back(squared_distance(points[i], points[j]), static_cast<std::uint32_t>(j));
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kk), all.end());
        out[i].resize(kk);
        for (std::size_t m = 0; m < kk; ++m) out[i][m] = all[m].second;
    }
    return out;
}

KnnGraph build_knn_graph(const TriangleMesh& mesh, int k)
{
    const auto nearest = reference::k_nearest(std::span<const Vec3>(mesh.vertices), k);
    return assemble_graph(mesh, nearest, k);
}

std::vector<Vec3> area_weighted_normal_sums(const TriangleMesh& mesh)
{
    std::vector<Vec3> sums(mesh.vertex_count());
    for (const Face& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3 c = cross(mesh.vertices[f[1]] - a, mesh.vertices[f[2]] - a);
        for (std::uint32_t v : f) sums[v] += c;
    }
    return sums;
}

} // namespace vgonio::reference
