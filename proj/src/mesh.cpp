#include "vgonio/mesh.hpp"

#include "vgonio/error.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>

namespace vgonio {

BoundingBox bounding_box(std::span<const Vec3> points)
{
    if (points.empty()) return {};
    BoundingBox box{points.front(), points.front()};
    for (const Vec3& p : points) {
        box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y), std::min(box.min.z, p.z)};
        box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y), std::max(box.max.z, p.z)};
    }
    return box;
}

void validate(const TriangleMesh& mesh)
{
    const std::size_t n = mesh.vertex_count();
    if (n == 0) throw Error(ErrorCode::EmptyMesh, "mesh has no vertices");
    for (const Vec3& v : mesh.vertices) {
        if (!is_finite(v)) throw Error(ErrorCode::NonFinite, "vertex coordinate is not finite");
    }
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& face = mesh.faces[f];
        for (std::uint32_t idx : face) {
            if (idx >= n) throw Error(ErrorCode::OutOfRange, "face " + std::to_string(f) + " index out of range");
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw Error(ErrorCode::DegenerateGeometry, "face " + std::to_string(f) + " repeats a vertex");
        }
    }
    if (mesh.normals.size() != n) throw Error(ErrorCode::InvalidParams, "normal count differs from vertex count");
    for (const Vec3& nv : mesh.normals) {
        if (!is_finite(nv) || std::abs(norm(nv) - 1.0) > 1e-6) {
            throw Error(ErrorCode::InvalidParams, "normal is not unit length");
        }
    }
    if (!mesh.colors.empty() && mesh.colors.size() != n) {
        throw Error(ErrorCode::InvalidParams, "color count differs from vertex count");
    }
}

namespace {

// Uniform hash grid over the points. Cell size is tuned so that occupied cells
// hold roughly `target` points, which works for surfaces and volumes alike.
class HashGrid {
public:
    HashGrid(std::span<const Vec3> points, std::size_t target) : points_(points)
    {
        box_ = bounding_box(points);
        const Vec3 ext = box_.max - box_.min;
        const double longest = std::max({ext.x, ext.y, ext.z});
        if (longest <= 0.0) {
            cell_ = 1.0;
        } else {
            cell_ = longest / std::cbrt(static_cast<double>(points.size()));
            for (int pass = 0; pass < 3; ++pass) {
                const double per_cell = static_cast<double>(points.size()) / static_cast<double>(count_cells());
                const double scale = std::clamp(std::sqrt(static_cast<double>(target) / per_cell), 0.25, 4.0);
                if (std::abs(scale - 1.0) < 0.1) break;
                cell_ *= scale;
            }
            cell_ = std::max(cell_, longest * 1e-6);
        }
        build();
    }

    double cell_size() const noexcept { return cell_; }

    std::array<std::int64_t, 3> cell_of(const Vec3& p) const noexcept
    {
        return {coord(p.x - box_.min.x), coord(p.y - box_.min.y), coord(p.z - box_.min.z)};
    }

    std::array<std::int64_t, 3> dims() const noexcept { return dims_; }

    /// Point indices in a cell, or an empty span.
    std::span<const std::uint32_t> cell(std::int64_t ix, std::int64_t iy, std::int64_t iz) const
    {
        if (ix < 0 || iy < 0 || iz < 0 || ix >= dims_[0] || iy >= dims_[1] || iz >= dims_[2]) return {};
        const auto it = cells_.find(key(ix, iy, iz));
        if (it == cells_.end()) return {};
        return {members_.data() + it->second.first, members_.data() + it->second.second};
    }

    const Vec3& origin() const noexcept { return box_.min; }

private:
    std::int64_t coord(double offset) const noexcept
    {
        return static_cast<std::int64_t>(std::floor(offset / cell_));
    }

    static std::uint64_t key(std::int64_t x, std::int64_t y, std::int64_t z) noexcept
    {
        return (static_cast<std::uint64_t>(x) << 42) | (static_cast<std::uint64_t>(y) << 21) |
               static_cast<std::uint64_t>(z);
    }

    std::size_t count_cells() const
    {
        std::vector<std::uint64_t> keys;
        keys.reserve(points_.size());
        for (const Vec3& p : points_) {
            const auto c = cell_of(p);
            keys.push_back(key(c[0], c[1], c[2]));
        }
        std::sort(keys.begin(), keys.end());
        return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
    }

    void build()
    {
        constexpr std::int64_t kMaxDim = (std::int64_t{1} << 21) - 1;
        const Vec3 ext = box_.max - box_.min;
        const double needed = std::max({ext.x, ext.y, ext.z}) / static_cast<double>(kMaxDim);
        cell_ = std::max(cell_, needed * 1.0001);
        for (int a = 0; a < 3; ++a) dims_[a] = coord(ext[a]) + 1;

        std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto c = cell_of(points_[i]);
            keyed[i] = {key(c[0], c[1], c[2]), static_cast<std::uint32_t>(i)};
        }
        std::sort(keyed.begin(), keyed.end());
        members_.resize(keyed.size());
        for (std::size_t i = 0; i < keyed.size(); ++i) {
            members_[i] = keyed[i].second;
            auto [it, inserted] = cells_.try_emplace(keyed[i].first, i, i + 1);
            if (!inserted) it->second.second = i + 1;
        }
    }

    std::span<const Vec3> points_;
    BoundingBox box_;
    double cell_ = 1.0;
    std::array<std::int64_t, 3> dims_{1, 1, 1};
    std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> cells_;
    std::vector<std::uint32_t> members_;
};

using Candidate = std::pair<double, std::uint32_t>; // (squared distance, index)

std::vector<std::uint32_t> query_grid(const HashGrid& grid, std::span<const Vec3> points, std::size_t self,
                                      std::size_t k)
{
    const Vec3& q = points[self];
    const auto c = grid.cell_of(q);
    const auto dims = grid.dims();
    const std::int64_t max_ring = std::max({dims[0], dims[1], dims[2]});
    const double h = grid.cell_size();
    const Vec3 local = q - grid.origin();

    constexpr std::int64_t kMaxRings = 32;

    std::vector<Candidate> found;
    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
        if (ring > kMaxRings) {
            // Isolated point: scanning everything is cheaper than more rings.
            found.clear();
            for (std::size_t j = 0; j < points.size(); ++j) {
                if (j != self) found.emplace_back(squared_distance(q, points[j]), static_cast<std::uint32_t>(j));
            }
            break;
        }
        for (std::int64_t dx = -ring; dx <= ring; ++dx) {
            for (std::int64_t dy = -ring; dy <= ring; ++dy) {
                const bool edge_xy = std::abs(dx) == ring || std::abs(dy) == ring;
                for (std::int64_t dz = -ring; dz <= ring; ++dz) {
                    if (!edge_xy && std::abs(dz) != ring) continue;
                    for (std::uint32_t j : grid.cell(c[0] + dx, c[1] + dy, c[2] + dz)) {
                        if (j == self) continue;
                        found.emplace_back(squared_distance(q, points[j]), j);
                    }
                }
            }
        }
        if (found.size() < k) continue;
        std::nth_element(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k - 1), found.end());
        // Closest possible distance of any point outside the visited block of cells.
        double margin = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            const double lo = local[a] - static_cast<double>(c[a] - ring) * h;
            const double hi = static_cast<double>(c[a] + ring + 1) * h - local[a];
            margin = std::min({margin, lo, hi});
        }
        if (found[k - 1].first < margin * margin) break;
    }
    std::partial_sort(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k), found.end());
    std::vector<std::uint32_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = found[i].second;
    return out;
}

void check_knn_args(std::size_t n, int k)
{
    if (k < 1) throw Error(ErrorCode::InvalidParams, "k must be at least 1");
    if (n <= static_cast<std::size_t>(k)) {
        throw Error(ErrorCode::TooFewVertices,
                    "k-NN with k=" + std::to_string(k) + " needs more than " + std::to_string(k) + " vertices");
    }
}

} // namespace

std::vector<std::vector<std::uint32_t>> k_nearest(std::span<const Vec3> points, int k)
{
    check_knn_args(points.size(), k);
    const auto kk = static_cast<std::size_t>(k);
    const HashGrid grid(points, std::max<std::size_t>(kk, 4));
    std::vector<std::vector<std::uint32_t>> out(points.size());
    const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = query_grid(grid, points, static_cast<std::size_t>(i), kk);
    }
    return out;
}

KnnGraph assemble_graph(const TriangleMesh& mesh, std::span<const std::vector<std::uint32_t>> nearest, int k)
{
    const std::size_t n = mesh.vertex_count();
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t j : nearest[i]) {
            adj[i].push_back(j);
            adj[j].push_back(static_cast<std::uint32_t>(i));
        }
    }
    for (const Face& f : mesh.faces) {
        for (int e = 0; e < 3; ++e) {
            const std::uint32_t a = f[e];
            const std::uint32_t b = f[(e + 1) % 3];
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    }

    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
        auto& list = adj[static_cast<std::size_t>(i)];
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }

    KnnGraph g;
    g.k = k;
    g.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + adj[i].size();
    g.edges.resize(g.offsets[n]);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        std::size_t out = g.offsets[ui];
        for (std::uint32_t j : adj[ui]) {
            g.edges[out++] = {j, distance(mesh.vertices[ui], mesh.vertices[j])};
        }
    }
    return g;
}

KnnGraph build_knn_graph(const TriangleMesh& mesh, int k)
{
    const auto nearest = k_nearest(mesh.vertices, k);
    return assemble_graph(mesh, nearest, k);
}

std::vector<Vec3> area_weighted_normal_sums(const TriangleMesh& mesh)
{
    const std::size_t n = mesh.vertex_count();
    // Vertex-to-face incidence in ascending face order (counting sort).
    std::vector<std::size_t> offsets(n + 1, 0);
    for (const Face& f : mesh.faces) {
        for (std::uint32_t v : f) ++offsets[v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
    std::vector<std::uint32_t> incident(offsets[n]);
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        for (std::uint32_t v : mesh.faces[fi]) incident[cursor[v]++] = static_cast<std::uint32_t>(fi);
    }

    std::vector<Vec3> sums(n);
    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        Vec3 acc;
        for (std::size_t e = offsets[ui]; e < offsets[ui + 1]; ++e) {
            const Face& f = mesh.faces[incident[e]];
            const Vec3& a = mesh.vertices[f[0]];
            acc += cross(mesh.vertices[f[1]] - a, mesh.vertices[f[2]] - a);
        }
        sums[ui] = acc;
    }
    return sums;
}

bool orient_outward(std::span<const Vec3> vertices, std::span<Vec3> normals)
{
    Vec3 centroid;
    for (const Vec3& v : vertices) centroid += v;
    centroid *= 1.0 / static_cast<double>(vertices.size());

    std::size_t outward = 0, inward = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const double d = dot(vertices[i] - centroid, normals[i]);
        if (d > 0.0) ++outward;
        if (d < 0.0) ++inward;
    }
    if (inward <= outward) return false;
    for (Vec3& nv : normals) nv = -nv;
    return true;
}

namespace {

// Minimum-spanning-tree propagation (weight 1 - |ni.nj|) so neighbouring
// normals agree in sign; each component is seeded at its vertex farthest from
// the centroid, pointed away from the centroid.
void propagate_orientation(const TriangleMesh& mesh, const KnnGraph& graph, std::vector<Vec3>& normals)
{
    const std::size_t n = mesh.vertex_count();
    Vec3 centroid;
    for (const Vec3& v : mesh.vertices) centroid += v;
    centroid *= 1.0 / static_cast<double>(n);

    std::vector<std::uint32_t> by_distance(n);
    for (std::size_t i = 0; i < n; ++i) by_distance[i] = static_cast<std::uint32_t>(i);
    std::stable_sort(by_distance.begin(), by_distance.end(), [&](std::uint32_t a, std::uint32_t b) {
        return squared_distance(mesh.vertices[a], centroid) > squared_distance(mesh.vertices[b], centroid);
    });

    std::vector<char> done(n, 0);
    using Item = std::tuple<double, std::uint32_t, std::uint32_t>; // (weight, child, parent)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::uint32_t root : by_distance) {
        if (done[root]) continue;
        if (dot(mesh.vertices[root] - centroid, normals[root]) < 0.0) normals[root] = -normals[root];
        done[root] = 1;
        for (const KnnEdge& e : graph.neighbors(root)) {
            heap.emplace(1.0 - std::abs(dot(normals[root], normals[e.target])), e.target, root);
        }
        while (!heap.empty()) {
            const auto [w, child, parent] = heap.top();
            heap.pop();
            if (done[child]) continue;
            done[child] = 1;
            if (dot(normals[child], normals[parent]) < 0.0) normals[child] = -normals[child];
            for (const KnnEdge& e : graph.neighbors(child)) {
                if (!done[e.target]) {
                    heap.emplace(1.0 - std::abs(dot(normals[child], normals[e.target])), e.target, child);
                }
            }
        }
    }
}

} // namespace

std::vector<Vec3> estimate_normals(const TriangleMesh& mesh, int k)
{
    const std::size_t n = mesh.vertex_count();
    if (n == 0) throw Error(ErrorCode::EmptyMesh, "mesh has no vertices");

    std::vector<Vec3> normals(n);
    std::vector<char> missing(n, 1);
    if (!mesh.faces.empty()) {
        const auto sums = area_weighted_normal_sums(mesh);
        for (std::size_t i = 0; i < n; ++i) {
            if (squared_norm(sums[i]) > 0.0) {
                normals[i] = normalized(sums[i]);
                missing[i] = 0;
            }
        }
    }
    const bool point_cloud = mesh.faces.empty();
    const bool any_missing = std::find(missing.begin(), missing.end(), 1) != missing.end();

    if (any_missing) {
        const int kk = std::min<int>(k, static_cast<int>(n) - 1);
        if (kk < 2 || (point_cloud && n <= static_cast<std::size_t>(k))) {
            throw Error(ErrorCode::DegenerateGeometry,
                        "cannot estimate normals: vertex without incident area and too few neighbours");
        }
        const auto nearest = k_nearest(mesh.vertices, kk);
        const auto sn = static_cast<std::int64_t>(n);
        bool degenerate = false;
#pragma omp parallel for schedule(static) reduction(|| : degenerate)
        for (std::int64_t i = 0; i < sn; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (!missing[ui]) continue;
            std::vector<Vec3> local{mesh.vertices[ui]};
            for (std::uint32_t j : nearest[ui]) local.push_back(mesh.vertices[j]);
            try {
                normals[ui] = pca_min_component(local).normal;
            } catch (const Error&) {
                degenerate = true;
            }
        }
        if (degenerate) throw Error(ErrorCode::DegenerateGeometry, "neighbourhood of a vertex is degenerate");

        if (point_cloud) {
            const KnnGraph graph = assemble_graph(mesh, nearest, kk);
            propagate_orientation(mesh, graph, normals);
        } else {
            // Align each PCA normal with the surrounding face-derived normals.
            for (std::size_t i = 0; i < n; ++i) {
                if (!missing[i]) continue;
                Vec3 around;
                for (std::uint32_t j : nearest[i]) {
                    if (!missing[j]) around += normals[j];
                }
                if (dot(around, normals[i]) < 0.0) normals[i] = -normals[i];
            }
        }
    }
    orient_outward(mesh.vertices, normals);
    return normals;
}

} // namespace vgonio
