#pragma once

// Serial reference implementations of the OpenMP kernels. They use the
// simplest possible algorithm for each kernel and exist to check the parallel
// versions (results must be bit-identical) and as the benchmark baseline.

#include "vgonio/goniometer.hpp"
#include "vgonio/mesh.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace vgonio::reference {

/// Brute-force O(n^2) k-nearest neighbours, ordered by (distance, index).
std::vector<std::vector<std::uint32_t>> k_nearest(std::span<const Vec3> points, int k);

KnnGraph build_knn_graph(const TriangleMesh& mesh, int k = kDefaultKnn);

/// Scatters each face's cross product into its three vertices, in face order.
std::vector<Vec3> area_weighted_normal_sums(const TriangleMesh& mesh);

/// Runs the requests one after another.
std::vector<BatchOutcome> measure_batch(const MeshContext& context, std::span<const MeasurementRequest> requests);

} // namespace vgonio::reference
