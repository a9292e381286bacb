#pragma once

#include "vgonio/error.hpp"
#include "vgonio/linalg.hpp"
#include "vgonio/mesh.hpp"
#include "vgonio/patch.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vgonio {

inline constexpr double kDefaultLambda = 2.0;

/// Below this length of t x n the tangent is considered parallel to the mean normal.
inline constexpr double kDegenerateFrameTolerance = 1e-9;

inline constexpr std::size_t kMinSideSize = 3;

struct MeasurementParams {
    double lambda = kDefaultLambda;
    DistanceMetric metric = DistanceMetric::Geodesic;
    double radius = 1.0;
};

/// Throws InvalidParams unless lambda >= 0 and radius > 0 (both finite).
void validate(const MeasurementParams& params);

enum class Side : std::uint8_t { Minus = 0, Plus = 1 };

/// Tangent / mean-normal / binormal frame used to split the patch.
struct SegmentationFrame {
    Vec3 tangent;     ///< smallest-eigenvalue eigenvector of sum N N^T
    Vec3 mean_normal; ///< normalized average of the patch normals
    Vec3 binormal;    ///< normalized tangent x mean_normal
    std::vector<double> projections;
    WithinSsSplit split;
};

struct PlaneFitPair {
    PlaneFit minus;
    PlaneFit plus;
    std::size_t minus_count = 0;
    std::size_t plus_count = 0;
};

struct MeasurementResult {
    double theta_deg = 0.0;
    double fit = 0.0; ///< minus.mse + plus.mse
    std::vector<Side> labels; ///< one per patch member, same order as patch.indices
    SegmentationFrame frame;
    PlaneFitPair fits;
    MeasurementParams params;
    Patch patch;
    std::string mesh_name;
    std::optional<Vec3> requested_point;
    bool persistent = true; ///< false for previews, which never reach a session log
};

/// Angle in degrees between two fitted planes, after orienting both plane
/// normals to agree with `mean_normal`: 180 - acos(sign(n.v+) sign(n.v-) v+.v-).
/// sign(0) is +1 and the cosine is clamped to [-1, 1].
double dihedral_angle_deg(const Vec3& mean_normal, const Vec3& v_plus, const Vec3& v_minus) noexcept;

/// Builds the segmentation frame and projections without splitting.
SegmentationFrame build_frame(const Patch& patch, double lambda);

/// Splits the patch into two sides and fits a plane to each.
MeasurementResult measure(const Patch& patch, const MeasurementParams& params);

/// Identical computation to `measure`, flagged non-persistent.
MeasurementResult preview_segmentation(const Patch& patch, const MeasurementParams& params);

/// A loaded mesh with the graph used for geodesic patches.
struct MeshContext {
    TriangleMesh mesh;
    KnnGraph graph;

    static MeshContext build(TriangleMesh mesh, int knn = kDefaultKnn);
};

/// Patch location: either a point to snap or an explicit seed vertex.
struct MeasurementRequest {
    std::optional<Vec3> point;
    std::optional<std::uint32_t> seed;
    MeasurementParams params;
};

/// Extracts the patch for `request` and measures it.
MeasurementResult measure_at(const MeshContext& context, const MeasurementRequest& request, bool persistent = true);

struct BatchOutcome {
    std::optional<MeasurementResult> result;
    std::optional<ErrorCode> error;
    std::string message;

    bool ok() const noexcept { return result.has_value(); }
};

/// Runs every request (OpenMP-parallel); outcomes are returned in request order.
std::vector<BatchOutcome> measure_batch(const MeshContext& context, std::span<const MeasurementRequest> requests);

/// Fraction of labels agreeing with `truth` under the better of the two
/// side-to-label matchings. Entries of `truth` equal to `ignore` are skipped.
double label_accuracy(std::span<const Side> labels, std::span<const std::uint32_t> indices,
                      std::span<const std::uint8_t> truth, std::uint8_t ignore = 2);

} // namespace vgonio
