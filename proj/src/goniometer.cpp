#include "vgonio/goniometer.hpp"

#include "vgonio/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vgonio {

void validate(const MeasurementParams& params)
{
    if (!std::isfinite(params.lambda) || params.lambda < 0.0) {
        throw Error(ErrorCode::InvalidParams, "lambda must be >= 0, got " + std::to_string(params.lambda));
    }
    if (!std::isfinite(params.radius) || params.radius < 0.0) {
        throw Error(ErrorCode::InvalidParams, "radius must be > 0, got " + std::to_string(params.radius));
    }
}

double dihedral_angle_deg(const Vec3& mean_normal, const Vec3& v_plus, const Vec3& v_minus) noexcept
{
    const auto sign = [](double x) { return x >= 0.0 ? 1.0 : -1.0; };
    const double c = sign(dot(mean_normal, v_plus)) * sign(dot(mean_normal, v_minus)) * dot(v_plus, v_minus);
    return 180.0 - std::acos(std::clamp(c, -1.0, 1.0)) * (180.0 / std::numbers::pi);
}

SegmentationFrame build_frame(const Patch& patch, double lambda)
{
    const std::size_t n = patch.size();
    if (n < 2) throw Error(ErrorCode::DegeneratePatch, "patch has fewer than 2 vertices");
    if (!(patch.radius > 0.0)) throw Error(ErrorCode::DegeneratePatch, "patch radius is zero");

    Sym3 gram;
    Vec3 mean;
    for (const Vec3& nv : patch.normals) {
        gram += Sym3::outer(nv);
        mean += nv;
    }
    mean *= 1.0 / static_cast<double>(n);
    if (squared_norm(mean) == 0.0) throw Error(ErrorCode::DegenerateFrame, "patch normals average to zero");

    SegmentationFrame frame;
    frame.tangent = eigen_sym3(gram).vectors[0];
    // The eigenvector sign follows the coordinate axes. Tie it to the mesh
    // instead: the lowest-index member clearly off the normal plane of t
    // through the center lies on the positive side. This keeps side names
    // stable under rigid motion.
    const double off_tolerance = 1e-6 * patch.radius;
    for (std::size_t i = 0; i < n; ++i) {
        const double along = dot(frame.tangent, patch.positions[i] - patch.center);
        if (std::abs(along) > off_tolerance) {
            if (along < 0.0) frame.tangent = -frame.tangent;
            break;
        }
    }
    frame.mean_normal = normalized(mean);
    const Vec3 c = cross(frame.tangent, frame.mean_normal);
    if (norm(c) < kDegenerateFrameTolerance) {
        throw Error(ErrorCode::DegenerateFrame, "break tangent is parallel to the mean normal");
    }
    frame.binormal = normalized(c);

    const double weight = lambda / patch.radius;
    frame.projections.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        frame.projections[i] = dot(frame.binormal, patch.normals[i] + weight * (patch.positions[i] - patch.center));
    }
    return frame;
}

MeasurementResult measure(const Patch& patch, const MeasurementParams& params)
{
    validate(params);
    if (!(params.radius > 0.0)) throw Error(ErrorCode::InvalidParams, "radius must be > 0");

    MeasurementResult out;
    out.params = params;
    out.frame = build_frame(patch, params.lambda);
    out.frame.split = within_ss_split(out.frame.projections);

    const double s = out.frame.split.threshold;
    std::vector<Vec3> minus, plus;
    out.labels.resize(patch.size());
    for (std::size_t i = 0; i < patch.size(); ++i) {
        if (out.frame.projections[i] >= s) {
            out.labels[i] = Side::Plus;
            plus.push_back(patch.positions[i]);
        } else {
            out.labels[i] = Side::Minus;
            minus.push_back(patch.positions[i]);
        }
    }
    if (minus.size() < kMinSideSize || plus.size() < kMinSideSize) {
        throw Error(ErrorCode::SideTooSmall, "split left " + std::to_string(minus.size()) + " / " +
                                                 std::to_string(plus.size()) + " vertices per side");
    }

    out.fits.minus = pca_min_component(minus);
    out.fits.plus = pca_min_component(plus);
    out.fits.minus_count = minus.size();
    out.fits.plus_count = plus.size();
    out.theta_deg = dihedral_angle_deg(out.frame.mean_normal, out.fits.plus.normal, out.fits.minus.normal);
    out.fit = out.fits.minus.mse + out.fits.plus.mse;
    out.patch = patch;
    return out;
}

MeasurementResult preview_segmentation(const Patch& patch, const MeasurementParams& params)
{
    MeasurementResult out = measure(patch, params);
    out.persistent = false;
    return out;
}

MeshContext MeshContext::build(TriangleMesh mesh, int knn)
{
    MeshContext ctx;
    ctx.graph = build_knn_graph(mesh, knn);
    ctx.mesh = std::move(mesh);
    return ctx;
}

MeasurementResult measure_at(const MeshContext& context, const MeasurementRequest& request, bool persistent)
{
    validate(request.params);
    const MeasurementParams& p = request.params;
    Patch patch;
    if (request.seed) {
        patch = extract_patch_by_seed(context.mesh, context.graph, *request.seed, p.radius, p.metric);
    } else if (request.point) {
        patch = extract_patch_by_point(context.mesh, context.graph, *request.point, p.radius, p.metric);
    } else {
        throw Error(ErrorCode::InvalidParams, "request names neither a point nor a seed");
    }
    MeasurementResult out = persistent ? measure(patch, p) : preview_segmentation(patch, p);
    out.mesh_name = context.mesh.name;
    out.requested_point = request.point;
    return out;
}

namespace {

BatchOutcome run_one(const MeshContext& context, const MeasurementRequest& request)
{
    BatchOutcome outcome;
    try {
        outcome.result = measure_at(context, request);
    } catch (const Error& e) {
        outcome.error = e.code();
        outcome.message = e.what();
    }
    return outcome;
}

} // namespace

std::vector<BatchOutcome> measure_batch(const MeshContext& context, std::span<const MeasurementRequest> requests)
{
    std::vector<BatchOutcome> out(requests.size());
    const auto n = static_cast<std::int64_t>(requests.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = run_one(context, requests[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<BatchOutcome> reference::measure_batch(const MeshContext& context,
                                                   std::span<const MeasurementRequest> requests)
{
    std::vector<BatchOutcome> out;
    out.reserve(requests.size());
    for (const MeasurementRequest& r : requests) out.push_back(run_one(context, r));
    return out;
}

double label_accuracy(std::span<const Side> labels, std::span<const std::uint32_t> indices,
                      std::span<const std::uint8_t> truth, std::uint8_t ignore)
{
    std::size_t agree = 0, scored = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::uint8_t t = truth[indices[i]];
        if (t == ignore) continue;
        ++scored;
        if (static_cast<std::uint8_t>(labels[i]) == t) ++agree;
    }
    if (scored == 0) return 1.0;
    const double a = static_cast<double>(agree) / static_cast<double>(scored);
    return std::max(a, 1.0 - a);
}

} // namespace vgonio
