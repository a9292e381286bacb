#include "oracles.hpp"

#include "vgonio/error.hpp"
#include "vgonio/goniometer.hpp"
#include "vgonio/reference.hpp"
#include "vgonio/synthetic.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

using namespace vgonio;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = 3.14159265358979323846;

MeasurementRequest at_seed(std::uint32_t seed, double radius, double lambda = 2.0,
                           DistanceMetric metric = DistanceMetric::Geodesic)
{
    MeasurementRequest r;
    r.seed = seed;
    r.params = {lambda, metric, radius};
    return r;
}

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidParams;
}

/// Angle between two planes with the given unit normals, computed from the
/// normals alone (independent of the fitted result).
double angle_between_outward_normals(const Vec3& a, const Vec3& b)
{
    return 180.0 - std::acos(std::clamp(dot(a, b), -1.0, 1.0)) * 180.0 / kPi;
}

} // namespace

TEST_CASE("dihedral angle from plane normals")
{
    const Vec3 n{0, 0, 1};
    const double c = std::cos(kPi / 4), s = std::sin(kPi / 4);
    CHECK_THAT(dihedral_angle_deg(n, {0, c, s}, {0, -c, s}), WithinAbs(90.0, 1e-12));
    CHECK(dihedral_angle_deg(n, {0, 0, 1}, {0, 0, 1}) == 180.0);
    CHECK(dihedral_angle_deg(n, {0, 0, 1}, {0, 0, -1}) == 180.0);
    // perpendicular to the mean normal: sign(0) = +1
    CHECK_THAT(dihedral_angle_deg(n, {1, 0, 0}, {0, 1, 0}), WithinAbs(90.0, 1e-12));
    // cosine slightly above 1 is clamped
    const Vec3 big{0, 0, 1.0000000001};
    CHECK(dihedral_angle_deg(n, big, big) == 180.0);
    CHECK_FALSE(std::isnan(dihedral_angle_deg(n, big, -big)));
}

TEST_CASE("flat patch measures exactly 180 degrees")
{
    WedgeSpec spec;
    spec.angle_deg = 180.0;
    spec.vertices_per_side = 800;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    // all normals equal: the tangent is any vector orthogonal to them
    const MeasurementResult r = measure_at(ctx, at_seed(shape.crease_vertex, 0.4));
    CHECK(r.theta_deg == 180.0);
    CHECK(r.fit == 0.0);
}

TEST_CASE("90 degree wedge: angle and labels match the construction")
{
    WedgeSpec spec;
    spec.angle_deg = 90.0;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    for (DistanceMetric metric : {DistanceMetric::Geodesic, DistanceMetric::Euclidean}) {
        const MeasurementResult r = measure_at(ctx, at_seed(shape.crease_vertex, 0.4, 2.0, metric));
        CHECK_THAT(r.theta_deg, WithinAbs(90.0, 0.1));
        CHECK(label_accuracy(r.labels, r.patch.indices, shape.truth) == 1.0);
        CHECK(r.fits.minus_count + r.fits.plus_count == r.patch.size());
        CHECK(r.fit == r.fits.minus.mse + r.fits.plus.mse);
        const double s = r.frame.split.threshold;
        for (std::size_t i = 0; i < r.labels.size(); ++i) {
            CHECK((r.labels[i] == Side::Plus) == (r.frame.projections[i] >= s));
        }
        CHECK_THAT(angle_between_outward_normals(Vec3{0, std::cos(kPi / 4), std::sin(kPi / 4)},
                                                 Vec3{0, -std::cos(kPi / 4), std::sin(kPi / 4)}),
                   WithinAbs(r.theta_deg, 1e-9));
    }
}

TEST_CASE("frame is orthonormal")
{
    WedgeSpec spec;
    spec.angle_deg = 60.0;
    spec.noise_sigma = 0.002;
    spec.seed = 3;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    const MeasurementResult r = measure_at(ctx, at_seed(shape.crease_vertex, 0.3));
    CHECK(std::abs(dot(r.frame.tangent, r.frame.binormal)) < 1e-6);
    CHECK(std::abs(dot(r.frame.mean_normal, r.frame.binormal)) < 1e-6);
    CHECK_THAT(norm(r.frame.binormal), WithinAbs(1.0, 1e-12));
    CHECK(r.frame.projections.size() == r.patch.size());
    // crease runs along x
    CHECK(std::abs(r.frame.tangent.x) > 0.99);
}

TEST_CASE("1 degree wedge at sufficient density")
{
    WedgeSpec spec;
    spec.angle_deg = 1.0;
    spec.vertices_per_side = 4000;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    const MeasurementResult r = measure_at(ctx, at_seed(shape.crease_vertex, 0.3));
    CHECK_THAT(r.theta_deg, WithinAbs(1.0, 0.5));
}

TEST_CASE("lambda = 0 projects normals only")
{
    WedgeSpec spec;
    spec.angle_deg = 100.0;
    spec.noise_sigma = 0.002;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    const Patch p = extract_patch_by_seed(ctx.mesh, ctx.graph, shape.crease_vertex, 0.3, DistanceMetric::Geodesic);
    const SegmentationFrame f = build_frame(p, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(f.projections[i] == dot(f.binormal, p.normals[i]));
}

TEST_CASE("measurement is deterministic and matches preview")
{
    WedgeSpec spec;
    spec.angle_deg = 75.0;
    spec.noise_sigma = 0.003;
    spec.seed = 8;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    const Patch p = extract_patch_by_seed(ctx.mesh, ctx.graph, shape.crease_vertex, 0.35, DistanceMetric::Geodesic);
    const MeasurementParams params{2.0, DistanceMetric::Geodesic, 0.35};
    const MeasurementResult a = measure(p, params), b = measure(p, params), c = preview_segmentation(p, params);
    CHECK(std::memcmp(&a.theta_deg, &b.theta_deg, sizeof(double)) == 0);
    CHECK(a.fit == b.fit);
    CHECK(a.labels == b.labels);
    CHECK(c.theta_deg == a.theta_deg);
    CHECK(c.labels == a.labels);
    CHECK(a.persistent);
    CHECK_FALSE(c.persistent);
}

TEST_CASE("rigid motion and scale leave theta and labels unchanged")
{
    WedgeSpec spec;
    spec.angle_deg = 130.0;
    spec.noise_sigma = 0.003;
    spec.seed = 21;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext base = MeshContext::build(shape.mesh);
    const MeasurementResult ref = measure_at(base, at_seed(shape.crease_vertex, 0.35));

    std::mt19937_64 rng(12);
    for (int i = 0; i < 4; ++i) {
        const auto t = oracle::Rigid::random(rng);
        TriangleMesh m = shape.mesh;
        for (auto& v : m.vertices) v = t.apply(v);
        for (auto& n : m.normals) n = t.rotate(n);
        const MeasurementResult r = measure_at(MeshContext::build(m), at_seed(shape.crease_vertex, 0.35));
        CHECK_THAT(r.theta_deg, WithinAbs(ref.theta_deg, 1e-6));
        CHECK(r.labels == ref.labels);
    }
    for (double c : {0.5, 7.0, 1e3}) {
        TriangleMesh m = shape.mesh;
        for (auto& v : m.vertices) v *= c;
        const MeasurementResult r = measure_at(MeshContext::build(m), at_seed(shape.crease_vertex, 0.35 * c));
        CHECK_THAT(r.theta_deg, WithinAbs(ref.theta_deg, 1e-9));
        CHECK(r.labels == ref.labels);
    }
}

TEST_CASE("eigenvector sign flips do not change theta")
{
    WedgeSpec spec;
    spec.angle_deg = 40.0;
    spec.noise_sigma = 0.002;
    const SyntheticShape shape = make_wedge(spec);
    const MeasurementResult r = measure_at(MeshContext::build(shape.mesh), at_seed(shape.crease_vertex, 0.3));
    const Vec3 n = r.frame.mean_normal;
    for (double a : {1.0, -1.0})
        for (double b : {1.0, -1.0})
            CHECK(dihedral_angle_deg(n, a * r.fits.plus.normal, b * r.fits.minus.normal) == r.theta_deg);
}

TEST_CASE("parameter and geometry errors")
{
    WedgeSpec spec;
    spec.vertices_per_side = 400;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    CHECK(code_of([&] { measure_at(ctx, at_seed(shape.crease_vertex, 0.3, -1.0)); }) == ErrorCode::InvalidParams);
    CHECK(code_of([&] { measure_at(ctx, at_seed(shape.crease_vertex, std::nan(""))); }) == ErrorCode::InvalidParams);
    CHECK(code_of([&] { measure_at(ctx, at_seed(shape.crease_vertex, 0.0)); }) == ErrorCode::PatchTooSmall);
    CHECK(code_of([&] { measure_at(ctx, at_seed(99999, 0.3)); }) == ErrorCode::SeedOutOfRange);
    MeasurementRequest none;
    CHECK(code_of([&] { measure_at(ctx, none); }) == ErrorCode::InvalidParams);

    SECTION("tangent parallel to the mean normal")
    {
        // normals fanned evenly around z with a small z tilt: the mean is along z
        // and so is the smallest-eigenvalue direction of N N^T
        Patch p;
        p.radius = 1.0;
        for (int i = 0; i < 8; ++i) {
            const double a = 2 * kPi * i / 8;
            p.indices.push_back(static_cast<std::uint32_t>(i));
            p.positions.push_back({std::cos(a), std::sin(a), 0.0});
            p.normals.push_back(normalized(Vec3{std::cos(a), std::sin(a), 0.1}));
            p.distances.push_back(1.0);
        }
        CHECK(code_of([&] { measure(p, {2.0, DistanceMetric::Geodesic, 1.0}); }) == ErrorCode::DegenerateFrame);
    }
}

TEST_CASE("side too small")
{
    // 7 coplanar points with one far outlier in projection: one side gets 1 vertex
    Patch p;
    p.radius = 1.0;
    for (int i = 0; i < 7; ++i) {
        p.indices.push_back(static_cast<std::uint32_t>(i));
        p.positions.push_back({0.1 * i, 0.05 * (i % 3), 0});
        p.normals.push_back(normalized(Vec3{0, 0.01 * (i % 2), 1}));
        p.distances.push_back(0.1 * i);
    }
    p.normals[6] = normalized(Vec3{0, 1, 1});
    CHECK(code_of([&] { measure(p, {0.0, DistanceMetric::Geodesic, 1.0}); }) == ErrorCode::SideTooSmall);
}

TEST_CASE("parallel batch equals the serial reference")
{
    WedgeSpec spec;
    spec.angle_deg = 85.0;
    spec.noise_sigma = 0.004;
    spec.seed = 2;
    const SyntheticShape shape = make_wedge(spec);
    const MeshContext ctx = MeshContext::build(shape.mesh);
    std::vector<MeasurementRequest> reqs;
    for (int i = 0; i < 24; ++i) {
        MeasurementRequest q;
        q.point = Vec3{-0.6 + 0.05 * i, 0.0, 0.0};
        q.params = {0.5 * (i % 5), i % 2 ? DistanceMetric::Euclidean : DistanceMetric::Geodesic, 0.15 + 0.02 * (i % 7)};
        reqs.push_back(q);
    }
    reqs[5].params.radius = 0.0;   // PatchTooSmall
    reqs[9].params.lambda = -2.0;  // InvalidParams
    const auto fast = measure_batch(ctx, reqs);
    const auto slow = reference::measure_batch(ctx, reqs);
    REQUIRE(fast.size() == reqs.size());
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        INFO("request " << i);
        REQUIRE(fast[i].ok() == slow[i].ok());
        if (fast[i].ok()) {
            CHECK(std::memcmp(&fast[i].result->theta_deg, &slow[i].result->theta_deg, sizeof(double)) == 0);
            CHECK(fast[i].result->labels == slow[i].result->labels);
        } else {
            CHECK(fast[i].error == slow[i].error);
        }
    }
    CHECK(fast[5].error == ErrorCode::PatchTooSmall);
    CHECK(fast[9].error == ErrorCode::InvalidParams);
}

TEST_CASE("label accuracy takes the better matching and skips ignored vertices")
{
    const std::vector<Side> labels{Side::Minus, Side::Minus, Side::Plus, Side::Plus};
    const std::vector<std::uint32_t> idx{0, 1, 2, 3};
    const std::vector<std::uint8_t> truth{1, 1, 0, 2};
    CHECK(label_accuracy(labels, idx, truth) == 1.0);
    const std::vector<std::uint8_t> mixed{0, 1, 0, 1};
    CHECK(label_accuracy(labels, idx, mixed) == 0.5);
}
