#include "oracles.hpp"

#include "vgonio/error.hpp"
#include "vgonio/linalg.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace vgonio;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Sym3 from_eigen(const Eigen::Matrix3d& m) { return {m(0, 0), m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2)}; }

Eigen::Matrix3d to_eigen(const Sym3& a)
{
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = a(r, c);
    return m;
}

Eigen::Vector3d ev(const Vec3& v) { return {v.x, v.y, v.z}; }

} // namespace

TEST_CASE("eigen_sym3 on the identity keeps the coordinate axes")
{
    const EigenTriple e = eigen_sym3(Sym3::identity());
    for (int i = 0; i < 3; ++i) CHECK(e.values[i] == 1.0);
    CHECK(e.vectors[0] == Vec3{1, 0, 0});
    CHECK(e.vectors[1] == Vec3{0, 1, 0});
    CHECK(e.vectors[2] == Vec3{0, 0, 1});
}

TEST_CASE("eigen_sym3 sorts a diagonal matrix")
{
    const EigenTriple e = eigen_sym3(Sym3::diagonal(3, 1, 2));
    CHECK(e.values == std::array<double, 3>{1, 2, 3});
    CHECK(e.vectors[0] == Vec3{0, 1, 0});
    CHECK(e.vectors[1] == Vec3{0, 0, 1});
    CHECK(e.vectors[2] == Vec3{1, 0, 0});
}

TEST_CASE("eigen_sym3 recovers a rotated diag(0.5, 2, 7)")
{
    const double a = 30.0 * 3.14159265358979323846 / 180.0;
    Eigen::Matrix3d r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    const Eigen::Matrix3d m = r * Eigen::Vector3d(0.5, 2, 7).asDiagonal() * r.transpose();
    const EigenTriple e = eigen_sym3(from_eigen(m));
    CHECK_THAT(e.values[0], WithinAbs(0.5, 1e-12));
    CHECK_THAT(e.values[1], WithinAbs(2.0, 1e-12));
    CHECK_THAT(e.values[2], WithinAbs(7.0, 1e-12));
    const Eigen::Vector3d u1 = r.col(0);
    CHECK_THAT(std::abs(ev(e.vectors[0]).dot(u1)), WithinAbs(1.0, 1e-12));
    for (int i = 0; i < 3; ++i) {
        CHECK((m * ev(e.vectors[i]) - e.values[i] * ev(e.vectors[i])).norm() < 1e-12);
    }
}

TEST_CASE("eigen_sym3 reconstructs random symmetric matrices")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-6, 6)(rng));
        Sym3 a{g(rng), g(rng), g(rng), g(rng), g(rng), g(rng)};
        a *= scale;
        if (trial % 5 == 0) a.xy = a.xz = 0.0; // partially diagonal
        const EigenTriple e = eigen_sym3(a);
        Eigen::Matrix3d rec = Eigen::Matrix3d::Zero();
        for (int i = 0; i < 3; ++i) rec += e.values[i] * ev(e.vectors[i]) * ev(e.vectors[i]).transpose();
        const Eigen::Matrix3d m = to_eigen(a);
        CHECK((rec - m).norm() <= 1e-7 * m.norm());
        CHECK(e.values[0] <= e.values[1]);
        CHECK(e.values[1] <= e.values[2]);
        for (int i = 0; i < 3; ++i) {
            CHECK_THAT(norm(e.vectors[i]), WithinAbs(1.0, 1e-12));
            CHECK(canonical_sign(e.vectors[i]) == e.vectors[i]);
        }
    }
}

TEST_CASE("eigen_sym3 rejects non-finite input")
{
    Sym3 a = Sym3::identity();
    a.yz = std::nan("");
    CHECK_THROWS_AS(eigen_sym3(a), Error);
}

TEST_CASE("canonical_sign makes the largest component non-negative")
{
    CHECK(canonical_sign({0.1, -0.9, 0.2}) == Vec3{-0.1, 0.9, -0.2});
    CHECK(canonical_sign({-0.5, 0.5, 0.0}) == Vec3{0.5, -0.5, -0.0});
}

TEST_CASE("pca_min_component on exact planes")
{
    SECTION("unit square at z = 5")
    {
        const std::vector<Vec3> pts{{0, 0, 5}, {1, 0, 5}, {1, 1, 5}, {0, 1, 5}};
        const PlaneFit f = pca_min_component(pts);
        CHECK(f.normal == Vec3{0, 0, 1});
        CHECK(f.mse == 0.0);
        CHECK(f.centroid == Vec3{0.5, 0.5, 5});
    }
    SECTION("three points always fit a plane")
    {
        const std::vector<Vec3> pts{{0.3, -1.2, 4.0}, {2.5, 0.7, -1.0}, {-0.4, 3.3, 0.9}};
        CHECK(pca_min_component(pts).mse < 1e-24);
    }
}

TEST_CASE("pca_min_component errors")
{
    const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
    const std::vector<Vec3> same{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    CHECK_THROWS_MATCHES(pca_min_component(two), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::DegeneratePatch; }));
    CHECK_THROWS_MATCHES(pca_min_component(same), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return e.code() == ErrorCode::DegeneratePatch; }));
}

TEST_CASE("pca_min_component matches a least-squares SVD plane fit")
{
    SECTION("jittered z = 0 sample")
    {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(-1, 1);
        std::normal_distribution<double> jitter(0.0, 0.01);
        std::vector<Vec3> pts;
        for (int i = 0; i < 100; ++i) pts.push_back({u(rng), u(rng), jitter(rng)});
        const PlaneFit f = pca_min_component(pts);
        CHECK_THAT(f.mse, WithinRel(oracle::svd_plane_mse(pts), 1e-9));
        CHECK_THAT(std::abs(ev(f.normal).dot(oracle::svd_plane_normal(pts))), WithinAbs(1.0, 1e-12));
    }
    SECTION("rigid motion leaves eps unchanged and maps v")
    {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 50; ++trial) {
            const auto pts = oracle::random_near_planar_cloud(rng);
            const auto t = oracle::Rigid::random(rng);
            std::vector<Vec3> moved;
            for (const Vec3& p : pts) moved.push_back(t.apply(p));
            const PlaneFit a = pca_min_component(pts), b = pca_min_component(moved);
            CHECK_THAT(b.mse, WithinRel(a.mse, 1e-9));
            CHECK_THAT(std::abs(dot(t.rotate(a.normal), b.normal)), WithinAbs(1.0, 1e-9));
        }
    }
}

TEST_CASE("within_ss_split examples")
{
    SECTION("perfectly separated")
    {
        const std::vector<double> p{0, 0, 10, 10};
        const WithinSsSplit s = within_ss_split(p);
        CHECK(s.threshold == 10.0);
        CHECK(s.objective == 0.0);
        CHECK(s.lower_mean == 0.0);
        CHECK(s.upper_mean == 10.0);
    }
    SECTION("five values")
    {
        const std::vector<double> p{1, 2, 8, 9, 10};
        const WithinSsSplit s = within_ss_split(p);
        CHECK(s.threshold == 8.0);
        CHECK_THAT(s.objective, WithinRel(2.5, 1e-15));
        CHECK(s.lower_mean == 1.5);
        CHECK(s.upper_mean == 9.0);
        CHECK(s.lower_count == 2);
        CHECK(s.upper_count == 3);
    }
    SECTION("unsorted input gives the same split")
    {
        const std::vector<double> p{9, 1, 10, 2, 8};
        CHECK(within_ss_split(p).threshold == 8.0);
    }
}

TEST_CASE("within_ss_split errors")
{
    auto code_of = [](std::vector<double> p) {
        try {
            within_ss_split(p);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidParams;
    };
    CHECK(code_of({5, 5, 5}) == ErrorCode::DegenerateProjection);
    CHECK(code_of({1}) == ErrorCode::TooFewPoints);
    CHECK(code_of({}) == ErrorCode::TooFewPoints);
    CHECK(code_of({1, std::nan(""), 2}) == ErrorCode::NonFinite);
}

TEST_CASE("within_ss_split ties resolve to the smallest threshold")
{
    // {0 | 1, 2} and {0, 1 | 2} both give f = 0.5
    const std::vector<double> p{0, 1, 2};
    CHECK(within_ss_split(p).threshold == 1.0);
}

TEST_CASE("within_ss_split agrees with exhaustive search")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 600; ++trial) {
        const auto p = oracle::random_projection_array(rng, trial);
        const WithinSsSplit got = within_ss_split(p);
        const auto want = oracle::brute_force_split(p);
        INFO("trial " << trial << " n " << p.size());
        CHECK(got.threshold == want.threshold);
        if (want.objective == 0.0) {
            CHECK(got.objective == 0.0);
        } else {
            CHECK_THAT(got.objective, WithinRel(want.objective, 1e-9));
        }
    }
}

TEST_CASE("within_ss_split is shift invariant and scale equivariant")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(2 + trial % 150);
        for (double& v : p) v = g(rng) + (g(rng) > 0 ? 3.0 : 0.0);
        const WithinSsSplit base = within_ss_split(p);

        const double c = 17.25, k = 4.0; // exactly representable shifts of these magnitudes
        std::vector<double> shifted = p, scaled = p;
        for (double& v : shifted) v += c;
        for (double& v : scaled) v *= k;
        const WithinSsSplit a = within_ss_split(shifted), b = within_ss_split(scaled);
        CHECK_THAT(a.objective, WithinRel(base.objective, 1e-9));
        CHECK(a.lower_count == base.lower_count);
        CHECK_THAT(a.threshold, WithinAbs(base.threshold + c, 1e-12));
        CHECK(b.threshold == base.threshold * k);
        CHECK_THAT(b.objective, WithinRel(base.objective * k * k, 1e-9));
    }
}
