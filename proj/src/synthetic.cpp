#include "vgonio/synthetic.hpp"

#include "vgonio/error.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

namespace vgonio {

void validate(const WedgeSpec& spec)
{
    if (!(spec.angle_deg > 0.0 && spec.angle_deg <= 180.0)) {
        throw Error(ErrorCode::InvalidSpec, "angle must lie in (0, 180], got " + std::to_string(spec.angle_deg));
    }
    if (!(spec.half_width > 0.0) || !(spec.depth > 0.0) || !std::isfinite(spec.half_width) ||
        !std::isfinite(spec.depth)) {
        throw Error(ErrorCode::InvalidSpec, "half width and depth must be positive");
    }
    if (spec.vertices_per_side < 9) throw Error(ErrorCode::InvalidSpec, "need at least 9 vertices per side");
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
        throw Error(ErrorCode::InvalidSpec, "noise sigma must be >= 0");
    }
}

namespace {

// Layout of the crease row plus n_depth rows on each side, n_along vertices per row.
struct GridLayout {
    std::size_t n_along = 0; // odd, so one column sits at the crease midpoint
    std::size_t n_depth = 0;
    double step_along = 0.0;
    double step_depth = 0.0;

    std::uint32_t index(std::size_t i, std::size_t j, int side) const
    {
        if (j == 0) return static_cast<std::uint32_t>(i);
        const std::size_t base = n_along + (side == 0 ? 0 : n_depth * n_along);
        return static_cast<std::uint32_t>(base + (j - 1) * n_along + i);
    }
    std::size_t vertex_count() const { return n_along * (1 + 2 * n_depth); }
    double along(std::size_t i) const
    {
        return (static_cast<double>(i) - static_cast<double>((n_along - 1) / 2)) * step_along;
    }
    double away(std::size_t j) const { return static_cast<double>(j) * step_depth; }
};

GridLayout make_layout(const WedgeSpec& spec)
{
    const double length = 2.0 * spec.half_width;
    const double h = std::sqrt(length * spec.depth / static_cast<double>(spec.vertices_per_side));
    GridLayout g;
    g.n_depth = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(spec.depth / h)));
    g.n_along = std::max<std::size_t>(3, (spec.vertices_per_side + g.n_depth - 1) / g.n_depth);
    if (g.n_along % 2 == 0) ++g.n_along;
    g.step_along = length / static_cast<double>(g.n_along - 1);
    g.step_depth = spec.depth / static_cast<double>(g.n_depth);
    return g;
}

// Profile of the ridge: unit direction away from the crease and outward normal
// of each face, both in the (across, up) plane. 180 degrees is exactly flat.
struct Profile {
    double s = 1.0; // sin(angle / 2)
    double c = 0.0; // cos(angle / 2)
};

Profile make_profile(double angle_deg)
{
    if (angle_deg == 180.0) return {1.0, 0.0};
    const double half = 0.5 * angle_deg * std::numbers::pi / 180.0;
    return {std::sin(half), std::cos(half)};
}

// Maps (along, away, side) to position and analytic normal.
using Embedding = std::function<void(double along, double away, int side, Vec3& pos, Vec3& normal)>;

SyntheticShape build_shape(const WedgeSpec& spec, const Embedding& embed)
{
    const GridLayout g = make_layout(spec);
    SyntheticShape shape;
    TriangleMesh& mesh = shape.mesh;
    mesh.vertices.resize(g.vertex_count());
    mesh.normals.resize(g.vertex_count());
    shape.truth.resize(g.vertex_count());

    for (int side = 0; side < 2; ++side) {
        for (std::size_t j = 0; j <= g.n_depth; ++j) {
            if (j == 0 && side == 1) continue;
            for (std::size_t i = 0; i < g.n_along; ++i) {
                const std::uint32_t v = g.index(i, j, side);
                embed(g.along(i), g.away(j), j == 0 ? -1 : side, mesh.vertices[v], mesh.normals[v]);
                shape.truth[v] = j == 0 ? kOnCrease : (side == 0 ? kSideA : kSideB);
            }
        }
    }

    for (int side = 0; side < 2; ++side) {
        // Wind each side so its face normals agree with the analytic normals.
        const Vec3& p0 = mesh.vertices[g.index(0, 0, side)];
        const Vec3 e_along = mesh.vertices[g.index(1, 0, side)] - p0;
        const Vec3 e_away = mesh.vertices[g.index(0, 1, side)] - p0;
        const bool flip = dot(cross(e_along, e_away), mesh.normals[g.index(0, 1, side)]) < 0.0;
        for (std::size_t j = 0; j < g.n_depth; ++j) {
            for (std::size_t i = 0; i + 1 < g.n_along; ++i) {
                const std::uint32_t a = g.index(i, j, side), b = g.index(i + 1, j, side);
                const std::uint32_t c = g.index(i + 1, j + 1, side), d = g.index(i, j + 1, side);
                if (!flip) {
                    mesh.faces.push_back({a, b, c});
                    mesh.faces.push_back({a, c, d});
                } else {
                    mesh.faces.push_back({a, c, b});
                    mesh.faces.push_back({a, d, c});
                }
            }
        }
    }

    const std::size_t mid = (g.n_along - 1) / 2;
    shape.crease_vertex = g.index(mid, 0, 0);
    shape.crease_center = mesh.vertices[shape.crease_vertex];
    shape.angle_deg = spec.angle_deg;
    shape.spacing = std::max(g.step_along, g.step_depth);
    return shape;
}

void displace(SyntheticShape& shape, const std::function<double(std::size_t)>& offset)
{
    for (std::size_t v = 0; v < shape.mesh.vertex_count(); ++v) {
        shape.mesh.vertices[v] += offset(v) * shape.mesh.normals[v];
    }
}

void apply_noise(SyntheticShape& shape, const WedgeSpec& spec)
{
    if (spec.noise_sigma <= 0.0) return;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma);
    std::vector<double> offsets(shape.mesh.vertex_count());
    for (double& o : offsets) o = gauss(rng);
    displace(shape, [&](std::size_t v) { return offsets[v]; });
}

std::string shape_name(const char* kind, double angle)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%g", kind, angle);
    return buf;
}

} // namespace

SyntheticShape make_wedge(const WedgeSpec& spec)
{
    validate(spec);
    const Profile pr = make_profile(spec.angle_deg);
    SyntheticShape shape = build_shape(spec, [&](double along, double away, int side, Vec3& pos, Vec3& n) {
        const double sgn = side == 1 ? -1.0 : 1.0;
        if (side < 0) {
            pos = {along, 0.0, 0.0};
            n = {0.0, 0.0, 1.0};
            return;
        }
        pos = {along, sgn * pr.s * away, -pr.c * away};
        n = {0.0, sgn * pr.c, pr.s};
    });
    shape.mesh.name = shape_name("wedge", spec.angle_deg);
    apply_noise(shape, spec);
    if (spec.noise_sigma > 0.0) shape.mesh.normals = estimate_normals(shape.mesh);
    return shape;
}

SyntheticShape make_curved_ridge(const WedgeSpec& spec, double arc_radius)
{
    validate(spec);
    const Profile pr = make_profile(spec.angle_deg);
    if (!(arc_radius > 0.0) || !std::isfinite(arc_radius)) throw Error(ErrorCode::InvalidSpec, "arc radius must be positive");
    if (arc_radius - spec.depth * pr.s <= 0.0) {
        throw Error(ErrorCode::InvalidSpec, "inner face reaches the axis of the arc; increase the arc radius");
    }
    if (spec.half_width / arc_radius >= std::numbers::pi) {
        throw Error(ErrorCode::InvalidSpec, "arc wraps onto itself; shorten the half width");
    }
    SyntheticShape shape = build_shape(spec, [&](double along, double away, int side, Vec3& pos, Vec3& n) {
        const double phi = along / arc_radius;
        const double cp = std::cos(phi), sp = std::sin(phi);
        double w = 0.0, z = 0.0, nw = 0.0, nz = 1.0;
        if (side >= 0) {
            const double sgn = side == 1 ? -1.0 : 1.0;
            w = sgn * pr.s * away;
            z = -pr.c * away;
            nw = sgn * pr.c;
            nz = pr.s;
        }
        pos = {(arc_radius + w) * cp, (arc_radius + w) * sp, z};
        n = {nw * cp, nw * sp, nz};
    });
    shape.mesh.name = shape_name("curved", spec.angle_deg);
    apply_noise(shape, spec);
    if (spec.noise_sigma > 0.0) shape.mesh.normals = estimate_normals(shape.mesh);
    return shape;
}

SyntheticShape make_rugose_wedge(const WedgeSpec& spec, double amplitude)
{
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw Error(ErrorCode::InvalidSpec, "amplitude must be >= 0");
    SyntheticShape base = make_wedge(WedgeSpec{spec.angle_deg, spec.half_width, spec.depth, spec.vertices_per_side,
                                               0.0, spec.seed});
    if (amplitude == 0.0) {
        apply_noise(base, spec);
        if (spec.noise_sigma > 0.0) base.mesh.normals = estimate_normals(base.mesh);
        return base;
    }

    // Unfolded surface coordinates: u along the crease, w signed across it.
    const Profile pr = make_profile(spec.angle_deg);
    std::vector<std::array<double, 2>> unfolded(base.mesh.vertex_count());
    for (std::size_t v = 0; v < unfolded.size(); ++v) {
        const Vec3& p = base.mesh.vertices[v];
        const double away = pr.c * -p.z + pr.s * std::abs(p.y);
        unfolded[v] = {p.x, base.truth[v] == kSideB ? -away : away};
    }

    struct Wave {
        double kx, ky, phase, amp;
    };
    constexpr int kOctaves = 4;
    constexpr int kWavesPerOctave = 3;
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Wave> waves;
    double amp_total = 0.0;
    for (int o = 0; o < kOctaves; ++o) {
        const double wavelength = std::max(0.5 * spec.depth / std::ldexp(1.0, o), 3.0 * base.spacing);
        const double amp = std::ldexp(1.0, -o);
        amp_total += amp;
        for (int w = 0; w < kWavesPerOctave; ++w) {
            const double dir = 2.0 * std::numbers::pi * unit(rng);
            const double k = 2.0 * std::numbers::pi / wavelength;
            waves.push_back({k * std::cos(dir), k * std::sin(dir), 2.0 * std::numbers::pi * unit(rng),
                             amp / kWavesPerOctave});
        }
    }
    const double scale = amplitude / amp_total;
    displace(base, [&](std::size_t v) {
        double h = 0.0;
        for (const Wave& w : waves) h += w.amp * std::sin(w.kx * unfolded[v][0] + w.ky * unfolded[v][1] + w.phase);
        return scale * h;
    });
    apply_noise(base, spec);
    base.mesh.normals = estimate_normals(base.mesh);
    base.mesh.name = shape_name("rugose", spec.angle_deg);
    return base;
}

} // namespace vgonio
