#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace vgonio {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) noexcept
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    constexpr Vec3& operator-=(const Vec3& o) noexcept
    {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr Vec3& operator*=(double s) noexcept
    {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    constexpr double operator[](std::size_t i) const noexcept { return i == 0 ? x : (i == 1 ? y : z); }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr double squared_norm(const Vec3& a) noexcept { return dot(a, a); }
inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }
constexpr double squared_distance(const Vec3& a, const Vec3& b) noexcept { return squared_norm(a - b); }
inline double distance(const Vec3& a, const Vec3& b) noexcept { return std::sqrt(squared_distance(a, b)); }

/// Returns the zero vector unchanged.
inline Vec3 normalized(const Vec3& a) noexcept
{
    const double n = norm(a);
    return n > 0.0 ? a * (1.0 / n) : a;
}

inline bool is_finite(const Vec3& a) noexcept
{
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Symmetric 3x3 matrix, upper triangle stored.
struct Sym3 {
    double xx = 0.0, xy = 0.0, xz = 0.0;
    double yy = 0.0, yz = 0.0;
    double zz = 0.0;

    static constexpr Sym3 outer(const Vec3& v) noexcept
    {
        return {v.x * v.x, v.x * v.y, v.x * v.z, v.y * v.y, v.y * v.z, v.z * v.z};
    }
    static constexpr Sym3 diagonal(double a, double b, double c) noexcept { return {a, 0, 0, b, 0, c}; }
    static constexpr Sym3 identity() noexcept { return diagonal(1, 1, 1); }

    constexpr Sym3& operator+=(const Sym3& o) noexcept
    {
        xx += o.xx;
        xy += o.xy;
        xz += o.xz;
        yy += o.yy;
        yz += o.yz;
        zz += o.zz;
        return *this;
    }
    constexpr Sym3& operator*=(double s) noexcept
    {
        xx *= s;
        xy *= s;
        xz *= s;
        yy *= s;
        yz *= s;
        zz *= s;
        return *this;
    }

    constexpr double operator()(std::size_t r, std::size_t c) const noexcept
    {
        if (r > c) {
            std::size_t t = r;
            r = c;
            c = t;
        }
        if (r == 0) return c == 0 ? xx : (c == 1 ? xy : xz);
        if (r == 1) return c == 1 ? yy : yz;
        return zz;
    }

    constexpr Vec3 operator*(const Vec3& v) const noexcept
    {
        return {xx * v.x + xy * v.y + xz * v.z, xy * v.x + yy * v.y + yz * v.z, xz * v.x + yz * v.y + zz * v.z};
    }

    bool is_finite() const noexcept;
};

/// Eigen-decomposition of a Sym3. Eigenvalues ascend; each eigenvector has its
/// largest-magnitude component non-negative (earliest axis wins ties).
struct EigenTriple {
    std::array<double, 3> values{};
    std::array<Vec3, 3> vectors{};
};

EigenTriple eigen_sym3(const Sym3& a);

/// Flips `v` so that its largest-magnitude component is non-negative.
Vec3 canonical_sign(const Vec3& v) noexcept;

/// Least-squares plane through a point cloud.
struct PlaneFit {
    Vec3 normal;      ///< unit eigenvector of the covariance with smallest eigenvalue
    double mse = 0.0; ///< smallest covariance eigenvalue = mean squared orthogonal residual
    Vec3 centroid;
};

/// Plane fit by PCA. The covariance is normalized by the point count.
PlaneFit pca_min_component(std::span<const Vec3> points);

/// Optimal two-cluster split of 1-D data minimizing within-cluster sum of squares.
struct WithinSsSplit {
    double threshold = 0.0; ///< values >= threshold form the upper cluster
    double objective = 0.0;
    double lower_mean = 0.0;
    double upper_mean = 0.0;
    std::size_t lower_count = 0;
    std::size_t upper_count = 0;
};

/// Candidate objectives closer than this fraction of the total sum of squares
/// count as tied; ties resolve to the smallest threshold.
inline constexpr double kWithinSsTieTolerance = 1e-12;

WithinSsSplit within_ss_split(std::span<const double> values);

} // namespace vgonio
