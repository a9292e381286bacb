#include "vgonio/linalg.hpp"

#include "vgonio/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace vgonio {

bool Sym3::is_finite() const noexcept
{
    return std::isfinite(xx) && std::isfinite(xy) && std::isfinite(xz) && std::isfinite(yy) &&
           std::isfinite(yz) && std::isfinite(zz);
}

Vec3 canonical_sign(const Vec3& v) noexcept
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    }
    return v[best] < 0.0 ? -v : v;
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Cyclic Jacobi rotations; converges quadratically and keeps small eigenvalues
// to high relative accuracy, which the plane-fit residual depends on.
void jacobi_sweeps(Mat3& a, Mat3& v)
{
    constexpr int kMaxSweeps = 64;
    constexpr std::array<std::array<int, 2>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        const double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
        if (off == 0.0) return;

        for (const auto& [p, q] : kPairs) {
            const double apq = a[p][q];
            if (apq == 0.0) continue;
            const double g = 100.0 * std::abs(apq);
            // Past the first few sweeps an element below rounding of both diagonals is zeroed outright.
            if (sweep > 3 && std::abs(a[p][p]) + g == std::abs(a[p][p]) &&
                std::abs(a[q][q]) + g == std::abs(a[q][q])) {
                a[p][q] = a[q][p] = 0.0;
                continue;
            }
            const double h = a[q][q] - a[p][p];
            double t;
            if (std::abs(h) + g == std::abs(h)) {
                t = apq / h;
            } else {
                const double theta = 0.5 * h / apq;
                t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
            }
            const double c = 1.0 / std::sqrt(1.0 + t * t);
            const double s = t * c;
            const double tau = s / (1.0 + c);

            a[p][p] -= t * apq;
            a[q][q] += t * apq;
            a[p][q] = a[q][p] = 0.0;

            const int r = 3 - p - q;
            const double arp = a[r][p];
            const double arq = a[r][q];
            a[r][p] = a[p][r] = arp - s * (arq + arp * tau);
            a[r][q] = a[q][r] = arq + s * (arp - arq * tau);

            for (int k = 0; k < 3; ++k) {
                const double vkp = v[k][p];
                const double vkq = v[k][q];
                v[k][p] = vkp - s * (vkq + vkp * tau);
                v[k][q] = vkq + s * (vkp - vkq * tau);
            }
        }
    }
}

} // namespace

EigenTriple eigen_sym3(const Sym3& m)
{
    if (!m.is_finite()) throw Error(ErrorCode::NonFinite, "matrix has a non-finite entry");

    Mat3 a{};
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) a[r][c] = m(r, c);
    }
    Mat3 v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    jacobi_sweeps(a, v);

    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i][i] < a[j][j]; });

    EigenTriple out;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t col = order[k];
        out.values[k] = a[col][col];
        out.vectors[k] = canonical_sign(normalized(Vec3{v[0][col], v[1][col], v[2][col]}));
    }
    return out;
}

PlaneFit pca_min_component(std::span<const Vec3> points)
{
    if (points.size() < 3) throw Error(ErrorCode::DegeneratePatch, "plane fit needs at least 3 points");

    const double inv_n = 1.0 / static_cast<double>(points.size());
    Vec3 centroid;
    for (const Vec3& p : points) {
        if (!is_finite(p)) throw Error(ErrorCode::NonFinite, "point has a non-finite coordinate");
        centroid += p;
    }
    centroid *= inv_n;
    Vec3 drift;
    for (const Vec3& p : points) drift += p - centroid;
    centroid += drift * inv_n;

    Sym3 cov;
    for (const Vec3& p : points) cov += Sym3::outer(p - centroid);
    cov *= inv_n;

    if (cov.xx + cov.yy + cov.zz == 0.0) throw Error(ErrorCode::DegeneratePatch, "all points coincide");

    // The smallest eigenvalue equals the mean squared residual along its
    // eigenvector; summing residuals keeps full relative precision on thin
    // clouds, where the eigenvalue itself is only accurate to eps * trace.
    const Vec3 normal = eigen_sym3(cov).vectors[0];
    double mse = 0.0;
    for (const Vec3& p : points) {
        const double r = dot(normal, p - centroid);
        mse += r * r;
    }
    return {normal, mse * inv_n, centroid};
}

namespace {

// Two-pass sum of squared deviations, with one refinement step on the mean so
// that a run of equal values gets exactly its own value back.
double sum_sq_dev(std::span<const double> xs, double& mean)
{
    const double n = static_cast<double>(xs.size());
    double s = 0.0;
    for (double x : xs) s += x;
    mean = s / n;
    double r = 0.0;
    for (double x : xs) r += x - mean;
    mean += r / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss;
}

} // namespace

WithinSsSplit within_ss_split(std::span<const double> values)
{
    const std::size_t n = values.size();
    if (n < 2) throw Error(ErrorCode::TooFewPoints, "split needs at least 2 values");
    for (double x : values) {
        if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "projection value is not finite");
    }

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw Error(ErrorCode::DegenerateProjection, "all projected values are equal");
    }

    // Center before accumulating prefix sums to limit cancellation in Q - S^2/k.
    double mean = 0.0;
    const double total = sum_sq_dev(sorted, mean);

    double suffix_s = 0.0, suffix_q = 0.0;
    for (double x : sorted) {
        suffix_s += x - mean;
        suffix_q += (x - mean) * (x - mean);
    }
    const double tie = kWithinSsTieTolerance * total;

    double prefix_s = 0.0, prefix_q = 0.0;
    double best_f = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const double d = sorted[i - 1] - mean;
        prefix_s += d;
        prefix_q += d * d;
        if (sorted[i] == sorted[i - 1]) continue;

        const double kl = static_cast<double>(i);
        const double ku = static_cast<double>(n - i);
        const double us = suffix_s - prefix_s;
        const double uq = suffix_q - prefix_q;
        const double f = std::max(0.0, prefix_q - prefix_s * prefix_s / kl) + std::max(0.0, uq - us * us / ku);
        if (f < best_f - tie) {
            best_f = f;
            best_i = i;
        }
    }

    WithinSsSplit out;
    out.threshold = sorted[best_i];
    out.lower_count = best_i;
    out.upper_count = n - best_i;
    const std::span<const double> all(sorted);
    out.objective = sum_sq_dev(all.first(best_i), out.lower_mean) + sum_sq_dev(all.subspan(best_i), out.upper_mean);
    return out;
}

} // namespace vgonio
