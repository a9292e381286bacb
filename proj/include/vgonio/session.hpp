#pragma once

#include "vgonio/goniometer.hpp"
#include "vgonio/mesh.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vgonio {

enum class MeasurementMethod { Manual, Drag, Xyz };

std::string_view to_string(MeasurementMethod method) noexcept;
MeasurementMethod parse_method(std::string_view text);

using Timestamp = std::chrono::sys_seconds;

/// ISO-8601 UTC, e.g. "2024-03-01T12:00:00Z".
std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view text);

/// Contrasting color pairs cycled through per measurement location; side "-"
/// takes `first`, side "+" takes `second`.
struct ColorPair {
    Rgb first;
    Rgb second;
};

inline constexpr std::size_t kPaletteSize = 8;
const std::array<ColorPair, kPaletteSize>& palette() noexcept;

/// One persisted measurement (one CSV row).
struct MeasurementRecord {
    std::uint64_t id = 0;
    std::string mesh;
    MeasurementMethod method = MeasurementMethod::Xyz;
    Vec3 center;
    double radius = 0.0;
    DistanceMetric metric = DistanceMetric::Geodesic;
    double lambda = kDefaultLambda;
    std::size_t n = 0;
    std::size_t n_plus = 0;
    std::size_t n_minus = 0;
    double theta_deg = 0.0;
    double fit = 0.0;
    std::size_t palette = 0;
    Timestamp timestamp{};
};

/// Append-only measurement log for one mesh. Safe to share between threads;
/// commits are serialized so ids are gap-free and monotonic.
class Session {
public:
    using Clock = std::function<Timestamp()>;

    explicit Session(std::string mesh_name = {}, Clock clock = {});

    /// Appends a record for `result`. The palette index advances whenever the
    /// seed vertex differs from the previous record's.
    MeasurementRecord record(const MeasurementResult& result, MeasurementMethod method);

    void close();
    bool is_open() const;

    std::vector<MeasurementRecord> records() const;
    std::size_t size() const;
    const std::string& mesh_name() const noexcept { return mesh_name_; }

    /// Palette index the next record at `seed` would receive.
    std::size_t palette_for(std::uint32_t seed) const;

private:
    std::size_t palette_for_locked(std::uint32_t seed) const;

    std::string mesh_name_;
    Clock clock_;
    mutable std::mutex mutex_;
    bool open_ = true;
    std::vector<MeasurementRecord> records_;
    std::optional<std::uint32_t> last_seed_;
    std::size_t location_count_ = 0;
};

inline constexpr std::string_view kCsvHeader =
    "id,mesh,method,x,y,z,radius,metric,lambda,n,n_plus,n_minus,theta_deg,fit,palette,timestamp_iso8601";

/// Header plus one row per record. Reals use 6 significant digits, theta 4 decimals.
void export_csv(std::span<const MeasurementRecord> records, std::ostream& out);
std::string export_csv(std::span<const MeasurementRecord> records);

std::string format_csv_row(const MeasurementRecord& record);

/// Reads an exported measurement CSV back.
std::vector<MeasurementRecord> parse_measurement_csv(std::istream& in);

/// Color layer to paint on: the mesh's own colors, or all `base` when it has none.
std::vector<Rgb> base_colors(const TriangleMesh& mesh, Rgb base = {255, 255, 255});

/// Paints the patch of `result` with palette pair `palette_index` (mod the
/// palette size): side "-" first color, side "+" second.
void paint(std::vector<Rgb>& colors, const MeasurementResult& result, std::size_t palette_index);

// ---------------------------------------------------------------- IOV

/// Mean absolute pairwise difference of three repeated measurements (degrees).
double iov(double theta, double phi, double psi);

struct IovRecord {
    std::string break_id;
    MeasurementMethod method = MeasurementMethod::Manual;
    double theta = 0.0, phi = 0.0, psi = 0.0;
    double value = 0.0;
};

IovRecord make_iov_record(std::string break_id, MeasurementMethod method, double theta, double phi, double psi);

struct IovSummary {
    std::size_t count = 0;
    double min = 0.0, mean = 0.0, median = 0.0, max = 0.0;
    double sd = 0.0;
    bool sd_defined = true; ///< false for a single record (sd reported as 0)
};

/// Summary over the records whose method matches `filter` (all when empty).
IovSummary summarize_iov(std::span<const IovRecord> records, std::optional<MeasurementMethod> filter = std::nullopt);

} // namespace vgonio
