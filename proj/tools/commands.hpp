#pragma once

#include "vgonio/goniometer.hpp"
#include "vgonio/session.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vgonio::cli {

// sysexits-style codes
enum ExitCode : int {
    kExitOk = 0,
    kExitPartial = 2,
    kExitUsage = 64,
    kExitDataErr = 65,
    kExitNoInput = 66,
    kExitSoftware = 70,
    kExitOsErr = 71,
    kExitCantCreate = 73,
};

struct SpecEntry {
    MeasurementRequest request;
    std::size_t line = 0;
};

/// Reads a measurement spec CSV. Columns are matched by header name:
/// x, y, z, radius are required; lambda and metric fall back to the defaults
/// when the column is absent or the cell empty. Extra columns are ignored, so
/// an exported measurement CSV is itself a valid spec.
std::vector<SpecEntry> read_measurement_spec(std::istream& in, double default_lambda, DistanceMetric default_metric);

struct MeasureOptions {
    std::filesystem::path mesh;
    std::filesystem::path spec;
    std::optional<Vec3> point; ///< inline single measurement instead of --spec
    std::optional<double> radius;
    std::filesystem::path out;
    std::filesystem::path colored_out;
    double lambda = kDefaultLambda;
    std::string metric = "geodesic";
    int knn = kDefaultKnn;
    std::optional<std::string> fixed_timestamp;
    bool ascii_ply = false;
};

int run_measure(const MeasureOptions& opts, std::ostream& diag);

struct SynthOptions {
    std::string shape = "wedge"; ///< wedge, curved or rugose
    double angle = 90.0;
    std::size_t vertices = 2000;
    double half_width = 1.0;
    double depth = 1.0;
    double noise = 0.0;
    std::uint64_t seed = 0;
    double arc_radius = 5.0;
    double amplitude = 0.05;
    std::filesystem::path out;
    bool ascii_ply = false;
};

/// Writes the PLY and a `<stem>.truth.json` sidecar next to it.
int run_synth(const SynthOptions& opts, std::ostream& diag);

/// Sidecar path for a synthetic mesh output path.
std::filesystem::path truth_path_for(const std::filesystem::path& mesh_path);

int run_iov(const std::filesystem::path& csv, std::ostream& out, std::ostream& diag);

struct ServeOptions {
    std::filesystem::path mesh_dir;
    std::string bind = "127.0.0.1";
    int port = 8080;
    std::filesystem::path ui_dir;
    std::filesystem::path snapshot_dir;
    int knn = kDefaultKnn;
    std::size_t max_upload_mb = 512;
};

int run_serve(const ServeOptions& opts, std::ostream& diag);

} // namespace vgonio::cli
