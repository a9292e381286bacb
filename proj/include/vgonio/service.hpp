#pragma once

#include "vgonio/goniometer.hpp"
#include "vgonio/mesh.hpp"
#include "vgonio/session.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vgonio {

struct MeshHandle {
    std::string id;
    std::string name;
    std::size_t vertex_count = 0;
    std::size_t face_count = 0;
    BoundingBox bounds;
};

struct ServiceConfig {
    std::size_t max_upload_bytes = std::size_t{512} << 20;
    int knn = kDefaultKnn;
    std::filesystem::path ui_dir;       ///< static bundle mounted at "/" when set
    std::filesystem::path snapshot_dir; ///< where flush() writes session CSVs
    Session::Clock clock;               ///< record timestamps; wall clock when empty
};

/// HTTP front end over per-mesh measurement sessions.
///
///   GET  /health                       {status, version}
///   GET  /meshes                       list of handles
///   POST /meshes[?name=&format=]       upload PLY/OBJ bytes -> 201 handle
///   GET  /meshes/{id}                  handle
///   GET  /meshes/{id}/geometry         binary: u32 V, u32 F, f32 xyz*V, u32 ijk*F, f32 normals*V
///   POST /meshes/{id}/preview          JSON {x,y,z | seed, radius, lambda, metric} -> segmentation
///   POST /meshes/{id}/measurements     same body -> committed record
///   GET  /meshes/{id}/measurements.csv session CSV
///
/// Measurement failures answer 422 with {"error": <reason code>, "detail", "hint"}.
class MeasurementService {
public:
    explicit MeasurementService(ServiceConfig config = {});
    ~MeasurementService();

    MeasurementService(const MeasurementService&) = delete;
    MeasurementService& operator=(const MeasurementService&) = delete;

    /// Registers an already loaded mesh (builds its graph) and opens a session.
    MeshHandle add_mesh(TriangleMesh mesh);

    /// Loads every .ply/.obj file in `dir`; returns the handles created.
    std::vector<MeshHandle> preload_directory(const std::filesystem::path& dir);

    /// Binds the listening socket. `port` 0 picks a free port. Returns the
    /// bound port, or nullopt when binding fails.
    std::optional<int> bind(const std::string& host, int port);

    /// Serves requests until stop(); requires a successful bind().
    void serve();
    void stop();
    bool is_running() const;
    void wait_until_ready() const;

    /// Writes `<mesh name>.<id>.measurements.csv` for every non-empty session
    /// into the snapshot directory. Returns the files written.
    std::vector<std::filesystem::path> flush();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Little-endian geometry payload served by /meshes/{id}/geometry.
std::string encode_geometry(const TriangleMesh& mesh);

} // namespace vgonio
