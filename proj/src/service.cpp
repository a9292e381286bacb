#include "vgonio/service.hpp"

#include "vgonio/error.hpp"
#include "vgonio/mesh_io.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <shared_mutex>

#ifndef VGONIO_VERSION
#define VGONIO_VERSION "dev"
#endif

namespace vgonio {

using nlohmann::json;

std::string encode_geometry(const TriangleMesh& mesh)
{
    const auto v = static_cast<std::uint32_t>(mesh.vertex_count());
    const auto f = static_cast<std::uint32_t>(mesh.face_count());
    std::string out;
    out.reserve(8 + 24 * std::size_t{v} + 12 * std::size_t{f});
    auto put = [&out](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
    put(&v, 4);
    put(&f, 4);
    for (const Vec3& p : mesh.vertices) {
        const float xyz[3] = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)};
        put(xyz, sizeof(xyz));
    }
    for (const Face& face : mesh.faces) put(face.data(), 12);
    for (const Vec3& n : mesh.normals) {
        const float xyz[3] = {static_cast<float>(n.x), static_cast<float>(n.y), static_cast<float>(n.z)};
        put(xyz, sizeof(xyz));
    }
    return out;
}

namespace {

struct MeshEntry {
    MeshHandle handle;
    MeshContext context;
    Session session;

    MeshEntry(MeshHandle h, MeshContext ctx, Session::Clock clock)
        : handle(std::move(h)), context(std::move(ctx)), session(handle.name, std::move(clock))
    {
    }
};

double round4(double v) { return std::round(v * 1e4) / 1e4; }

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json handle_json(const MeshHandle& h)
{
    return {{"id", h.id},
            {"name", h.name},
            {"vertex_count", h.vertex_count},
            {"face_count", h.face_count},
            {"bbox", {{"min", vec_json(h.bounds.min)}, {"max", vec_json(h.bounds.max)}}}};
}

json color_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

std::string_view hint_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::PatchTooSmall: return "patch too small; increase the radius";
    case ErrorCode::DegenerateProjection: return "sides could not be separated; adjust lambda";
    case ErrorCode::DegenerateFrame: return "no fold found in the patch; move closer to the ridge or enlarge the radius";
    case ErrorCode::SideTooSmall: return "one side has too few vertices; adjust lambda or the radius";
    case ErrorCode::SnapTooFar: return "no vertex near the requested point; check the coordinates";
    default: return "";
    }
}

void send_error(httplib::Response& res, int status, ErrorCode code, const std::string& detail)
{
    res.status = status;
    json body{{"error", std::string(to_string(code))}, {"detail", detail}};
    if (const auto hint = hint_for(code); !hint.empty()) body["hint"] = std::string(hint);
    res.set_content(body.dump(), "application/json");
}

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

MeasurementRequest parse_request_body(const std::string& body, std::optional<MeasurementMethod>& method)
{
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");

    MeasurementRequest req;
    try {
        if (j.contains("seed")) {
            const auto seed = j.at("seed").get<long long>();
            if (seed < 0) throw Error(ErrorCode::SeedOutOfRange, "seed must be non-negative");
            req.seed = static_cast<std::uint32_t>(seed);
        } else if (j.contains("x") && j.contains("y") && j.contains("z")) {
            req.point = Vec3{j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
        } else {
            throw Error(ErrorCode::InvalidParams, "body needs either seed or x, y, z");
        }
        if (!j.contains("radius")) throw Error(ErrorCode::InvalidParams, "body needs radius");
        req.params.radius = j.at("radius").get<double>();
        req.params.lambda = j.value("lambda", kDefaultLambda);
        req.params.metric = parse_metric(j.value("metric", std::string("geodesic")));
        if (j.contains("method")) method = parse_method(j.at("method").get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidParams, std::string("bad field type: ") + e.what());
    }
    return req;
}

json segmentation_json(const MeasurementResult& r)
{
    json labels = json::array();
    for (Side s : r.labels) labels.push_back(static_cast<int>(s));
    return {{"theta", round4(r.theta_deg)},
            {"fit", r.fit},
            {"n", r.patch.size()},
            {"n_plus", r.fits.plus_count},
            {"n_minus", r.fits.minus_count},
            {"seed", r.patch.seed},
            {"center", vec_json(r.patch.center)},
            {"patch_radius", r.patch.radius},
            {"snap_distance", r.patch.snap_distance},
            {"indices", r.patch.indices},
            {"labels", labels}};
}

json record_json(const MeasurementRecord& rec)
{
    return {{"id", rec.id},
            {"mesh", rec.mesh},
            {"method", std::string(to_string(rec.method))},
            {"x", rec.center.x},
            {"y", rec.center.y},
            {"z", rec.center.z},
            {"radius", rec.radius},
            {"metric", std::string(to_string(rec.metric))},
            {"lambda", rec.lambda},
            {"n", rec.n},
            {"n_plus", rec.n_plus},
            {"n_minus", rec.n_minus},
            {"theta", round4(rec.theta_deg)},
            {"fit", rec.fit},
            {"palette", rec.palette},
            {"timestamp", format_timestamp(rec.timestamp)}};
}

constexpr const char* kIndexPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>vgonio</title></head>
<body><h1>vgonio measurement service</h1>
<p>No UI bundle is mounted. Start with <code>--ui-dir</code> to serve one, or use the JSON API under <code>/meshes</code>.</p>
</body></html>
)";

} // namespace

struct MeasurementService::Impl {
    ServiceConfig config;
    httplib::Server server;
    mutable std::shared_mutex table_mutex;
    std::map<std::string, std::shared_ptr<MeshEntry>> meshes;
    std::atomic<std::uint64_t> next_id{1};
    bool bound = false;

    std::shared_ptr<MeshEntry> find(const std::string& id) const
    {
        std::shared_lock lock(table_mutex);
        const auto it = meshes.find(id);
        return it == meshes.end() ? nullptr : it->second;
    }

    MeshHandle insert(TriangleMesh mesh)
    {
        MeshHandle h;
        h.id = "m" + std::to_string(next_id.fetch_add(1));
        if (mesh.name.empty()) mesh.name = h.id;
        h.name = mesh.name;
        h.vertex_count = mesh.vertex_count();
        h.face_count = mesh.face_count();
        h.bounds = bounding_box(mesh.vertices);
        auto entry = std::make_shared<MeshEntry>(h, MeshContext::build(std::move(mesh), config.knn), config.clock);
        std::unique_lock lock(table_mutex);
        meshes.emplace(h.id, std::move(entry));
        return h;
    }

    void routes();
    void handle_measure(const httplib::Request& req, httplib::Response& res, bool commit);
};

void MeasurementService::Impl::handle_measure(const httplib::Request& req, httplib::Response& res, bool commit)
{
    const auto entry = find(req.path_params.at("id"));
    if (!entry) return send_error(res, 404, ErrorCode::OutOfRange, "unknown mesh id");

    std::optional<MeasurementMethod> method;
    MeasurementRequest request;
    try {
        request = parse_request_body(req.body, method);
    } catch (const Error& e) {
        return send_error(res, e.code() == ErrorCode::ParseError ? 400 : 422, e.code(), e.what());
    }

    try {
        const MeasurementResult result = measure_at(entry->context, request, commit);
        if (!commit) {
            json body = segmentation_json(result);
            body["palette"] = entry->session.palette_for(result.patch.seed);
            return send_json(res, 200, body);
        }
        const MeasurementMethod m = method.value_or(request.seed ? MeasurementMethod::Drag : MeasurementMethod::Xyz);
        const MeasurementRecord rec = entry->session.record(result, m);
        json body = record_json(rec);
        body["segmentation"] = segmentation_json(result);
        const ColorPair& pair = palette()[rec.palette % kPaletteSize];
        body["colors"] = {{"minus", color_json(pair.first)}, {"plus", color_json(pair.second)}};
        send_json(res, 201, body);
    } catch (const Error& e) {
        send_error(res, e.code() == ErrorCode::SessionClosed ? 409 : 422, e.code(), e.what());
    }
}

void MeasurementService::Impl::routes()
{
    server.set_payload_max_length(config.max_upload_bytes);

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"version", VGONIO_VERSION}});
    });

    server.Get("/meshes", [this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        std::shared_lock lock(table_mutex);
        for (const auto& [id, entry] : meshes) list.push_back(handle_json(entry->handle));
        send_json(res, 200, list);
    });

    server.Post("/meshes", [this](const httplib::Request& req, httplib::Response& res) {
        MeshFormat format = MeshFormat::Obj;
        const std::string fmt = req.get_param_value("format");
        if (fmt == "ply" || (fmt.empty() && req.body.rfind("ply", 0) == 0)) {
            format = MeshFormat::Ply;
        } else if (!fmt.empty() && fmt != "obj") {
            return send_error(res, 400, ErrorCode::UnsupportedFormat, "format must be ply or obj");
        }
        try {
            TriangleMesh mesh = load_mesh(std::string_view(req.body), format, req.get_param_value("name"), config.knn);
            const MeshHandle h = insert(std::move(mesh));
            send_json(res, 201, handle_json(h));
        } catch (const Error& e) {
            send_error(res, 400, e.code(), e.what());
        }
    });

    server.Get("/meshes/:id", [this](const httplib::Request& req, httplib::Response& res) {
        const auto entry = find(req.path_params.at("id"));
        if (!entry) return send_error(res, 404, ErrorCode::OutOfRange, "unknown mesh id");
        send_json(res, 200, handle_json(entry->handle));
    });

    server.Get("/meshes/:id/geometry", [this](const httplib::Request& req, httplib::Response& res) {
        const auto entry = find(req.path_params.at("id"));
        if (!entry) return send_error(res, 404, ErrorCode::OutOfRange, "unknown mesh id");
        res.set_content(encode_geometry(entry->context.mesh), "application/octet-stream");
    });

    server.Post("/meshes/:id/preview",
                [this](const httplib::Request& req, httplib::Response& res) { handle_measure(req, res, false); });
    server.Post("/meshes/:id/measurements",
                [this](const httplib::Request& req, httplib::Response& res) { handle_measure(req, res, true); });

    server.Get("/meshes/:id/measurements.csv", [this](const httplib::Request& req, httplib::Response& res) {
        const auto entry = find(req.path_params.at("id"));
        if (!entry) return send_error(res, 404, ErrorCode::OutOfRange, "unknown mesh id");
        const auto records = entry->session.records();
        res.set_content(export_csv(records), "text/csv");
    });

    if (!config.ui_dir.empty() && std::filesystem::is_directory(config.ui_dir)) {
        server.set_mount_point("/", config.ui_dir.string());
    } else {
        server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kIndexPage, "text/html"); });
    }
}

MeasurementService::MeasurementService(ServiceConfig config) : impl_(std::make_unique<Impl>())
{
    impl_->config = std::move(config);
    // no SO_REUSEPORT: a second server on a busy port must fail to bind
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    impl_->routes();
}

MeasurementService::~MeasurementService()
{
    if (impl_->server.is_running()) impl_->server.stop();
}

MeshHandle MeasurementService::add_mesh(TriangleMesh mesh) { return impl_->insert(std::move(mesh)); }

std::vector<MeshHandle> MeasurementService::preload_directory(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        try {
            format_from_path(entry.path());
            files.push_back(entry.path());
        } catch (const Error&) {
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<MeshHandle> out;
    for (const auto& path : files) {
        try {
            out.push_back(add_mesh(load_mesh_file(path, impl_->config.knn)));
            spdlog::info("loaded {} as {}", path.string(), out.back().id);
        } catch (const Error& e) {
            spdlog::warn("skipping {}: {}", path.string(), e.what());
        }
    }
    return out;
}

std::optional<int> MeasurementService::bind(const std::string& host, int port)
{
    int bound = -1;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (impl_->server.bind_to_port(host, port)) {
        bound = port;
    }
    if (bound <= 0) return std::nullopt;
    impl_->bound = true;
    return bound;
}

void MeasurementService::serve()
{
    if (!impl_->bound) throw Error(ErrorCode::IoError, "serve() called before a successful bind()");
    impl_->server.listen_after_bind();
}

void MeasurementService::stop() { impl_->server.stop(); }

bool MeasurementService::is_running() const { return impl_->server.is_running(); }

void MeasurementService::wait_until_ready() const { impl_->server.wait_until_ready(); }

std::vector<std::filesystem::path> MeasurementService::flush()
{
    std::vector<std::filesystem::path> written;
    if (impl_->config.snapshot_dir.empty()) return written;
    std::filesystem::create_directories(impl_->config.snapshot_dir);
    std::shared_lock lock(impl_->table_mutex);
    for (const auto& [id, entry] : impl_->meshes) {
        const auto records = entry->session.records();
        if (records.empty()) continue;
        const auto path = impl_->config.snapshot_dir / (entry->handle.name + "." + id + ".measurements.csv");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write snapshot '" + path.string() + "'");
        export_csv(records, out);
        written.push_back(path);
    }
    return written;
}

} // namespace vgonio
