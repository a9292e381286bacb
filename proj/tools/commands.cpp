#include "commands.hpp"

#include "vgonio/error.hpp"
#include "vgonio/mesh_io.hpp"
#include "vgonio/service.hpp"
#include "vgonio/synthetic.hpp"

#include <json.hpp>

#include <charconv>
#include <csignal>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace vgonio::cli {

namespace {

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    for (auto& c : out) {
        while (!c.empty() && (c.back() == ' ' || c.back() == '\r')) c.pop_back();
        while (!c.empty() && c.front() == ' ') c.erase(c.begin());
    }
    return out;
}

double parse_real(const std::string& tok, std::size_t line, const std::string& column)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line) + ": bad number '" + tok + "' in column " + column);
    }
    return v;
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header)
{
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
    return col;
}

bool getline_trimmed(std::istream& in, std::string& line)
{
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

} // namespace

std::vector<SpecEntry> read_measurement_spec(std::istream& in, double default_lambda, DistanceMetric default_metric)
{
    std::string line;
    if (!getline_trimmed(in, line)) throw Error(ErrorCode::ParseError, "spec file is empty");
    const auto col = header_index(split_csv(line));
    for (const char* name : {"x", "y", "z", "radius"}) {
        if (!col.contains(name)) throw Error(ErrorCode::ParseError, std::string("spec lacks column '") + name + "'");
    }

    std::vector<SpecEntry> out;
    std::size_t line_no = 1;
    while (getline_trimmed(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        auto cell = [&](const std::string& name) -> std::string {
            const auto it = col.find(name);
            if (it == col.end() || it->second >= cells.size()) return {};
            return cells[it->second];
        };
        SpecEntry e;
        e.line = line_no;
        e.request.point = Vec3{parse_real(cell("x"), line_no, "x"), parse_real(cell("y"), line_no, "y"),
                               parse_real(cell("z"), line_no, "z")};
        e.request.params.radius = parse_real(cell("radius"), line_no, "radius");
        const std::string lambda = cell("lambda");
        e.request.params.lambda = lambda.empty() ? default_lambda : parse_real(lambda, line_no, "lambda");
        const std::string metric = cell("metric");
        e.request.params.metric = metric.empty() ? default_metric : parse_metric(metric);
        out.push_back(std::move(e));
    }
    return out;
}

int run_measure(const MeasureOptions& opts, std::ostream& diag)
{
    DistanceMetric metric;
    Session::Clock clock;
    try {
        metric = parse_metric(opts.metric);
        if (opts.lambda < 0.0) throw Error(ErrorCode::InvalidParams, "--lambda must be >= 0");
        if (opts.fixed_timestamp) {
            const Timestamp fixed = parse_timestamp(*opts.fixed_timestamp);
            clock = [fixed] { return fixed; };
        }
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    if (opts.spec.empty() == !opts.point.has_value()) {
        diag << "error: give exactly one of --spec or --point\n";
        return kExitUsage;
    }
    if (opts.point && !opts.radius) {
        diag << "error: --point needs --radius\n";
        return kExitUsage;
    }

    std::vector<SpecEntry> entries;
    if (opts.point) {
        SpecEntry e;
        e.request.point = *opts.point;
        e.request.params = {opts.lambda, metric, *opts.radius};
        entries.push_back(e);
    } else {
        std::ifstream spec(opts.spec);
        if (!spec) {
            diag << "error: cannot open spec '" << opts.spec.string() << "'\n";
            return kExitNoInput;
        }
        try {
            entries = read_measurement_spec(spec, opts.lambda, metric);
        } catch (const Error& e) {
            diag << "error: " << opts.spec.string() << ": " << e.what() << '\n';
            return kExitDataErr;
        }
    }

    MeshContext context;
    try {
        context = MeshContext::build(load_mesh_file(opts.mesh, opts.knn), opts.knn);
    } catch (const Error& e) {
        diag << "error: " << opts.mesh.string() << ": " << e.what() << '\n';
        if (e.code() == ErrorCode::IoError) return kExitNoInput;
        if (e.code() == ErrorCode::UnsupportedFormat) return kExitUsage;
        return kExitDataErr;
    }

    std::vector<MeasurementRequest> requests;
    requests.reserve(entries.size());
    for (const SpecEntry& e : entries) requests.push_back(e.request);
    const auto outcomes = measure_batch(context, requests);

    Session session(context.mesh.name, clock);
    std::vector<Rgb> colors = base_colors(context.mesh);
    bool any_failed = false;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const BatchOutcome& o = outcomes[i];
        if (!o.ok()) {
            any_failed = true;
            diag << "entry " << (i + 1);
            if (entries[i].line > 0) diag << " (line " << entries[i].line << ")";
            diag << ": " << to_string(*o.error) << ": " << o.message << '\n';
            continue;
        }
        const MeasurementRecord rec = session.record(*o.result, MeasurementMethod::Xyz);
        paint(colors, *o.result, rec.palette);
    }

    try {
        std::ofstream out(opts.out, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot create '" + opts.out.string() + "'");
        export_csv(session.records(), out);
        if (!opts.colored_out.empty()) {
            TriangleMesh colored = context.mesh;
            colored.colors = std::move(colors);
            std::ofstream ply(opts.colored_out, std::ios::binary | std::ios::trunc);
            if (!ply) throw Error(ErrorCode::IoError, "cannot create '" + opts.colored_out.string() + "'");
            export_colored_mesh(colored, ply, opts.ascii_ply ? PlyEncoding::Ascii : PlyEncoding::BinaryLittleEndian);
        }
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitCantCreate;
    }
    return any_failed ? kExitPartial : kExitOk;
}

std::filesystem::path truth_path_for(const std::filesystem::path& mesh_path)
{
    auto p = mesh_path;
    p.replace_extension(".truth.json");
    return p;
}

int run_synth(const SynthOptions& opts, std::ostream& diag)
{
    SyntheticShape shape;
    try {
        const WedgeSpec spec{opts.angle, opts.half_width, opts.depth, opts.vertices, opts.noise, opts.seed};
        if (opts.shape == "wedge") {
            shape = make_wedge(spec);
        } else if (opts.shape == "curved") {
            shape = make_curved_ridge(spec, opts.arc_radius);
        } else if (opts.shape == "rugose") {
            shape = make_rugose_wedge(spec, opts.amplitude);
        } else {
            throw Error(ErrorCode::InvalidSpec, "unknown shape '" + opts.shape + "'");
        }
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        write_ply_file(shape.mesh, opts.out, opts.ascii_ply ? PlyEncoding::Ascii : PlyEncoding::BinaryLittleEndian);
        nlohmann::json truth{{"shape", opts.shape},
                             {"angle_deg", shape.angle_deg},
                             {"crease_vertex", shape.crease_vertex},
                             {"crease_center", {shape.crease_center.x, shape.crease_center.y, shape.crease_center.z}},
                             {"spacing", shape.spacing},
                             {"labels", shape.truth}};
        const auto truth_path = truth_path_for(opts.out);
        std::ofstream out(truth_path, std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot create '" + truth_path.string() + "'");
        out << truth.dump() << '\n';
        if (!out) throw Error(ErrorCode::IoError, "failed writing '" + truth_path.string() + "'");
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitCantCreate;
    }
    return kExitOk;
}

int run_iov(const std::filesystem::path& csv, std::ostream& out, std::ostream& diag)
{
    std::ifstream in(csv);
    if (!in) {
        diag << "error: cannot open '" << csv.string() << "'\n";
        return kExitNoInput;
    }

    struct Group {
        std::string break_id;
        MeasurementMethod method;
        std::vector<std::optional<double>> angles;
    };
    std::vector<Group> groups;
    std::map<std::pair<std::string, int>, std::size_t> group_of;

    try {
        std::string line;
        if (!getline_trimmed(in, line)) throw Error(ErrorCode::ParseError, "empty file");
        const auto col = header_index(split_csv(line));
        const std::string break_col = col.contains("break") ? "break" : "break_id";
        if (!col.contains(break_col) || !col.contains("method")) {
            throw Error(ErrorCode::ParseError, "header needs break and method columns");
        }
        const bool wide = col.contains("theta") && col.contains("phi") && col.contains("psi");
        if (!wide && !col.contains("angle")) {
            throw Error(ErrorCode::ParseError, "header needs either theta,phi,psi or angle");
        }

        std::size_t line_no = 1;
        while (getline_trimmed(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto cells = split_csv(line);
            auto cell = [&](const std::string& name) -> std::string {
                const std::size_t i = col.at(name);
                return i < cells.size() ? cells[i] : std::string();
            };
            const std::string id = cell(break_col);
            if (id.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty break id");
            const MeasurementMethod method = parse_method(cell("method"));
            const auto key = std::make_pair(id, static_cast<int>(method));
            auto it = group_of.find(key);
            if (it == group_of.end()) {
                it = group_of.emplace(key, groups.size()).first;
                groups.push_back({id, method, {}});
            }
            Group& g = groups[it->second];
            for (const char* name : wide ? std::vector<const char*>{"theta", "phi", "psi"} : std::vector<const char*>{"angle"}) {
                const std::string v = cell(name);
                if (v.empty()) {
                    g.angles.push_back(std::nullopt);
                } else {
                    g.angles.push_back(parse_real(v, line_no, name));
                }
            }
        }
    } catch (const Error& e) {
        diag << "error: " << csv.string() << ": " << e.what() << '\n';
        return kExitDataErr;
    }

    std::vector<IovRecord> complete;
    char buf[256];
    out << "break,method,theta,phi,psi,iov\n";
    for (const Group& g : groups) {
        std::vector<double> present;
        for (const auto& a : g.angles) {
            if (a) present.push_back(*a);
        }
        if (present.size() != 3 || g.angles.size() != 3) {
            diag << "incomplete: break " << g.break_id << " (" << to_string(g.method) << ") has " << present.size()
                 << " of 3 angles; excluded\n";
            out << g.break_id << ',' << to_string(g.method) << ",,,,incomplete\n";
            continue;
        }
        try {
            complete.push_back(make_iov_record(g.break_id, g.method, present[0], present[1], present[2]));
        } catch (const Error& e) {
            diag << "error: break " << g.break_id << ": " << e.what() << '\n';
            return kExitDataErr;
        }
        const IovRecord& r = complete.back();
        std::snprintf(buf, sizeof(buf), "%s,%s,%.4f,%.4f,%.4f,%.4f\n", r.break_id.c_str(),
                      std::string(to_string(r.method)).c_str(), r.theta, r.phi, r.psi, r.value);
        out << buf;
    }

    out << "\nmethod,N,min,mean,median,max,sd\n";
    for (MeasurementMethod m : {MeasurementMethod::Manual, MeasurementMethod::Drag, MeasurementMethod::Xyz}) {
        IovSummary s;
        try {
            s = summarize_iov(complete, m);
        } catch (const Error&) {
            continue; // no records for this method
        }
        char sd[32] = "NA";
        if (s.sd_defined) std::snprintf(sd, sizeof(sd), "%.4f", s.sd);
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.4f,%.4f,%.4f,%.4f,%s\n", std::string(to_string(m)).c_str(), s.count,
                      s.min, s.mean, s.median, s.max, sd);
        out << buf;
    }
    return kExitOk;
}

int run_serve(const ServeOptions& opts, std::ostream& diag)
{
    ServiceConfig config;
    config.knn = opts.knn;
    config.ui_dir = opts.ui_dir;
    config.snapshot_dir = opts.snapshot_dir.empty() ? opts.mesh_dir : opts.snapshot_dir;
    config.max_upload_bytes = opts.max_upload_mb << 20;

    if (!opts.mesh_dir.empty() && !std::filesystem::is_directory(opts.mesh_dir)) {
        diag << "error: mesh directory '" << opts.mesh_dir.string() << "' does not exist\n";
        return kExitNoInput;
    }

    // Block the shutdown signals before the server spawns threads so only the
    // watcher below receives them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    MeasurementService service(config);
    if (!opts.mesh_dir.empty()) {
        for (const auto& h : service.preload_directory(opts.mesh_dir)) {
            diag << "loaded " << h.name << " as " << h.id << " (" << h.vertex_count << " vertices)\n";
        }
    }
    const auto port = service.bind(opts.bind, opts.port);
    if (!port) {
        diag << "error: cannot bind " << opts.bind << ':' << opts.port << " (address in use or not permitted)\n";
        return kExitOsErr;
    }
    diag << "serving on http://" << opts.bind << ':' << *port << '\n';

    std::thread watcher([&service, signals] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.serve();
    // serve() also returns if the listener fails; wake the watcher in that case.
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();

    try {
        for (const auto& p : service.flush()) diag << "wrote " << p.string() << '\n';
    } catch (const Error& e) {
        diag << "error: " << e.what() << '\n';
        return kExitCantCreate;
    }
    return kExitOk;
}

} // namespace vgonio::cli
