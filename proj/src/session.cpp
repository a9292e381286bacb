#include "vgonio/session.hpp"

#include "vgonio/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace vgonio {

std::string_view to_string(MeasurementMethod method) noexcept
{
    switch (method) {
    case MeasurementMethod::Manual: return "man";
    case MeasurementMethod::Drag: return "drag";
    case MeasurementMethod::Xyz: return "xyz";
    }
    return "xyz";
}

MeasurementMethod parse_method(std::string_view text)
{
    if (text == "man" || text == "manual") return MeasurementMethod::Manual;
    if (text == "drag") return MeasurementMethod::Drag;
    if (text == "xyz") return MeasurementMethod::Xyz;
    throw Error(ErrorCode::InvalidParams, "unknown method '" + std::string(text) + "'");
}

std::string format_timestamp(Timestamp t)
{
    const std::time_t tt = t.time_since_epoch().count();
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Timestamp parse_timestamp(std::string_view text)
{
    std::tm tm{};
    const std::string s(text);
    const char* end = strptime(s.c_str(), "%Y-%m-%dT%H:%M:%S", &tm);
    if (end == nullptr || (*end != '\0' && std::string_view(end) != "Z")) {
        throw Error(ErrorCode::ParseError, "bad ISO-8601 timestamp '" + s + "'");
    }
    return Timestamp(std::chrono::seconds(timegm(&tm)));
}

const std::array<ColorPair, kPaletteSize>& palette() noexcept
{
    static const std::array<ColorPair, kPaletteSize> pairs{{
        {{228, 26, 28}, {55, 126, 184}},   // red / blue
        {{255, 127, 0}, {106, 61, 154}},   // orange / purple
        {{255, 221, 0}, {31, 120, 60}},    // yellow / green
        {{240, 60, 160}, {0, 150, 136}},   // magenta / teal
        {{140, 80, 20}, {0, 190, 255}},    // brown / sky
        {{200, 255, 60}, {120, 0, 60}},    // lime / maroon
        {{0, 0, 139}, {255, 160, 122}},    // navy / salmon
        {{40, 40, 40}, {255, 215, 180}},   // charcoal / peach
    }};
    return pairs;
}

Session::Session(std::string mesh_name, Clock clock) : mesh_name_(std::move(mesh_name)), clock_(std::move(clock))
{
    if (!clock_) {
        clock_ = [] { return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()); };
    }
}

std::size_t Session::palette_for_locked(std::uint32_t seed) const
{
    if (!last_seed_) return 0;
    if (*last_seed_ == seed) return (location_count_ - 1) % kPaletteSize;
    return location_count_ % kPaletteSize;
}

std::size_t Session::palette_for(std::uint32_t seed) const
{
    std::lock_guard lock(mutex_);
    return palette_for_locked(seed);
}

MeasurementRecord Session::record(const MeasurementResult& result, MeasurementMethod method)
{
    std::lock_guard lock(mutex_);
    if (!open_) throw Error(ErrorCode::SessionClosed, "session for '" + mesh_name_ + "' is closed");

    MeasurementRecord rec;
    rec.id = records_.size() + 1;
    rec.mesh = result.mesh_name.empty() ? mesh_name_ : result.mesh_name;
    rec.method = method;
    rec.center = result.patch.center;
    rec.radius = result.params.radius;
    rec.metric = result.params.metric;
    rec.lambda = result.params.lambda;
    rec.n = result.patch.size();
    rec.n_plus = result.fits.plus_count;
    rec.n_minus = result.fits.minus_count;
    rec.theta_deg = result.theta_deg;
    rec.fit = result.fit;
    rec.palette = palette_for_locked(result.patch.seed);
    rec.timestamp = clock_();

    if (!last_seed_ || *last_seed_ != result.patch.seed) ++location_count_;
    last_seed_ = result.patch.seed;
    records_.push_back(rec);
    return rec;
}

void Session::close()
{
    std::lock_guard lock(mutex_);
    open_ = false;
}

bool Session::is_open() const
{
    std::lock_guard lock(mutex_);
    return open_;
}

std::vector<MeasurementRecord> Session::records() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

std::size_t Session::size() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

namespace {

std::string sig6(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fixed4(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line_no, std::string_view column)
{
    T v{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad value '" + std::string(tok) +
                                               "' in column " + std::string(column));
    }
    return v;
}

} // namespace

std::string format_csv_row(const MeasurementRecord& r)
{
    std::string row;
    row += std::to_string(r.id) + ',';
    row += r.mesh + ',';
    row += std::string(to_string(r.method)) + ',';
    row += sig6(r.center.x) + ',' + sig6(r.center.y) + ',' + sig6(r.center.z) + ',';
    row += sig6(r.radius) + ',';
    row += std::string(to_string(r.metric)) + ',';
    row += sig6(r.lambda) + ',';
    row += std::to_string(r.n) + ',' + std::to_string(r.n_plus) + ',' + std::to_string(r.n_minus) + ',';
    row += fixed4(r.theta_deg) + ',';
    row += sig6(r.fit) + ',';
    row += std::to_string(r.palette) + ',';
    row += format_timestamp(r.timestamp);
    return row;
}

void export_csv(std::span<const MeasurementRecord> records, std::ostream& out)
{
    out << kCsvHeader << '\n';
    for (const MeasurementRecord& r : records) out << format_csv_row(r) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "failed writing CSV");
}

std::string export_csv(std::span<const MeasurementRecord> records)
{
    std::ostringstream out;
    export_csv(records, out);
    return out.str();
}

std::vector<MeasurementRecord> parse_measurement_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    std::map<std::string, std::size_t, std::less<>> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);
    for (std::string_view name : split_csv(kCsvHeader)) {
        if (!col.contains(name)) throw Error(ErrorCode::ParseError, "CSV lacks column '" + std::string(name) + "'");
    }

    std::vector<MeasurementRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " fields");
        }
        auto get = [&](std::string_view name) { return f[col.find(name)->second]; };
        auto real = [&](std::string_view name) { return parse_number<double>(get(name), line_no, name); };
        auto count = [&](std::string_view name) { return parse_number<std::size_t>(get(name), line_no, name); };

        MeasurementRecord r;
        r.id = parse_number<std::uint64_t>(get("id"), line_no, "id");
        r.mesh = std::string(get("mesh"));
        r.method = parse_method(get("method"));
        r.center = {real("x"), real("y"), real("z")};
        r.radius = real("radius");
        r.metric = parse_metric(get("metric"));
        r.lambda = real("lambda");
        r.n = count("n");
        r.n_plus = count("n_plus");
        r.n_minus = count("n_minus");
        r.theta_deg = real("theta_deg");
        r.fit = real("fit");
        r.palette = count("palette");
        r.timestamp = parse_timestamp(get("timestamp_iso8601"));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Rgb> base_colors(const TriangleMesh& mesh, Rgb base)
{
    if (mesh.has_colors()) return mesh.colors;
    return std::vector<Rgb>(mesh.vertex_count(), base);
}

void paint(std::vector<Rgb>& colors, const MeasurementResult& result, std::size_t palette_index)
{
    const ColorPair& pair = palette()[palette_index % kPaletteSize];
    for (std::size_t i = 0; i < result.patch.indices.size(); ++i) {
        colors.at(result.patch.indices[i]) = result.labels[i] == Side::Minus ? pair.first : pair.second;
    }
}

double iov(double theta, double phi, double psi)
{
    for (double a : {theta, phi, psi}) {
        if (!(a >= 0.0 && a <= 180.0)) {
            throw Error(ErrorCode::OutOfRange, "angle " + std::to_string(a) + " outside [0, 180]");
        }
    }
    return (std::abs(theta - phi) + std::abs(theta - psi) + std::abs(phi - psi)) / 3.0;
}

IovRecord make_iov_record(std::string break_id, MeasurementMethod method, double theta, double phi, double psi)
{
    return {std::move(break_id), method, theta, phi, psi, iov(theta, phi, psi)};
}

IovSummary summarize_iov(std::span<const IovRecord> records, std::optional<MeasurementMethod> filter)
{
    std::vector<double> values;
    for (const IovRecord& r : records) {
        if (!filter || r.method == *filter) values.push_back(r.value);
    }
    if (values.empty()) throw Error(ErrorCode::EmptySet, "no IOV records match the filter");
    std::sort(values.begin(), values.end());

    IovSummary s;
    s.count = values.size();
    s.min = values.front();
    s.max = values.back();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.count);
    const std::size_t mid = s.count / 2;
    s.median = s.count % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    if (s.count < 2) {
        s.sd = 0.0;
        s.sd_defined = false;
    } else {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
    }
    return s;
}

} // namespace vgonio
