#include "vgonio/mesh_io.hpp"

#include "vgonio/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

namespace vgonio {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

MeshFormat format_from_path(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ply") return MeshFormat::Ply;
    if (ext == ".obj") return MeshFormat::Obj;
    throw Error(ErrorCode::UnsupportedFormat, "unrecognized mesh extension '" + ext + "'");
}

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::optional<double> to_double(std::string_view tok)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
    return v;
}

std::optional<long long> to_integer(std::string_view tok)
{
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
    return v;
}

void add_polygon(std::vector<Face>& faces, std::span<const std::uint32_t> poly, std::size_t& dropped)
{
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        const Face f{poly[0], poly[i], poly[i + 1]};
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            ++dropped;
            continue;
        }
        faces.push_back(f);
    }
}

// Normalizes file normals; any zero or non-finite normal discards them all.
void finish_mesh(TriangleMesh& mesh, std::size_t dropped, int knn)
{
    if (mesh.vertices.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no vertices");
    for (const Vec3& v : mesh.vertices) {
        if (!is_finite(v)) parse_fail("vertex coordinate is not finite");
    }
    if (dropped > 0) spdlog::warn("{}: dropped {} degenerate face(s)", mesh.name, dropped);

    bool usable = mesh.normals.size() == mesh.vertices.size();
    if (usable) {
        for (Vec3& nv : mesh.normals) {
            if (!is_finite(nv) || squared_norm(nv) == 0.0) {
                usable = false;
                break;
            }
            // already-unit normals stay bit-identical across a round trip
            if (std::abs(squared_norm(nv) - 1.0) > 1e-12) nv = normalized(nv);
        }
    }
    if (!usable) {
        if (!mesh.normals.empty()) spdlog::warn("{}: file normals unusable, estimating", mesh.name);
        mesh.normals = estimate_normals(mesh, knn);
    }
}

// ---------------------------------------------------------------- PLY

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(std::string_view s)
{
    if (s == "char" || s == "int8") return PlyType::Int8;
    if (s == "uchar" || s == "uint8") return PlyType::UInt8;
    if (s == "short" || s == "int16") return PlyType::Int16;
    if (s == "ushort" || s == "uint16") return PlyType::UInt16;
    if (s == "int" || s == "int32") return PlyType::Int32;
    if (s == "uint" || s == "uint32") return PlyType::UInt32;
    if (s == "float" || s == "float32") return PlyType::Float32;
    if (s == "double" || s == "float64") return PlyType::Float64;
    return std::nullopt;
}

std::size_t type_size(PlyType t)
{
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

bool is_float_type(PlyType t) { return t == PlyType::Float32 || t == PlyType::Float64; }

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;

    int find(std::string_view prop) const
    {
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (props[i].name == prop) return static_cast<int>(i);
        }
        return -1;
    }
};

// Pulls scalar values from the body in either encoding.
class PlyBodyReader {
public:
    PlyBodyReader(std::string_view body, std::size_t body_offset, bool binary)
        : body_(body), base_(body_offset), binary_(binary)
    {
    }

    double read(PlyType t, const PlyElement& el, std::size_t row)
    {
        return binary_ ? read_binary(t, el, row) : read_ascii(el, row);
    }

    void end_row()
    {
        if (binary_) return;
        // Rows are line-delimited in ascii; trailing tokens are not allowed.
        skip_inline_ws();
        if (pos_ < body_.size() && body_[pos_] != '\n' && body_[pos_] != '\r') {
            parse_fail("extra data at byte offset " + std::to_string(base_ + pos_));
        }
    }

private:
    void skip_inline_ws()
    {
        while (pos_ < body_.size() && (body_[pos_] == ' ' || body_[pos_] == '\t')) ++pos_;
    }

    [[noreturn]] void truncated(const PlyElement& el, std::size_t row) const
    {
        parse_fail("unexpected end of data in element '" + el.name + "' at row " + std::to_string(row) + " of " +
                   std::to_string(el.count) + " (byte offset " + std::to_string(base_ + pos_) + ")");
    }

    double read_ascii(const PlyElement& el, std::size_t row)
    {
        while (pos_ < body_.size() && std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
        if (pos_ >= body_.size()) truncated(el, row);
        const std::size_t start = pos_;
        while (pos_ < body_.size() && !std::isspace(static_cast<unsigned char>(body_[pos_]))) ++pos_;
        const auto v = to_double(body_.substr(start, pos_ - start));
        if (!v) parse_fail("malformed number in element '" + el.name + "' at byte offset " + std::to_string(base_ + start));
        return *v;
    }

    template <typename T>
    double take()
    {
        T v;
        std::memcpy(&v, body_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return static_cast<double>(v);
    }

    double read_binary(PlyType t, const PlyElement& el, std::size_t row)
    {
        if (pos_ + type_size(t) > body_.size()) truncated(el, row);
        switch (t) {
        case PlyType::Int8: return take<std::int8_t>();
        case PlyType::UInt8: return take<std::uint8_t>();
        case PlyType::Int16: return take<std::int16_t>();
        case PlyType::UInt16: return take<std::uint16_t>();
        case PlyType::Int32: return take<std::int32_t>();
        case PlyType::UInt32: return take<std::uint32_t>();
        case PlyType::Float32: return take<float>();
        case PlyType::Float64: return take<double>();
        }
        return 0.0;
    }

    std::string_view body_;
    std::size_t base_;
    bool binary_;
    std::size_t pos_ = 0;
};

std::uint8_t color_channel(double v, PlyType t)
{
    if (is_float_type(t)) v *= 255.0;
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

TriangleMesh load_ply(std::string_view data, std::string name, int knn)
{
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::optional<std::string_view> {
        if (pos >= data.size()) return std::nullopt;
        const std::size_t end = data.find('\n', pos);
        const std::size_t stop = end == std::string_view::npos ? data.size() : end;
        std::string_view line = data.substr(pos, stop - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end == std::string_view::npos ? data.size() : end + 1;
        ++line_no;
        return line;
    };

    const auto magic = next_line();
    if (!magic || *magic != "ply") parse_fail("missing 'ply' magic on line 1");

    bool binary = false;
    bool have_format = false;
    bool have_end = false;
    std::vector<PlyElement> elements;
    std::string comment_name;
    while (auto line = next_line()) {
        const auto tok = split_ws(*line);
        if (tok.empty()) continue;
        const std::string where = " (header line " + std::to_string(line_no) + ")";
        if (tok[0] == "end_header") {
            have_end = true;
            break;
        }
        if (tok[0] == "comment" || tok[0] == "obj_info") {
            if (tok.size() >= 3 && tok[0] == "comment" && tok[1] == "name") comment_name = std::string(tok[2]);
            continue;
        }
        if (tok[0] == "format") {
            if (tok.size() < 2) parse_fail("malformed format line" + where);
            if (tok[1] == "ascii") {
                binary = false;
            } else if (tok[1] == "binary_little_endian") {
                binary = true;
            } else {
                throw Error(ErrorCode::UnsupportedFormat, "PLY encoding '" + std::string(tok[1]) + "' not supported");
            }
            have_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) parse_fail("malformed element line" + where);
            const auto count = to_integer(tok[2]);
            if (!count || *count < 0) parse_fail("bad element count" + where);
            elements.push_back({std::string(tok[1]), static_cast<std::size_t>(*count), {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) parse_fail("property before any element" + where);
            PlyProperty prop;
            if (tok.size() == 5 && tok[1] == "list") {
                const auto ct = ply_type(tok[2]);
                const auto it = ply_type(tok[3]);
                if (!ct || !it || is_float_type(*ct)) parse_fail("bad list property types" + where);
                prop = {std::string(tok[4]), *it, true, *ct};
            } else if (tok.size() == 3) {
                const auto t = ply_type(tok[1]);
                if (!t) parse_fail("unknown property type '" + std::string(tok[1]) + "'" + where);
                prop = {std::string(tok[2]), *t, false, PlyType::UInt8};
            } else {
                parse_fail("malformed property line" + where);
            }
            elements.back().props.push_back(prop);
        } else {
            parse_fail("unexpected header keyword '" + std::string(tok[0]) + "'" + where);
        }
    }
    if (!have_format) parse_fail("header is missing the format line");
    if (!have_end) parse_fail("header is missing end_header");

    const auto vertex_el = std::find_if(elements.begin(), elements.end(), [](const auto& e) { return e.name == "vertex"; });
    if (vertex_el == elements.end()) parse_fail("header is missing element 'vertex'");
    for (const char* axis : {"x", "y", "z"}) {
        if (vertex_el->find(axis) < 0) parse_fail(std::string("element 'vertex' lacks property '") + axis + "'");
    }

    TriangleMesh mesh;
    mesh.name = !name.empty() ? std::move(name) : (comment_name.empty() ? std::string("mesh") : comment_name);
    std::size_t dropped = 0;
    PlyBodyReader reader(data.substr(pos), pos, binary);

    for (const PlyElement& el : elements) {
        if (el.name == "vertex") {
            const int ix = el.find("x"), iy = el.find("y"), iz = el.find("z");
            const int inx = el.find("nx"), iny = el.find("ny"), inz = el.find("nz");
            const int ir = el.find("red"), ig = el.find("green"), ib = el.find("blue");
            const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;
            const bool has_colors = ir >= 0 && ig >= 0 && ib >= 0;
            mesh.vertices.resize(el.count);
            if (has_normals) mesh.normals.resize(el.count);
            if (has_colors) mesh.colors.resize(el.count);
            std::vector<double> row(el.props.size());
            for (std::size_t r = 0; r < el.count; ++r) {
                for (std::size_t p = 0; p < el.props.size(); ++p) {
                    const PlyProperty& prop = el.props[p];
                    if (prop.is_list) {
                        const auto cnt = static_cast<std::size_t>(reader.read(prop.count_type, el, r));
                        for (std::size_t c = 0; c < cnt; ++c) reader.read(prop.type, el, r);
                        row[p] = 0.0;
                    } else {
                        row[p] = reader.read(prop.type, el, r);
                    }
                }
                reader.end_row();
                mesh.vertices[r] = {row[ix], row[iy], row[iz]};
                if (has_normals) mesh.normals[r] = {row[inx], row[iny], row[inz]};
                if (has_colors) {
                    mesh.colors[r] = {color_channel(row[ir], el.props[ir].type), color_channel(row[ig], el.props[ig].type),
                                      color_channel(row[ib], el.props[ib].type)};
                }
            }
        } else if (el.name == "face") {
            int idx = el.find("vertex_indices");
            if (idx < 0) idx = el.find("vertex_index");
            if (idx < 0 || !el.props[idx].is_list) parse_fail("element 'face' lacks a vertex_indices list");
            std::vector<std::uint32_t> poly;
            for (std::size_t r = 0; r < el.count; ++r) {
                for (std::size_t p = 0; p < el.props.size(); ++p) {
                    const PlyProperty& prop = el.props[p];
                    if (!prop.is_list) {
                        reader.read(prop.type, el, r);
                        continue;
                    }
                    const double cnt_d = reader.read(prop.count_type, el, r);
                    if (cnt_d < 0) parse_fail("negative list length in element 'face'");
                    const auto cnt = static_cast<std::size_t>(cnt_d);
                    poly.clear();
                    for (std::size_t c = 0; c < cnt; ++c) {
                        const double v = reader.read(prop.type, el, r);
                        if (static_cast<int>(p) == idx) {
                            if (v < 0 || v >= static_cast<double>(mesh.vertices.size())) {
                                parse_fail("face " + std::to_string(r) + " references vertex " +
                                           std::to_string(static_cast<long long>(v)) + " out of range");
                            }
                            poly.push_back(static_cast<std::uint32_t>(v));
                        }
                    }
                    if (static_cast<int>(p) == idx) add_polygon(mesh.faces, poly, dropped);
                }
                reader.end_row();
            }
        } else {
            for (std::size_t r = 0; r < el.count; ++r) {
                for (const PlyProperty& prop : el.props) {
                    if (prop.is_list) {
                        const auto cnt = static_cast<std::size_t>(reader.read(prop.count_type, el, r));
                        for (std::size_t c = 0; c < cnt; ++c) reader.read(prop.type, el, r);
                    } else {
                        reader.read(prop.type, el, r);
                    }
                }
                reader.end_row();
            }
        }
    }

    finish_mesh(mesh, dropped, knn);
    return mesh;
}

// ---------------------------------------------------------------- OBJ

TriangleMesh load_obj(std::string_view data, std::string name, int knn)
{
    TriangleMesh mesh;
    mesh.name = name.empty() ? std::string("mesh") : std::move(name);
    std::vector<Vec3> file_normals;
    std::vector<Vec3> corner_normals; // per vertex, first referenced vn
    std::vector<char> has_corner_normal;
    std::vector<Rgb> colors;
    bool any_color = false;
    std::size_t dropped = 0;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    std::vector<std::uint32_t> poly;
    while (pos < data.size()) {
        const std::size_t end = data.find('\n', pos);
        const std::size_t stop = end == std::string_view::npos ? data.size() : end;
        std::string_view line = data.substr(pos, stop - pos);
        pos = end == std::string_view::npos ? data.size() : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string where = " on line " + std::to_string(line_no);

        if (tok[0] == "v") {
            if (tok.size() != 4 && tok.size() != 7) parse_fail("vertex needs 3 coordinates" + where);
            double c[6] = {};
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const auto v = to_double(tok[i]);
                if (!v) parse_fail("malformed number '" + std::string(tok[i]) + "'" + where);
                c[i - 1] = *v;
            }
            mesh.vertices.push_back({c[0], c[1], c[2]});
            if (tok.size() == 7) {
                any_color = true;
                colors.push_back({color_channel(c[3], PlyType::Float64), color_channel(c[4], PlyType::Float64),
                                  color_channel(c[5], PlyType::Float64)});
            } else {
                colors.push_back({255, 255, 255});
            }
        } else if (tok[0] == "vn") {
            if (tok.size() != 4) parse_fail("normal needs 3 components" + where);
            double c[3];
            for (int i = 0; i < 3; ++i) {
                const auto v = to_double(tok[i + 1]);
                if (!v) parse_fail("malformed number '" + std::string(tok[i + 1]) + "'" + where);
                c[i] = *v;
            }
            file_normals.push_back({c[0], c[1], c[2]});
        } else if (tok[0] == "f") {
            if (tok.size() < 4) parse_fail("face needs at least 3 vertices" + where);
            corner_normals.resize(mesh.vertices.size());
            has_corner_normal.resize(mesh.vertices.size(), 0);
            poly.clear();
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const std::string_view ref = tok[i];
                const std::size_t s1 = ref.find('/');
                const auto vi = to_integer(ref.substr(0, s1));
                if (!vi || *vi == 0) parse_fail("malformed face reference '" + std::string(ref) + "'" + where);
                const long long nv = static_cast<long long>(mesh.vertices.size());
                const long long v = *vi < 0 ? nv + *vi : *vi - 1;
                if (v < 0 || v >= nv) parse_fail("face references missing vertex" + where);
                poly.push_back(static_cast<std::uint32_t>(v));
                if (s1 != std::string_view::npos) {
                    const std::size_t s2 = ref.find('/', s1 + 1);
                    if (s2 != std::string_view::npos && s2 + 1 < ref.size()) {
                        const auto ni = to_integer(ref.substr(s2 + 1));
                        const long long nn = static_cast<long long>(file_normals.size());
                        if (!ni || *ni == 0) parse_fail("malformed normal reference" + where);
                        const long long n = *ni < 0 ? nn + *ni : *ni - 1;
                        if (n < 0 || n >= nn) parse_fail("face references missing normal" + where);
                        if (!has_corner_normal[v]) {
                            corner_normals[v] = file_normals[static_cast<std::size_t>(n)];
                            has_corner_normal[v] = 1;
                        }
                    }
                }
            }
            add_polygon(mesh.faces, poly, dropped);
        }
    }

    has_corner_normal.resize(mesh.vertices.size(), 0);
    corner_normals.resize(mesh.vertices.size());
    if (!mesh.vertices.empty() &&
        std::all_of(has_corner_normal.begin(), has_corner_normal.end(), [](char c) { return c != 0; })) {
        mesh.normals = std::move(corner_normals);
    } else if (file_normals.size() == mesh.vertices.size() && mesh.faces.empty()) {
        mesh.normals = std::move(file_normals); // point cloud with one vn per v
    }
    if (any_color) mesh.colors = std::move(colors);

    finish_mesh(mesh, dropped, knn);
    return mesh;
}

void write_raw(std::ostream& out, const void* p, std::size_t n) { out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

TriangleMesh load_mesh(std::string_view bytes, MeshFormat format, std::string name, int knn)
{
    return format == MeshFormat::Ply ? load_ply(bytes, std::move(name), knn) : load_obj(bytes, std::move(name), knn);
}

TriangleMesh load_mesh(std::istream& in, MeshFormat format, std::string name, int knn)
{
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) throw Error(ErrorCode::IoError, "failed reading mesh stream");
    return load_mesh(std::string_view(data), format, std::move(name), knn);
}

TriangleMesh load_mesh_file(const std::filesystem::path& path, int knn)
{
    const MeshFormat format = format_from_path(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    return load_mesh(in, format, path.stem().string(), knn);
}

void write_ply(const TriangleMesh& mesh, std::ostream& out, PlyEncoding encoding)
{
    const bool binary = encoding == PlyEncoding::BinaryLittleEndian;
    const bool normals = mesh.normals.size() == mesh.vertices.size() && !mesh.vertices.empty();
    const bool colors = mesh.has_colors();

    std::ostringstream header;
    header << "ply\n"
           << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    if (!mesh.name.empty() && mesh.name.find_first_of(" \t\r\n") == std::string::npos) {
        header << "comment name " << mesh.name << "\n";
    }
    header << "element vertex " << mesh.vertices.size() << "\n"
           << "property double x\nproperty double y\nproperty double z\n";
    if (normals) header << "property double nx\nproperty double ny\nproperty double nz\n";
    if (colors) header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    header << "element face " << mesh.faces.size() << "\n"
           << "property list uchar int vertex_indices\n"
           << "end_header\n";
    out << header.str();

    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        if (binary) {
            const double xyz[3] = {v.x, v.y, v.z};
            write_raw(out, xyz, sizeof(xyz));
            if (normals) {
                const Vec3& n = mesh.normals[i];
                const double nxyz[3] = {n.x, n.y, n.z};
                write_raw(out, nxyz, sizeof(nxyz));
            }
            if (colors) {
                const std::uint8_t rgb[3] = {mesh.colors[i].r, mesh.colors[i].g, mesh.colors[i].b};
                write_raw(out, rgb, sizeof(rgb));
            }
        } else {
            out << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z);
            if (normals) {
                const Vec3& n = mesh.normals[i];
                out << ' ' << format_double(n.x) << ' ' << format_double(n.y) << ' ' << format_double(n.z);
            }
            if (colors) {
                out << ' ' << int(mesh.colors[i].r) << ' ' << int(mesh.colors[i].g) << ' ' << int(mesh.colors[i].b);
            }
            out << '\n';
        }
    }
    for (const Face& f : mesh.faces) {
        if (binary) {
            const std::uint8_t three = 3;
            const std::int32_t idx[3] = {static_cast<std::int32_t>(f[0]), static_cast<std::int32_t>(f[1]),
                                         static_cast<std::int32_t>(f[2])};
            write_raw(out, &three, 1);
            write_raw(out, idx, sizeof(idx));
        } else {
            out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
        }
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing PLY");
}

void export_colored_mesh(const TriangleMesh& mesh, std::ostream& out, PlyEncoding encoding)
{
    if (mesh.colors.size() != mesh.vertices.size()) {
        throw Error(ErrorCode::InvalidParams, "export_colored_mesh requires one color per vertex");
    }
    write_ply(mesh, out, encoding);
}

void write_ply_file(const TriangleMesh& mesh, const std::filesystem::path& path, PlyEncoding encoding)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot create '" + path.string() + "'");
    write_ply(mesh, out, encoding);
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

} // namespace vgonio
