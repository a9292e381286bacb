#pragma once

#include "vgonio/mesh.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace vgonio {

enum class MeshFormat { Ply, Obj };

/// Guesses the format from a file extension (".ply", ".obj", case-insensitive).
MeshFormat format_from_path(const std::filesystem::path& path);

/// Parses a PLY (ascii or binary little-endian) or OBJ mesh. Normals present
/// in the file are normalized and kept; otherwise they are estimated.
/// Degenerate faces are dropped with a warning; polygons are fan-triangulated.
TriangleMesh load_mesh(std::istream& in, MeshFormat format, std::string name = {}, int knn = kDefaultKnn);

TriangleMesh load_mesh(std::string_view bytes, MeshFormat format, std::string name = {}, int knn = kDefaultKnn);

/// Loads from disk; format from the extension, name from the file stem.
TriangleMesh load_mesh_file(const std::filesystem::path& path, int knn = kDefaultKnn);

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Writes vertices (as doubles), normals, colors (when present) and faces.
/// Binary output re-imports bit-exactly.
void write_ply(const TriangleMesh& mesh, std::ostream& out, PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

/// Same as write_ply but requires per-vertex colors.
void export_colored_mesh(const TriangleMesh& mesh, std::ostream& out,
                         PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

void write_ply_file(const TriangleMesh& mesh, const std::filesystem::path& path,
                    PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

} // namespace vgonio
