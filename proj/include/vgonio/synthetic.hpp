#pragma once

#include "vgonio/mesh.hpp"

#include <cstdint>
#include <vector>

namespace vgonio {

/// Two planar strips meeting along a straight crease. The crease runs along x
/// through the origin and the outward bisector of the ridge is +z.
struct WedgeSpec {
    double angle_deg = 90.0;       ///< dihedral angle of the solid at the ridge, in (0, 180]
    double half_width = 1.0;       ///< half the crease length
    double depth = 1.0;            ///< extent of each face away from the crease
    std::size_t vertices_per_side = 2000;
    double noise_sigma = 0.0;      ///< displacement along normals, model units
    std::uint64_t seed = 0;
};

/// Ground-truth side of each generated vertex.
enum : std::uint8_t { kSideA = 0, kSideB = 1, kOnCrease = 2 };

struct SyntheticShape {
    TriangleMesh mesh;
    std::vector<std::uint8_t> truth; ///< kSideA, kSideB or kOnCrease per vertex
    double angle_deg = 0.0;
    Vec3 crease_center;
    std::uint32_t crease_vertex = 0; ///< vertex at crease_center
    double spacing = 0.0;            ///< larger of the two grid spacings
};

/// Throws InvalidSpec for out-of-range fields.
void validate(const WedgeSpec& spec);

/// Vertices sit on a grid whose first row lies on the crease; crease vertices
/// carry the bisector normal. Noise-free meshes carry exact analytic normals;
/// displaced meshes get normals estimated from their geometry.
SyntheticShape make_wedge(const WedgeSpec& spec);

/// Wedge whose crease is a circular arc of radius `arc_radius` in the xy-plane
/// (surfaces of revolution about z), with the same local dihedral angle
/// everywhere. `half_width` is half the arc length.
SyntheticShape make_curved_ridge(const WedgeSpec& spec, double arc_radius);

/// Wedge with a deterministic multi-scale bump field of the given peak
/// amplitude added along the normals.
SyntheticShape make_rugose_wedge(const WedgeSpec& spec, double amplitude);

} // namespace vgonio
