#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "tpms/lattice.hpp"

namespace tpms {

/// Triangle surface mesh in physical micrometers.
struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
};

/// Contours the solidity field with marching tetrahedra over a Kuhn
/// 6-tet split of each sample cube. The split is face-consistent between
/// neighboring cubes and tetrahedra have no ambiguous sign cases, so the
/// output is closed and 2-manifold by construction. Samples live at voxel
/// centers with an outside padding layer that caps the surface at the
/// domain boundary. Throws std::runtime_error on an empty structure.
SurfaceMesh extract_surface(const TpmsField& field, const LatticeSpec& spec);

/// Same contouring over a binary occupancy grid (+1 solid / -1 void
/// samples); crossings sit midway between solid and void voxel centers.
SurfaceMesh extract_surface(const VoxelGrid& grid, const LatticeSpec& spec);

/// True when every edge is shared by exactly two triangles and no
/// triangle is degenerate.
bool mesh_is_closed_manifold(const SurfaceMesh& mesh);

/// Divergence-theorem volume; positive for outward-oriented closed meshes.
double mesh_signed_volume(const SurfaceMesh& mesh);

struct Box3 {
    Vec3 lo, hi;
};

Box3 mesh_bounding_box(const SurfaceMesh& mesh);

} // namespace tpms
