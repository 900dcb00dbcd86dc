#pragma once

#include <filesystem>

#include "tpms/mesh.hpp"

namespace tpms {

/// Binary STL: 80-byte header, uint32 triangle count, then per triangle a
/// float32 normal, three float32 vertices and a zero uint16 attribute.
/// All fields little-endian regardless of host byte order.
void write_stl(const SurfaceMesh& mesh, const std::filesystem::path& path);

/// Reads a binary STL back into a mesh, welding bitwise-identical
/// float32 vertex positions.
SurfaceMesh read_stl(const std::filesystem::path& path);

/// ASCII Wavefront OBJ (v/f records, 1-based indices).
void write_obj(const SurfaceMesh& mesh, const std::filesystem::path& path);

} // namespace tpms
