#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tpms/field.hpp"

namespace tpms {

/// Tiling and sampling parameters for one lattice. resolution is voxels
/// per unit-cell edge; one unit cell spans 2*pi implicit units and
/// cell_length_um physical micrometers.
struct LatticeSpec {
    Eigen::Vector3i tiling{4, 4, 2};
    double cell_length_um = 50.0;
    int resolution = 64;

    Eigen::Vector3i grid_dims() const { return tiling * resolution; }
    double voxel_size_implicit() const { return 2.0 * M_PI / resolution; }
    double voxel_size_um() const { return cell_length_um / resolution; }
    /// Physical scale factor, micrometers per implicit unit.
    double um_per_implicit() const { return cell_length_um / (2.0 * M_PI); }
};

void check_spec(const LatticeSpec& spec);

/// Dense boolean occupancy over the lattice domain, x-fastest layout.
struct VoxelGrid {
    Eigen::Vector3i dims{0, 0, 0};
    double cell_size = 0.0; // implicit units
    std::vector<std::uint8_t> occupancy;

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims.x()) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims.y()) * k);
    }
    bool at(int i, int j, int k) const { return occupancy[index(i, j, k)] != 0; }
    std::size_t cell_count() const { return occupancy.size(); }
    std::size_t solid_count() const;
    double solid_fraction() const;
    /// Center of voxel (i,j,k) in implicit coordinates.
    Vec3 center(int i, int j, int k) const {
        return Vec3((i + 0.5) * cell_size, (j + 0.5) * cell_size, (k + 0.5) * cell_size);
    }
};

/// Samples is_solid at every voxel center. Parallelized over slabs; the
/// result is independent of the thread count.
VoxelGrid voxelize(const TpmsField& field, const LatticeSpec& spec);

struct ComponentReport {
    std::size_t components_total = 0;
    std::size_t discarded_voxels = 0;
    bool has_enclosed_cavities = false; // on the filtered grid
};

/// Keeps only the largest 6-connected solid component. Throws
/// std::runtime_error when the grid has no solid voxels.
std::pair<VoxelGrid, ComponentReport> filter_components(const VoxelGrid& grid);

inline constexpr double kValidityMassRetention = 0.95;

/// A design is printable when the filtered grid keeps at least 95% of the
/// solid voxels and encloses no void cavities.
bool is_valid_design(const TpmsField& field, const LatticeSpec& spec);

/// Run-length-encoded debug dump (x-fastest scan order).
std::string rle_dump(const VoxelGrid& grid);

} // namespace tpms
