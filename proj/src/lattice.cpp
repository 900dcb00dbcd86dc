#include "tpms/lattice.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace tpms {

void check_spec(const LatticeSpec& spec) {
    if (spec.tiling.minCoeff() < 1) throw std::invalid_argument("tiling components must be >= 1");
    if (spec.resolution < 8) throw std::invalid_argument("resolution must be >= 8 voxels per cell");
    if (!(spec.cell_length_um > 0.0)) throw std::invalid_argument("cell length must be positive");
}

std::size_t VoxelGrid::solid_count() const {
    std::size_t n = 0;
    for (std::uint8_t v : occupancy) n += v;
    return n;
}

double VoxelGrid::solid_fraction() const {
    return occupancy.empty() ? 0.0 : static_cast<double>(solid_count()) / static_cast<double>(occupancy.size());
}

VoxelGrid voxelize(const TpmsField& field, const LatticeSpec& spec) {
    check_spec(spec);
    if (!field.valid()) throw std::invalid_argument("invalid TPMS field");

    VoxelGrid grid;
    grid.dims = spec.grid_dims();
    grid.cell_size = spec.voxel_size_implicit();
    grid.occupancy.assign(static_cast<std::size_t>(grid.dims.x()) * grid.dims.y() * grid.dims.z(), 0);

    const int nz = grid.dims.z();
    auto fill_slab = [&](int k0, int k1) {
        for (int k = k0; k < k1; ++k) {
            for (int j = 0; j < grid.dims.y(); ++j) {
                std::size_t idx = grid.index(0, j, k);
                for (int i = 0; i < grid.dims.x(); ++i, ++idx) {
                    grid.occupancy[idx] = is_solid(field, grid.center(i, j, k)) ? 1 : 0;
                }
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(nz)));
    if (nthreads <= 1) {
        fill_slab(0, nz);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) {
            const int k0 = nz * t / nthreads;
            const int k1 = nz * (t + 1) / nthreads;
            pool.emplace_back(fill_slab, k0, k1);
        }
        for (auto& th : pool) th.join();
    }
    return grid;
}

namespace {

// Iterative 6-connected flood fill over cells matching `value`, writing
// `label` into labels. Returns the component size.
std::size_t flood_fill(const VoxelGrid& grid, std::vector<std::int32_t>& labels, std::size_t seed,
                       std::uint8_t value, std::int32_t label) {
    const int nx = grid.dims.x(), ny = grid.dims.y(), nz = grid.dims.z();
    std::vector<std::size_t> stack{seed};
    labels[seed] = label;
    std::size_t count = 0;
    while (!stack.empty()) {
        const std::size_t idx = stack.back();
        stack.pop_back();
        ++count;
        const int i = static_cast<int>(idx % nx);
        const int j = static_cast<int>((idx / nx) % ny);
        const int k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
        auto visit = [&](int ii, int jj, int kk) {
            if (ii < 0 || jj < 0 || kk < 0 || ii >= nx || jj >= ny || kk >= nz) return;
            const std::size_t n = grid.index(ii, jj, kk);
            if (labels[n] == 0 && grid.occupancy[n] == value) {
                labels[n] = label;
                stack.push_back(n);
            }
        };
        visit(i - 1, j, k);
        visit(i + 1, j, k);
        visit(i, j - 1, k);
        visit(i, j + 1, k);
        visit(i, j, k - 1);
        visit(i, j, k + 1);
    }
    return count;
}

bool has_enclosed_cavities(const VoxelGrid& grid) {
    const int nx = grid.dims.x(), ny = grid.dims.y(), nz = grid.dims.z();
    std::vector<std::int32_t> labels(grid.cell_count(), 0);
    // Flood the void from every boundary void cell; anything void left
    // unlabeled is an enclosed cavity.
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                if (i != 0 && j != 0 && k != 0 && i != nx - 1 && j != ny - 1 && k != nz - 1) continue;
                const std::size_t idx = grid.index(i, j, k);
                if (grid.occupancy[idx] == 0 && labels[idx] == 0) flood_fill(grid, labels, idx, 0, 1);
            }
        }
    }
    for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
        if (grid.occupancy[idx] == 0 && labels[idx] == 0) return true;
    }
    return false;
}

} // namespace

std::pair<VoxelGrid, ComponentReport> filter_components(const VoxelGrid& grid) {
    std::vector<std::int32_t> labels(grid.cell_count(), 0);
    std::int32_t next_label = 0;
    std::int32_t best_label = 0;
    std::size_t best_size = 0, total_solid = 0;
    for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
        if (grid.occupancy[idx] == 0 || labels[idx] != 0) continue;
        ++next_label;
        const std::size_t size = flood_fill(grid, labels, idx, 1, next_label);
        total_solid += size;
        if (size > best_size) {
            best_size = size;
            best_label = next_label;
        }
    }
    if (total_solid == 0) throw std::runtime_error("structure is empty: no solid voxels");

    VoxelGrid out = grid;
    for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
        if (out.occupancy[idx] != 0 && labels[idx] != best_label) out.occupancy[idx] = 0;
    }
    ComponentReport report;
    report.components_total = static_cast<std::size_t>(next_label);
    report.discarded_voxels = total_solid - best_size;
    report.has_enclosed_cavities = has_enclosed_cavities(out);
    return {std::move(out), report};
}

bool is_valid_design(const TpmsField& field, const LatticeSpec& spec) {
    const VoxelGrid grid = voxelize(field, spec);
    const std::size_t solid = grid.solid_count();
    if (solid == 0) return false;
    auto [filtered, report] = filter_components(grid);
    if (report.has_enclosed_cavities) return false;
    const double retained = static_cast<double>(solid - report.discarded_voxels) / static_cast<double>(solid);
    return retained >= kValidityMassRetention;
}

std::string rle_dump(const VoxelGrid& grid) {
    std::ostringstream out;
    out << "voxelgrid " << grid.dims.x() << ' ' << grid.dims.y() << ' ' << grid.dims.z() << ' ' << grid.cell_size << '\n';
    std::size_t run = 0;
    std::uint8_t value = 0;
    for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
        if (run > 0 && grid.occupancy[idx] == value) {
            ++run;
            continue;
        }
        if (run > 0) out << run << (value ? 's' : 'v') << ' ';
        value = grid.occupancy[idx];
        run = 1;
    }
    if (run > 0) out << run << (value ? 's' : 'v');
    out << '\n';
    return out.str();
}

} // namespace tpms
