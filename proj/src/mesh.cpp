#include "tpms/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace tpms {

namespace {

// Axis insertion orders of the Kuhn 6-tetrahedra cube split. Every cube
// uses the same split, which makes the face diagonals of neighboring
// cubes coincide.
constexpr int kTetPerms[6][3] = {
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
};

class Contourer {
public:
    Contourer(Eigen::Vector3i sample_dims, double cell_size_implicit, double um_per_implicit)
        : dims_(sample_dims), cell_(cell_size_implicit), scale_(um_per_implicit) {
        samples_.resize(static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z());
    }

    std::vector<double>& samples() { return samples_; }

    std::size_t sample_index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_.x()) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_.y()) * k);
    }

    SurfaceMesh run() {
        bool any_inside = false;
        for (double v : samples_) {
            if (v > 0.0) {
                any_inside = true;
                break;
            }
        }
        if (!any_inside) throw std::runtime_error("structure is empty: nothing to mesh");

        const int nx = dims_.x(), ny = dims_.y(), nz = dims_.z();
        for (int k = 0; k + 1 < nz; ++k) {
            for (int j = 0; j + 1 < ny; ++j) {
                for (int i = 0; i + 1 < nx; ++i) {
                    process_cube(i, j, k);
                }
            }
        }
        return std::move(mesh_);
    }

private:
    Vec3 sample_position_um(std::size_t id) const {
        const int nx = dims_.x(), ny = dims_.y();
        const int i = static_cast<int>(id % nx);
        const int j = static_cast<int>((id / nx) % ny);
        const int k = static_cast<int>(id / (static_cast<std::size_t>(nx) * ny));
        // Padded index 0 is the outside layer; in-domain voxel v sits at
        // padded index v+1 with center (v + 0.5) * cell.
        return Vec3((i - 0.5) * cell_, (j - 0.5) * cell_, (k - 0.5) * cell_) * scale_;
    }

    int vertex_on_edge(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        const std::uint64_t key = static_cast<std::uint64_t>(a) * samples_.size() + b;
        auto it = edge_vertex_.find(key);
        if (it != edge_vertex_.end()) return it->second;
        const double fa = samples_[a], fb = samples_[b];
        const double t = fa / (fa - fb);
        const Vec3 pa = sample_position_um(a), pb = sample_position_um(b);
        const int idx = static_cast<int>(mesh_.vertices.size());
        mesh_.vertices.push_back(pa + t * (pb - pa));
        edge_vertex_.emplace(key, idx);
        return idx;
    }

    void emit(int a, int b, int c, const Vec3& interp_gradient) {
        // Outward orientation: the normal points down the field gradient
        // (from solid toward void). Within one tetrahedron the linear
        // interpolant's crossing points are coplanar with normal along
        // the gradient, so the sign test is exact.
        const Vec3 n = (mesh_.vertices[b] - mesh_.vertices[a]).cross(mesh_.vertices[c] - mesh_.vertices[a]);
        if (n.dot(interp_gradient) > 0.0) std::swap(b, c);
        mesh_.triangles.push_back({a, b, c});
    }

    void process_cube(int i, int j, int k) {
        std::size_t corner[8];
        int inside_count = 0;
        for (int d = 0; d < 8; ++d) {
            corner[d] = sample_index(i + (d & 1), j + ((d >> 1) & 1), k + ((d >> 2) & 1));
            if (samples_[corner[d]] > 0.0) ++inside_count;
        }
        if (inside_count == 0 || inside_count == 8) return;

        for (const auto& perm : kTetPerms) {
            std::size_t tet[4];
            tet[0] = corner[0];
            int bits = 0;
            for (int step = 0; step < 3; ++step) {
                bits |= 1 << perm[step];
                tet[step + 1] = corner[bits];
            }
            process_tet(tet, perm);
        }
    }

    void process_tet(const std::size_t tet[4], const int perm[3]) {
        double f[4];
        int mask = 0;
        for (int v = 0; v < 4; ++v) {
            f[v] = samples_[tet[v]];
            if (f[v] > 0.0) mask |= 1 << v;
        }
        if (mask == 0 || mask == 0xF) return;

        // Gradient of the linear interpolant: the Kuhn legs are axis
        // steps, so each path segment gives one directional derivative.
        Vec3 g = Vec3::Zero();
        for (int step = 0; step < 3; ++step) g[perm[step]] = (f[step + 1] - f[step]) / cell_;

        int in[4], out[4];
        int nin = 0, nout = 0;
        for (int v = 0; v < 4; ++v) {
            if (mask & (1 << v)) in[nin++] = v; else out[nout++] = v;
        }

        if (nin == 1 || nin == 3) {
            const int lone = (nin == 1) ? in[0] : out[0];
            int others[3], no = 0;
            for (int v = 0; v < 4; ++v) {
                if (v != lone) others[no++] = v;
            }
            const int a = vertex_on_edge(tet[lone], tet[others[0]]);
            const int b = vertex_on_edge(tet[lone], tet[others[1]]);
            const int c = vertex_on_edge(tet[lone], tet[others[2]]);
            emit(a, b, c, g);
        } else {
            const int a0 = in[0], a1 = in[1], b0 = out[0], b1 = out[1];
            const int p = vertex_on_edge(tet[a0], tet[b0]);
            const int q = vertex_on_edge(tet[a0], tet[b1]);
            const int r = vertex_on_edge(tet[a1], tet[b1]);
            const int s = vertex_on_edge(tet[a1], tet[b0]);
            emit(p, q, r, g);
            emit(p, r, s, g);
        }
    }

    Eigen::Vector3i dims_;
    double cell_;
    double scale_;
    std::vector<double> samples_;
    std::unordered_map<std::uint64_t, int> edge_vertex_;
    SurfaceMesh mesh_;
};

// Samples sitting numerically on the wall boundary collapse a whole
// tetrahedron's crossings onto one point; push them off by an amount far
// below geometric relevance. Zero counts as solid, matching is_solid.
constexpr double kZeroNudge = 1e-9;

double nudged(double v) {
    if (v >= 0.0) return std::max(v, kZeroNudge);
    return std::min(v, -kZeroNudge);
}

} // namespace

SurfaceMesh extract_surface(const TpmsField& field, const LatticeSpec& spec) {
    check_spec(spec);
    if (!field.valid()) throw std::invalid_argument("invalid TPMS field");
    const Eigen::Vector3i gd = spec.grid_dims();
    const Eigen::Vector3i sd = gd + Eigen::Vector3i(2, 2, 2);
    Contourer contour(sd, spec.voxel_size_implicit(), spec.um_per_implicit());
    auto& samples = contour.samples();

    const double cell = spec.voxel_size_implicit();
    auto fill_slab = [&](int k0, int k1) {
        for (int k = k0; k < k1; ++k) {
            const bool kin = k >= 1 && k <= gd.z();
            for (int j = 0; j < sd.y(); ++j) {
                const bool jin = j >= 1 && j <= gd.y();
                for (int i = 0; i < sd.x(); ++i) {
                    const bool iin = i >= 1 && i <= gd.x();
                    double v;
                    if (iin && jin && kin) {
                        const Vec3 p((i - 0.5) * cell, (j - 0.5) * cell, (k - 0.5) * cell);
                        v = nudged(solid_margin(field, p));
                    } else {
                        // Mirror the clamped in-domain neighbor with negated
                        // sign so boundary caps land on the domain face.
                        const int ci = std::clamp(i, 1, gd.x());
                        const int cj = std::clamp(j, 1, gd.y());
                        const int ck = std::clamp(k, 1, gd.z());
                        const Vec3 p((ci - 0.5) * cell, (cj - 0.5) * cell, (ck - 0.5) * cell);
                        v = -std::abs(solid_margin(field, p)) - 1e-6;
                    }
                    samples[contour.sample_index(i, j, k)] = v;
                }
            }
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(sd.z())));
    if (nthreads <= 1) {
        fill_slab(0, sd.z());
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back(fill_slab, sd.z() * t / nthreads, sd.z() * (t + 1) / nthreads);
        }
        for (auto& th : pool) th.join();
    }
    return contour.run();
}

SurfaceMesh extract_surface(const VoxelGrid& grid, const LatticeSpec& spec) {
    check_spec(spec);
    if (grid.dims.minCoeff() < 2) throw std::invalid_argument("voxel grid dims must be >= 2");
    const Eigen::Vector3i sd = grid.dims + Eigen::Vector3i(2, 2, 2);
    Contourer contour(sd, grid.cell_size, spec.um_per_implicit());
    auto& samples = contour.samples();
    for (int k = 0; k < sd.z(); ++k) {
        const bool kin = k >= 1 && k <= grid.dims.z();
        for (int j = 0; j < sd.y(); ++j) {
            const bool jin = j >= 1 && j <= grid.dims.y();
            for (int i = 0; i < sd.x(); ++i) {
                const bool iin = i >= 1 && i <= grid.dims.x();
                const bool solid = iin && jin && kin && grid.at(i - 1, j - 1, k - 1);
                samples[contour.sample_index(i, j, k)] = solid ? 1.0 : -1.0;
            }
        }
    }
    return contour.run();
}

bool mesh_is_closed_manifold(const SurfaceMesh& mesh) {
    if (mesh.triangles.empty()) return false;
    std::unordered_map<std::uint64_t, int> edge_count;
    edge_count.reserve(mesh.triangles.size() * 3);
    const std::uint64_t nverts = mesh.vertices.size();
    std::vector<bool> referenced(mesh.vertices.size(), false);
    for (const auto& tri : mesh.triangles) {
        const auto [a, b, c] = tri;
        if (a == b || b == c || a == c) return false;
        const Vec3 n = (mesh.vertices[b] - mesh.vertices[a]).cross(mesh.vertices[c] - mesh.vertices[a]);
        if (!(n.norm() > 0.0)) return false;
        for (int e = 0; e < 3; ++e) {
            std::uint64_t lo = tri[e], hi = tri[(e + 1) % 3];
            if (lo > hi) std::swap(lo, hi);
            ++edge_count[lo * nverts + hi];
        }
        referenced[a] = referenced[b] = referenced[c] = true;
    }
    for (const auto& [key, count] : edge_count) {
        if (count != 2) return false;
    }
    for (bool r : referenced) {
        if (!r) return false;
    }
    return true;
}

double mesh_signed_volume(const SurfaceMesh& mesh) {
    if (mesh.vertices.empty()) return 0.0;
    Vec3 centroid = Vec3::Zero();
    for (const auto& v : mesh.vertices) centroid += v;
    centroid /= static_cast<double>(mesh.vertices.size());
    double vol = 0.0;
    for (const auto& tri : mesh.triangles) {
        const Vec3 a = mesh.vertices[tri[0]] - centroid;
        const Vec3 b = mesh.vertices[tri[1]] - centroid;
        const Vec3 c = mesh.vertices[tri[2]] - centroid;
        // Outward normals make each tet contribution positive.
        vol += a.dot(b.cross(c)) / 6.0;
    }
    return vol;
}

Box3 mesh_bounding_box(const SurfaceMesh& mesh) {
    if (mesh.vertices.empty()) throw std::runtime_error("bounding box of empty mesh");
    Box3 box{mesh.vertices.front(), mesh.vertices.front()};
    for (const auto& v : mesh.vertices) {
        box.lo = box.lo.cwiseMin(v);
        box.hi = box.hi.cwiseMax(v);
    }
    return box;
}

} // namespace tpms
