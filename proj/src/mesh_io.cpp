#include "tpms/mesh_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace tpms {

namespace {

void put_u16_le(std::ostream& out, std::uint16_t v) {
    const char bytes[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    out.write(bytes, 2);
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes, 4);
}

void put_f32_le(std::ostream& out, float f) {
    put_u32_le(out, std::bit_cast<std::uint32_t>(f));
}

std::uint32_t get_u32_le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

float get_f32_le(std::istream& in) {
    return std::bit_cast<float>(get_u32_le(in));
}

} // namespace

void write_stl(const SurfaceMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    char header[80] = {};
    std::snprintf(header, sizeof(header), "tpms lattice surface, %zu triangles", mesh.triangles.size());
    out.write(header, 80);
    put_u32_le(out, static_cast<std::uint32_t>(mesh.triangles.size()));
    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        Vec3 n = (b - a).cross(c - a);
        const double len = n.norm();
        if (len > 0.0) n /= len;
        for (int i = 0; i < 3; ++i) put_f32_le(out, static_cast<float>(n[i]));
        for (const Vec3* v : {&a, &b, &c}) {
            for (int i = 0; i < 3; ++i) put_f32_le(out, static_cast<float>((*v)[i]));
        }
        put_u16_le(out, 0);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

SurfaceMesh read_stl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open STL: " + path.string());
    char header[80];
    in.read(header, 80);
    const std::uint32_t count = get_u32_le(in);
    if (!in) throw std::runtime_error("truncated STL header: " + path.string());

    SurfaceMesh mesh;
    std::map<std::array<float, 3>, int> welded;
    for (std::uint32_t t = 0; t < count; ++t) {
        for (int i = 0; i < 3; ++i) get_f32_le(in); // normal, recomputable
        std::array<int, 3> tri{};
        for (int v = 0; v < 3; ++v) {
            std::array<float, 3> pos{};
            for (int i = 0; i < 3; ++i) pos[i] = get_f32_le(in);
            auto [it, inserted] = welded.try_emplace(pos, static_cast<int>(mesh.vertices.size()));
            if (inserted) mesh.vertices.emplace_back(pos[0], pos[1], pos[2]);
            tri[v] = it->second;
        }
        unsigned char attr[2];
        in.read(reinterpret_cast<char*>(attr), 2);
        if (!in) throw std::runtime_error("truncated STL body: " + path.string());
        mesh.triangles.push_back(tri);
    }
    return mesh;
}

void write_obj(const SurfaceMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# tpms lattice surface\n";
    char line[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        out << line;
    }
    for (const auto& tri : mesh.triangles) {
        out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace tpms
