#include "tpms/field.hpp"

#include <cmath>
#include <stdexcept>

namespace tpms {

Primitive primitive_from_index(int index) {
    if (index < 1 || index > kNumPrimitives) {
        throw std::domain_error("primitive index must be in 1..8, got " + std::to_string(index));
    }
    return static_cast<Primitive>(index);
}

std::string_view primitive_name(Primitive id) {
    switch (id) {
        case Primitive::schwarz_p: return "Schwarz Primitive";
        case Primitive::gyroid: return "Schoen Gyroid";
        case Primitive::diamond: return "Schwarz Diamond";
        case Primitive::iwp: return "Schoen I-WP";
        case Primitive::neovius: return "Neovius";
        case Primitive::fischer_koch_s: return "Fischer-Koch S";
        case Primitive::lidinoid: return "Lidinoid";
        case Primitive::split_p: return "Split-P";
    }
    throw std::domain_error("invalid primitive id");
}

PrimitiveBasis eval_primitive_basis(const Vec3& p) {
    const double sx = std::sin(p.x()), cx = std::cos(p.x());
    const double sy = std::sin(p.y()), cy = std::cos(p.y());
    const double sz = std::sin(p.z()), cz = std::cos(p.z());
    // Double angles from exact identities; keeps the whole basis at six
    // trig calls per point.
    const double s2x = 2.0 * sx * cx, c2x = cx * cx - sx * sx;
    const double s2y = 2.0 * sy * cy, c2y = cy * cy - sy * sy;
    const double s2z = 2.0 * sz * cz, c2z = cz * cz - sz * sz;

    PrimitiveBasis b;
    auto set = [&b](Primitive id, double f, double gx, double gy, double gz) {
        const int i = static_cast<int>(id) - 1;
        b.value[i] = f;
        b.gradient.col(i) = Vec3(gx, gy, gz);
    };

    // Schwarz Primitive
    set(Primitive::schwarz_p, cx + cy + cz, -sx, -sy, -sz);

    // Schoen Gyroid
    set(Primitive::gyroid, sx * cy + sy * cz + sz * cx,
        cx * cy - sz * sx,
        -sx * sy + cy * cz,
        -sy * sz + cz * cx);

    // Schwarz Diamond
    set(Primitive::diamond,
        sx * sy * sz + sx * cy * cz + cx * sy * cz + cx * cy * sz,
        cx * sy * sz + cx * cy * cz - sx * sy * cz - sx * cy * sz,
        sx * cy * sz - sx * sy * cz + cx * cy * cz - cx * sy * sz,
        sx * sy * cz - sx * cy * sz - cx * sy * sz + cx * cy * cz);

    // Schoen I-WP
    set(Primitive::iwp,
        2.0 * (cx * cy + cy * cz + cz * cx) - (c2x + c2y + c2z),
        -2.0 * sx * (cy + cz) + 2.0 * s2x,
        -2.0 * sy * (cx + cz) + 2.0 * s2y,
        -2.0 * sz * (cx + cy) + 2.0 * s2z);

    // Neovius
    set(Primitive::neovius,
        3.0 * (cx + cy + cz) + 4.0 * cx * cy * cz,
        -3.0 * sx - 4.0 * sx * cy * cz,
        -3.0 * sy - 4.0 * cx * sy * cz,
        -3.0 * sz - 4.0 * cx * cy * sz);

    // Fischer-Koch S
    set(Primitive::fischer_koch_s,
        c2x * sy * cz + cx * c2y * sz + sx * cy * c2z,
        -2.0 * s2x * sy * cz - sx * c2y * sz + cx * cy * c2z,
        c2x * cy * cz - 2.0 * cx * s2y * sz - sx * sy * c2z,
        -c2x * sy * sz + cx * c2y * cz - 2.0 * sx * cy * s2z);

    // Lidinoid
    set(Primitive::lidinoid,
        0.5 * (s2x * cy * sz + sx * s2y * cz + cx * sy * s2z)
            - 0.5 * (c2x * c2y + c2y * c2z + c2z * c2x) + 0.15,
        0.5 * (2.0 * c2x * cy * sz + cx * s2y * cz - sx * sy * s2z) + s2x * (c2y + c2z),
        0.5 * (-s2x * sy * sz + 2.0 * sx * c2y * cz + cx * cy * s2z) + s2y * (c2x + c2z),
        0.5 * (s2x * cy * cz - sx * s2y * sz + 2.0 * cx * sy * c2z) + s2z * (c2x + c2y));

    // Split-P
    set(Primitive::split_p,
        1.1 * (s2x * sz * cy + s2y * sx * cz + s2z * sy * cx)
            - 0.2 * (c2x * c2y + c2y * c2z + c2z * c2x)
            - 0.4 * (c2x + c2y + c2z),
        1.1 * (2.0 * c2x * sz * cy + s2y * cx * cz - s2z * sy * sx) + 0.4 * s2x * (c2y + c2z) + 0.8 * s2x,
        1.1 * (-s2x * sz * sy + 2.0 * c2y * sx * cz + s2z * cy * cx) + 0.4 * s2y * (c2x + c2z) + 0.8 * s2y,
        1.1 * (s2x * cz * cy - s2y * sx * sz + 2.0 * c2z * sy * cx) + 0.4 * s2z * (c2x + c2y) + 0.8 * s2z);

    return b;
}

double eval_primitive(Primitive id, const Vec3& p) {
    return eval_primitive_basis(p).value[static_cast<int>(id) - 1];
}

Vec3 eval_primitive_gradient(Primitive id, const Vec3& p) {
    return eval_primitive_basis(p).gradient.col(static_cast<int>(id) - 1);
}

TpmsField make_field(const WeightVector& w, double thickness) {
    check_weights(w);
    if (!(thickness > 0.0)) throw std::invalid_argument("thickness must be positive");
    return TpmsField{w, thickness};
}

TpmsField primitive_field(Primitive id, double thickness) {
    WeightVector w = WeightVector::Zero();
    w[static_cast<int>(id) - 1] = 1.0;
    return make_field(w, thickness);
}

double eval_field(const TpmsField& field, const Vec3& p) {
    return eval_primitive_basis(p).value.dot(field.weights);
}

Vec3 eval_gradient(const TpmsField& field, const Vec3& p) {
    return eval_primitive_basis(p).gradient * field.weights;
}

FieldSample eval_field_and_gradient(const TpmsField& field, const Vec3& p) {
    const PrimitiveBasis b = eval_primitive_basis(p);
    return {b.value.dot(field.weights), b.gradient * field.weights};
}

bool is_solid(const TpmsField& field, const Vec3& p) {
    return solid_margin(field, p) >= 0.0;
}

bool is_solid_constant_offset(const TpmsField& field, const Vec3& p) {
    return std::abs(eval_field(field, p)) <= 0.5 * field.thickness;
}

double solid_margin(const TpmsField& field, const Vec3& p) {
    const FieldSample s = eval_field_and_gradient(field, p);
    return 0.5 * field.thickness * s.gradient.norm() - std::abs(s.value);
}

} // namespace tpms
