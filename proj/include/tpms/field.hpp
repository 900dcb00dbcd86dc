#pragma once

#include <Eigen/Dense>
#include <string>

#include "tpms/weights.hpp"

namespace tpms {

using Vec3 = Eigen::Vector3d;

/// The eight TPMS primitives, in the canonical index order used by every
/// file format and weight vector in this project. All implicit functions
/// are 2*pi-periodic in each coordinate.
enum class Primitive : int {
    schwarz_p = 1,
    gyroid = 2,
    diamond = 3,
    iwp = 4,
    neovius = 5,
    fischer_koch_s = 6,
    lidinoid = 7,
    split_p = 8,
};

/// Maps a 1-based index to a primitive; throws std::domain_error outside 1..8.
Primitive primitive_from_index(int index);

std::string_view primitive_name(Primitive id);

/// Values and analytic gradients of all eight primitives at one point,
/// computed from a single set of sin/cos evaluations.
struct PrimitiveBasis {
    Eigen::Matrix<double, kNumPrimitives, 1> value;
    Eigen::Matrix<double, 3, kNumPrimitives> gradient; // column i = grad f_i
};

PrimitiveBasis eval_primitive_basis(const Vec3& p);

double eval_primitive(Primitive id, const Vec3& p);
Vec3 eval_primitive_gradient(Primitive id, const Vec3& p);

/// A barycentric blend of the eight primitives thickened into a sheet
/// solid. Thickness t is in implicit-domain units (one unit cell spans
/// 2*pi); physical scale is applied when meshing.
struct TpmsField {
    WeightVector weights = WeightVector::Zero();
    double thickness = 0.5;

    bool valid() const { return weights_valid(weights) && thickness > 0.0; }
};

TpmsField make_field(const WeightVector& w, double thickness = 0.5);

/// Pure-primitive field (unit weight on one primitive).
TpmsField primitive_field(Primitive id, double thickness = 0.5);

/// F(p) = sum_i w_i f_i(p).
double eval_field(const TpmsField& field, const Vec3& p);

/// Analytic grad F = sum_i w_i grad f_i.
Vec3 eval_gradient(const TpmsField& field, const Vec3& p);

struct FieldSample {
    double value;
    Vec3 gradient;
};

FieldSample eval_field_and_gradient(const TpmsField& field, const Vec3& p);

/// Wall membership with gradient-normalized thickness: the point is solid
/// when its first-order distance to the F=0 midsurface is at most t/2,
/// i.e. |F(p)| <= (t/2) * ||grad F(p)||. Division-free; critical points
/// with F != 0 are void.
bool is_solid(const TpmsField& field, const Vec3& p);

/// Non-normalized |F| <= t/2 variant. Produces uneven wall thickness;
/// kept for comparison studies.
bool is_solid_constant_offset(const TpmsField& field, const Vec3& p);

/// Signed solidity margin (t/2)*||grad F|| - |F|; is_solid == (margin >= 0).
/// Continuous in p, so it can be contoured directly.
double solid_margin(const TpmsField& field, const Vec3& p);

} // namespace tpms
