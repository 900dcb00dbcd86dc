#pragma once

#include <Eigen/Dense>
#include <string>

namespace tpms {

inline constexpr int kNumPrimitives = 8;

/// Barycentric interpolation weights over the eight TPMS primitives.
/// Invariants: w_i >= 0 and sum(w) == 1 within 1e-9.
using WeightVector = Eigen::Matrix<double, kNumPrimitives, 1>;

inline constexpr double kWeightSumTol = 1e-9;

bool weights_valid(const WeightVector& w);

/// Throws std::invalid_argument when the simplex invariants are violated.
void check_weights(const WeightVector& w);

/// Canonical textual form: 8 comma-separated decimals, primitive order fixed.
std::string format_weights(const WeightVector& w);

/// Parses the textual form; throws std::invalid_argument on malformed input.
WeightVector parse_weights(const std::string& text);

/// Index (0-based) of the largest weight; the structure's dominant primitive.
int dominant_primitive(const WeightVector& w);

} // namespace tpms
