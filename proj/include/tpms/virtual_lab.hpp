#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "tpms/curve.hpp"
#include "tpms/weights.hpp"

namespace tpms {

/// Synthetic stand-in for fabrication and compression testing. The hidden
/// ground truth is a smooth random function of the weights (fixed Fourier
/// features drawn from the lab seed): a monotone cubic loading curve
/// sigma_L = a(w) e + b(w) e^3 with a, b > 0, unloading gamma(w) * sigma_L
/// with gamma in (0, 1), plus multiplicative Gaussian measurement noise.
class VirtualLab {
public:
    explicit VirtualLab(std::uint64_t seed, double noise_level = 0.02);

    /// Deterministic per (lab seed, weights, replicate). Replicates differ
    /// in noise draws and slightly in max strain.
    StressStrainCurve measure(const WeightVector& w, int replicate) const;

    /// Noise-free dissipation at the nominal max strain, for diagnostics.
    double true_dissipation(const WeightVector& w) const;

    double loading_coefficient(const WeightVector& w) const;  // a(w)
    double cubic_coefficient(const WeightVector& w) const;    // b(w)
    double unloading_ratio(const WeightVector& w) const;      // gamma(w)

    /// Stiffness gain that saturates once any favored primitive
    /// dominates the blend.
    double stiffness_multiplier(const WeightVector& w) const;

    /// Largest weight among the favored primitives.
    double favored_share(const WeightVector& w) const;

    /// 0 off the stiff region, 1 on it.
    double plateau_ramp(const WeightVector& w) const;

    static constexpr int kFavoredPrimitives = 3;

private:
    double raw_feature(int which, const WeightVector& w) const;
    double feature(int which, const WeightVector& w) const;

    static constexpr int kComponents = 16;
    Eigen::Matrix<double, kNumPrimitives, kComponents> omega_[3];
    Eigen::Matrix<double, kComponents, 1> coef_[3];
    Eigen::Matrix<double, kComponents, 1> shift_[3];
    int favored_[kFavoredPrimitives] = {0, 1, 2};
    double offset_[3] = {0.0, 0.0, 0.0};
    double noise_;
    std::uint64_t seed_;
};

} // namespace tpms
