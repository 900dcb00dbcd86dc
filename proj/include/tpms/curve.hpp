#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace tpms {

using Eigen::VectorXd;

/// One compression experiment: ordered (strain, engineering stress MPa)
/// samples. apex_index marks the last loading sample; strain is
/// nondecreasing up to it and nonincreasing after.
struct StressStrainCurve {
    VectorXd strain;
    VectorXd stress_mpa;
    Eigen::Index apex_index = 0;

    double max_strain() const { return strain[apex_index]; }
};

/// Throws std::invalid_argument when the curve invariants are violated.
void check_curve(const StressStrainCurve& curve);

/// Builds a curve from raw samples, splitting loading/unloading at the
/// global strain maximum.
StressStrainCurve make_curve(VectorXd strain, VectorXd stress_mpa);

inline constexpr int kCanonicalPoints = 120;

/// The fixed 120-point representation: both branches resampled onto an
/// even strain grid over [0, max_strain].
struct CanonicalCurve {
    VectorXd strain;    // 120 evenly spaced values, strain[0] == 0
    VectorXd loading;   // stress MPa on the grid
    VectorXd unloading; // stress MPa on the grid

    double max_strain() const { return strain[strain.size() - 1]; }
};

/// Least-squares convolution coefficients for the filter's interior:
/// weight j (j in -half..half) of the window-center value of the
/// polynomial fit. window odd, order < window.
VectorXd savitzky_golay_coefficients(int window, int order);

/// Smooths the signal with a Savitzky-Golay filter. Edges use odd
/// (antisymmetric) reflection about the end values, which keeps degree-1
/// signals exact all the way to the boundary.
VectorXd savitzky_golay(const VectorXd& signal, int window, int order);

/// Denoises both branches of a curve independently so the apex kink is
/// not smeared across phases.
StressStrainCurve denoise_curve(const StressStrainCurve& curve, int window = 11, int order = 3);

/// Interpolates every replicate onto the sample grid of the replicate
/// with the smallest max strain and averages pointwise.
StressStrainCurve average_replicates(const std::vector<StressStrainCurve>& replicates);

/// Linear resampling of both branches onto the canonical 120-point grid.
/// Strains outside a branch's sampled range take the nearest endpoint value.
CanonicalCurve canonicalize(const StressStrainCurve& curve);

/// Trapezoidal area between loading and unloading stress over the strain
/// grid, converted from MPa*strain to kJ/m^3 (1 MPa = 1000 kJ/m^3).
double hysteresis_area_kj_per_m3(const VectorXd& strain, const VectorXd& loading, const VectorXd& unloading);

double energy_dissipation(const CanonicalCurve& curve);

/// Raw curve CSV: header "strain,stress_mpa,phase", phase in {load,unload}.
void write_curve_csv(const StressStrainCurve& curve, const std::filesystem::path& path);
StressStrainCurve read_curve_csv(const std::filesystem::path& path);

} // namespace tpms
