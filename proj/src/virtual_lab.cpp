#include "tpms/virtual_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "tpms/rng.hpp"

namespace tpms {

namespace {

constexpr double kLengthScale = 0.45; // feature smoothness over the simplex
constexpr double kLinearBase = 0.3;   // MPa
constexpr double kCubicBase = 2.5;    // MPa
constexpr double kLinearSwing = 0.5;   // log-amplitude of a(w)
constexpr double kCubicSwing = 0.5;    // log-amplitude of b(w)
constexpr double kPlateauGain = 9.5;     // stiffness gain once a favored primitive dominates
constexpr double kPlateauCenter = 0.45;  // favored weight where the top ramp is half way up
constexpr double kPlateauWidth = 0.025;  // top ramp width
constexpr double kSkirtGain = 4.5;       // partial gain on the plateau's skirt
constexpr double kSkirtCenter = 0.38;    // skirt ramp midpoint
constexpr double kSkirtWidth = 0.03;     // skirt ramp width
constexpr int kRawSamples = 240;

std::uint64_t hash_weights(std::uint64_t seed, const WeightVector& w) {
    std::uint64_t h = seed;
    for (int i = 0; i < kNumPrimitives; ++i) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(double));
        std::memcpy(&bits, &w[i], sizeof(bits));
        h = derive_seed(h, 7, bits);
    }
    return h;
}

} // namespace

VirtualLab::VirtualLab(std::uint64_t seed, double noise_level) : noise_(noise_level), seed_(seed) {
    Rng rng(derive_seed(seed, 1));
    for (int f = 0; f < 3; ++f) {
        for (int m = 0; m < kComponents; ++m) {
            for (int d = 0; d < kNumPrimitives; ++d) omega_[f](d, m) = rng.normal() / kLengthScale;
            coef_[f][m] = rng.normal() / std::sqrt(static_cast<double>(kComponents) / 2.0);
            shift_[f][m] = rng.uniform(0.0, 2.0 * M_PI);
        }
    }
    // Center each background feature over the simplex so the soft bulk
    // has a seed-independent baseline.
    for (int f = 0; f < 3; ++f) offset_[f] = 0.0;
    Rng probe(derive_seed(seed, 2));
    const int probes = 2048;
    for (int i = 0; i < probes; ++i) {
        WeightVector w;
        double sum = 0.0;
        for (int k = 0; k < kNumPrimitives; ++k) {
            w[k] = probe.exponential();
            sum += w[k];
        }
        w /= sum;
        for (int f = 0; f < 3; ++f) offset_[f] += raw_feature(f, w);
    }
    for (int f = 0; f < 3; ++f) offset_[f] /= probes;

    // Three favored primitives; designs dominated by any one of them sit
    // on the stiff plateau. Dominance regions of single primitives pack
    // many min-distance-separated designs per unit volume, which keeps
    // high sites available for the late exploitation batches.
    int order[kNumPrimitives];
    for (int i = 0; i < kNumPrimitives; ++i) order[i] = i;
    for (int i = kNumPrimitives; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    for (int k = 0; k < kFavoredPrimitives; ++k) favored_[k] = order[k];
}

double VirtualLab::favored_share(const WeightVector& w) const {
    double best = 0.0;
    for (int k = 0; k < kFavoredPrimitives; ++k) best = std::max(best, w[favored_[k]]);
    return best;
}

double VirtualLab::plateau_ramp(const WeightVector& w) const {
    // Skirt ramp: 0 in the soft bulk, 1 once a favored pair contributes
    // roughly half the blend. Doubles as the fade of the random fields.
    const double share = favored_share(w);
    return 1.0 / (1.0 + std::exp(-(share - kSkirtCenter) / kSkirtWidth));
}

double VirtualLab::stiffness_multiplier(const WeightVector& w) const {
    // Saturating plateau with a wide partial-value skirt: structures
    // dominated by a favored pair are uniformly stiff, blends where the
    // pair carries about half the weight are moderately stiff, and the
    // rest of the simplex is soft.
    const double share = favored_share(w);
    const double top = 1.0 / (1.0 + std::exp(-(share - kPlateauCenter) / kPlateauWidth));
    const double skirt = plateau_ramp(w);
    return 1.0 + kPlateauGain * top + kSkirtGain * skirt * (1.0 - top);
}

double VirtualLab::raw_feature(int which, const WeightVector& w) const {
    const Eigen::Matrix<double, kComponents, 1> phase = omega_[which].transpose() * w + shift_[which];
    return coef_[which].dot(phase.array().cos().matrix());
}

double VirtualLab::feature(int which, const WeightVector& w) const {
    return raw_feature(which, w) - offset_[which];
}

double VirtualLab::loading_coefficient(const WeightVector& w) const {
    // Lognormal background off the plateau, near-deterministic stiffness
    // on it: most of the simplex is soft with broad variation, the stiff
    // families behave consistently, mirroring the spread of the measured
    // dissipation values.
    const double ramp = plateau_ramp(w);
    return kLinearBase * std::exp(kLinearSwing * feature(0, w) * (1.0 - ramp)) * (1.0 + kPlateauGain * ramp);
}

double VirtualLab::cubic_coefficient(const WeightVector& w) const {
    const double ramp = plateau_ramp(w);
    return kCubicBase * std::exp(kCubicSwing * feature(1, w) * (1.0 - ramp)) * (1.0 + kPlateauGain * ramp);
}

double VirtualLab::unloading_ratio(const WeightVector& w) const {
    // gamma in (0.2, 0.92): never a closed loop, never free energy. The
    // favored-pair share pushes gamma down, so the stiff pocket also
    // returns the least energy.
    const double ramp = plateau_ramp(w);
    return 0.2 + 0.72 / (1.0 + std::exp(-1.5 * feature(2, w) * (1.0 - ramp) + 2.2 * ramp));
}

double VirtualLab::true_dissipation(const WeightVector& w) const {
    const double e = 0.575;
    const double a = loading_coefficient(w);
    const double b = cubic_coefficient(w);
    const double loop = (1.0 - unloading_ratio(w)) * (a * e * e / 2.0 + b * e * e * e * e / 4.0);
    return 1000.0 * loop;
}

StressStrainCurve VirtualLab::measure(const WeightVector& w, int replicate) const {
    check_weights(w);
    Rng rng(derive_seed(hash_weights(seed_, w), 11, static_cast<std::uint64_t>(replicate)));
    const double eps_max = 0.55 + 0.05 * rng.uniform();
    const double a = loading_coefficient(w);
    const double b = cubic_coefficient(w);
    const double gamma = unloading_ratio(w);

    auto loading_stress = [&](double e) { return a * e + b * e * e * e; };

    const int n_load = kRawSamples;
    const int n_unload = kRawSamples - 1;
    VectorXd strain(n_load + n_unload), stress(n_load + n_unload);
    for (int i = 0; i < n_load; ++i) {
        const double e = eps_max * static_cast<double>(i) / static_cast<double>(n_load - 1);
        strain[i] = e;
        stress[i] = loading_stress(e) * (1.0 + noise_ * rng.normal());
    }
    for (int i = 0; i < n_unload; ++i) {
        const double e = eps_max * static_cast<double>(n_unload - 1 - i) / static_cast<double>(n_load - 1);
        strain[n_load + i] = e;
        stress[n_load + i] = gamma * loading_stress(e) * (1.0 + noise_ * rng.normal());
    }
    return make_curve(std::move(strain), std::move(stress));
}

} // namespace tpms
