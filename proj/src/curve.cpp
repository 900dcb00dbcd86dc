#include "tpms/curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tpms {

void check_curve(const StressStrainCurve& curve) {
    const Eigen::Index n = curve.strain.size();
    if (n < 3) throw std::invalid_argument("curve needs at least 3 samples");
    if (curve.stress_mpa.size() != n) throw std::invalid_argument("strain/stress length mismatch");
    if (curve.apex_index < 0 || curve.apex_index >= n) throw std::invalid_argument("apex index out of range");
    if (!(curve.strain[0] >= 0.0)) throw std::invalid_argument("strain must start at >= 0");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(curve.stress_mpa[i]) || !std::isfinite(curve.strain[i])) {
            throw std::invalid_argument("curve contains non-finite samples");
        }
    }
    for (Eigen::Index i = 1; i <= curve.apex_index; ++i) {
        if (curve.strain[i] < curve.strain[i - 1]) throw std::invalid_argument("loading strain must be nondecreasing");
    }
    for (Eigen::Index i = curve.apex_index + 1; i < n; ++i) {
        if (curve.strain[i] > curve.strain[i - 1]) throw std::invalid_argument("unloading strain must be nonincreasing");
    }
}

StressStrainCurve make_curve(VectorXd strain, VectorXd stress_mpa) {
    StressStrainCurve curve{std::move(strain), std::move(stress_mpa), 0};
    Eigen::Index apex = 0;
    curve.strain.maxCoeff(&apex);
    curve.apex_index = apex;
    check_curve(curve);
    return curve;
}

VectorXd savitzky_golay_coefficients(int window, int order) {
    if (window < 1 || window % 2 == 0) throw std::invalid_argument("filter window must be a positive odd integer");
    if (order < 0 || order >= window) throw std::invalid_argument("filter order must satisfy 0 <= order < window");
    const int half = window / 2;
    Eigen::MatrixXd vand(window, order + 1);
    for (int i = 0; i < window; ++i) {
        double pw = 1.0;
        for (int j = 0; j <= order; ++j) {
            vand(i, j) = pw;
            pw *= static_cast<double>(i - half);
        }
    }
    // Center value of the fit = first coefficient of the polynomial, so the
    // convolution weights are row 0 of (A^T A)^-1 A^T.
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(order + 1);
    e0[0] = 1.0;
    Eigen::VectorXd beta = (vand.transpose() * vand).ldlt().solve(e0);
    return vand * beta;
}

VectorXd savitzky_golay(const VectorXd& signal, int window, int order) {
    const VectorXd coeff = savitzky_golay_coefficients(window, order);
    const Eigen::Index n = signal.size();
    if (n < window) throw std::invalid_argument("signal shorter than filter window");
    const int half = window / 2;
    // Odd reflection about the end values.
    auto sample = [&](Eigen::Index i) -> double {
        if (i < 0) return 2.0 * signal[0] - signal[-i];
        if (i >= n) return 2.0 * signal[n - 1] - signal[2 * (n - 1) - i];
        return signal[i];
    };
    VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = -half; j <= half; ++j) acc += coeff[j + half] * sample(i + j);
        out[i] = acc;
    }
    return out;
}

StressStrainCurve denoise_curve(const StressStrainCurve& curve, int window, int order) {
    check_curve(curve);
    const Eigen::Index n = curve.strain.size();
    const Eigen::Index nload = curve.apex_index + 1;
    const Eigen::Index nunload = n - curve.apex_index;
    StressStrainCurve out = curve;
    // Branches shorter than the window are left as measured.
    if (nload >= window) {
        out.stress_mpa.head(nload) = savitzky_golay(curve.stress_mpa.head(nload), window, order);
    }
    if (nunload >= window) {
        out.stress_mpa.tail(nunload) = savitzky_golay(curve.stress_mpa.tail(nunload), window, order);
    }
    return out;
}

namespace {

// Linear interpolation over an ascending (x, y) table with constant
// extension beyond the sampled range.
double interp_ascending(const VectorXd& x, const VectorXd& y, double q) {
    const Eigen::Index n = x.size();
    if (q <= x[0]) return y[0];
    if (q >= x[n - 1]) return y[n - 1];
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        if (x[mid] <= q) lo = mid; else hi = mid;
    }
    const double dx = x[hi] - x[lo];
    if (dx <= 0.0) return y[lo];
    const double a = (q - x[lo]) / dx;
    return (1.0 - a) * y[lo] + a * y[hi];
}

struct Branches {
    VectorXd load_strain, load_stress;     // ascending
    VectorXd unload_strain, unload_stress; // ascending
};

Branches split_branches(const StressStrainCurve& curve) {
    const Eigen::Index n = curve.strain.size();
    const Eigen::Index nload = curve.apex_index + 1;
    const Eigen::Index nunload = n - curve.apex_index;
    if (nload < 2 || nunload < 2) throw std::invalid_argument("each branch needs at least 2 samples");
    Branches b;
    b.load_strain = curve.strain.head(nload);
    b.load_stress = curve.stress_mpa.head(nload);
    b.unload_strain = curve.strain.tail(nunload).reverse();
    b.unload_stress = curve.stress_mpa.tail(nunload).reverse();
    return b;
}

} // namespace

StressStrainCurve average_replicates(const std::vector<StressStrainCurve>& replicates) {
    if (replicates.empty()) throw std::invalid_argument("no replicates to average");
    for (const auto& c : replicates) {
        check_curve(c);
        split_branches(c); // throws when a branch is missing
    }
    if (replicates.size() == 1) return replicates.front();

    std::size_t shortest = 0;
    for (std::size_t i = 1; i < replicates.size(); ++i) {
        if (replicates[i].max_strain() < replicates[shortest].max_strain()) shortest = i;
    }
    const StressStrainCurve& base = replicates[shortest];
    StressStrainCurve mean = base;
    mean.stress_mpa.setZero();

    for (const auto& c : replicates) {
        const Branches b = split_branches(c);
        for (Eigen::Index i = 0; i < base.strain.size(); ++i) {
            const bool loading = i <= base.apex_index;
            mean.stress_mpa[i] += loading
                ? interp_ascending(b.load_strain, b.load_stress, base.strain[i])
                : interp_ascending(b.unload_strain, b.unload_stress, base.strain[i]);
        }
    }
    mean.stress_mpa /= static_cast<double>(replicates.size());
    return mean;
}

CanonicalCurve canonicalize(const StressStrainCurve& curve) {
    check_curve(curve);
    const Branches b = split_branches(curve);
    const double eps_max = curve.max_strain();
    CanonicalCurve out;
    out.strain.resize(kCanonicalPoints);
    out.loading.resize(kCanonicalPoints);
    out.unloading.resize(kCanonicalPoints);
    for (int k = 0; k < kCanonicalPoints; ++k) {
        const double e = eps_max * static_cast<double>(k) / static_cast<double>(kCanonicalPoints - 1);
        out.strain[k] = e;
        out.loading[k] = interp_ascending(b.load_strain, b.load_stress, e);
        out.unloading[k] = interp_ascending(b.unload_strain, b.unload_stress, e);
    }
    return out;
}

double hysteresis_area_kj_per_m3(const VectorXd& strain, const VectorXd& loading, const VectorXd& unloading) {
    const Eigen::Index n = strain.size();
    if (n < 2 || loading.size() != n || unloading.size() != n) {
        throw std::invalid_argument("hysteresis area needs matching arrays of length >= 2");
    }
    double area = 0.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        const double gap_lo = loading[i - 1] - unloading[i - 1];
        const double gap_hi = loading[i] - unloading[i];
        area += 0.5 * (gap_lo + gap_hi) * (strain[i] - strain[i - 1]);
    }
    return area * 1000.0; // MPa * strain -> kJ/m^3
}

double energy_dissipation(const CanonicalCurve& curve) {
    return hysteresis_area_kj_per_m3(curve.strain, curve.loading, curve.unloading);
}

void write_curve_csv(const StressStrainCurve& curve, const std::filesystem::path& path) {
    check_curve(curve);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "strain,stress_mpa,phase\n";
    char line[96];
    for (Eigen::Index i = 0; i < curve.strain.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%s\n", curve.strain[i], curve.stress_mpa[i],
                      i <= curve.apex_index ? "load" : "unload");
        out << line;
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

StressStrainCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open curve file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty curve file: " + path.string());
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    };
    if (strip(line) != "strain,stress_mpa,phase") {
        throw std::runtime_error("bad curve CSV header in " + path.string() + ": '" + line + "'");
    }
    std::vector<double> strain, stress;
    Eigen::Index apex = -1;
    bool seen_unload = false;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip(line);
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected strain,stress_mpa,phase");
        }
        double e, s;
        try {
            e = std::stod(a);
            s = std::stod(b);
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": non-numeric sample");
        }
        c = strip(c);
        if (c == "load") {
            if (seen_unload) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": load row after unload");
        } else if (c == "unload") {
            if (!seen_unload) {
                seen_unload = true;
                apex = static_cast<Eigen::Index>(strain.size()) - 1;
            }
        } else {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": phase must be load or unload");
        }
        strain.push_back(e);
        stress.push_back(s);
    }
    if (strain.size() < 3) throw std::runtime_error("curve file has fewer than 3 samples: " + path.string());
    if (seen_unload && apex < 0) throw std::runtime_error("curve file starts with an unload row: " + path.string());
    StressStrainCurve curve;
    curve.strain = Eigen::Map<VectorXd>(strain.data(), static_cast<Eigen::Index>(strain.size()));
    curve.stress_mpa = Eigen::Map<VectorXd>(stress.data(), static_cast<Eigen::Index>(stress.size()));
    curve.apex_index = apex >= 0 ? apex : curve.strain.size() - 1;
    check_curve(curve);
    return curve;
}

} // namespace tpms
