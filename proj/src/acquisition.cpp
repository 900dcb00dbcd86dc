#include "tpms/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tpms/rng.hpp"

namespace tpms {

CandidatePool sample_candidates(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("candidate pool size must be >= 1");
    CandidatePool pool;
    pool.seed = seed;
    pool.candidates.resize(n);
    Rng rng(seed);
    for (auto& w : pool.candidates) {
        double sum = 0.0;
        for (int i = 0; i < kNumPrimitives; ++i) {
            w[i] = rng.exponential();
            sum += w[i];
        }
        w /= sum;
    }
    return pool;
}

double ucb_from_prediction(const DissipationPrediction& p, double kappa, bool kappa_scales_std) {
    return p.mean + kappa * (kappa_scales_std ? std::sqrt(std::max(p.variance, 0.0)) : p.variance);
}

double ucb_score(const EnsembleModel& model, const WeightVector& w, double kappa, bool kappa_scales_std) {
    return ucb_from_prediction(predict_dissipation(model, w, model.canonical_grid()), kappa, kappa_scales_std);
}

SelectionResult select_batch(const std::vector<WeightVector>& pool, const std::vector<double>& scores,
                             const AcquisitionConfig& config,
                             const std::function<bool(std::size_t)>& admissible) {
    if (pool.empty()) throw std::invalid_argument("candidate pool is empty");
    if (pool.size() != scores.size()) throw std::invalid_argument("pool/score size mismatch");
    if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (config.radius < 0.0) throw std::invalid_argument("radius must be >= 0");

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    const double r2 = config.radius * config.radius;
    auto far_enough = [&](const WeightVector& w, const std::vector<WeightVector>& set) {
        for (const auto& other : set) {
            if ((w - other).squaredNorm() < r2) return false;
        }
        return true;
    };

    SelectionResult result;
    std::vector<WeightVector> chosen_points;
    for (std::size_t idx : order) {
        if (static_cast<int>(result.chosen.size()) >= config.batch_size) break;
        const WeightVector& w = pool[idx];
        if (!far_enough(w, config.exclusions) || !far_enough(w, chosen_points)) continue;
        if (admissible && !admissible(idx)) continue;
        result.chosen.push_back(idx);
        chosen_points.push_back(w);
    }
    result.pool_exhausted = static_cast<int>(result.chosen.size()) < config.batch_size;
    return result;
}

double KappaSchedule::for_batch(int batch) const {
    if (batch <= 1) return 0.0; // batch 1 is uniform sampling, no acquisition runs
    if (batch <= 3) return early;
    const int idx = batch - 4;
    if (idx < static_cast<int>(taper.size())) return taper[static_cast<std::size_t>(idx)];
    return 0.0;
}

} // namespace tpms
