#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tpms/ensemble.hpp"
#include "tpms/weights.hpp"

namespace tpms {

/// Dirichlet(1,...,1) candidate designs on the 8-simplex.
struct CandidatePool {
    std::vector<WeightVector> candidates;
    std::uint64_t seed = 0;
};

/// n draws via normalized Exp(1) variates; deterministic per seed.
CandidatePool sample_candidates(std::size_t n, std::uint64_t seed);

struct AcquisitionConfig {
    double kappa = 0.0;
    double radius = 0.2;
    int batch_size = 40;
    /// UCB = mu + kappa * sqrt(variance); false scores with the raw
    /// variance instead.
    bool kappa_scales_std = true;
    std::vector<WeightVector> exclusions; // previously selected designs
};

double ucb_from_prediction(const DissipationPrediction& p, double kappa, bool kappa_scales_std = true);

/// UCB(w) for a trained ensemble over its canonical grid.
double ucb_score(const EnsembleModel& model, const WeightVector& w, double kappa, bool kappa_scales_std = true);

struct SelectionResult {
    std::vector<std::size_t> chosen; // pool indices in priority order
    bool pool_exhausted = false;     // batch came up short
};

/// Greedy max-score selection under the min-distance constraint against
/// both the exclusion set and everything already chosen. Ties break by
/// pool index. An optional predicate vetoes candidates (e.g. printability)
/// and is only consulted for candidates that pass the distance test.
SelectionResult select_batch(const std::vector<WeightVector>& pool, const std::vector<double>& scores,
                             const AcquisitionConfig& config,
                             const std::function<bool(std::size_t)>& admissible = {});

/// Per-batch exploration weight: batches 2-3 at 2, then 1, 0.75, 0.5,
/// and 0 from batch 7 on. Batch 1 is uniform sampling (no acquisition).
struct KappaSchedule {
    double early = 2.0;
    std::vector<double> taper{1.0, 0.75, 0.5};

    double for_batch(int batch) const;
};

} // namespace tpms
