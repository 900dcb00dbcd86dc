#pragma once

#include <filesystem>
#include <vector>

#include "tpms/curve.hpp"
#include "tpms/mlp.hpp"
#include "tpms/weights.hpp"

namespace tpms {

/// One measured design: its simplex coordinates and canonical curve.
struct TrainingRecord {
    WeightVector weights;
    CanonicalCurve curve;
};

struct EnsembleTrainConfig {
    int members = 30;
    MlpSpec spec;
    TrainOptions train;
    /// Train on every k-th canonical grid point (1 = all 120).
    int strain_stride = 1;
    /// 0 = hardware concurrency.
    int threads = 0;
};

enum class Phase { load = 0, unload = 1 };

/// Independently trained stress networks plus the shared target
/// standardization. Immutable once trained.
struct EnsembleModel {
    MlpSpec spec;
    double stress_mean = 0.0;
    double stress_std = 1.0;
    double reference_max_strain = 0.6;
    std::vector<Mlp> members;
    std::vector<std::uint64_t> member_seeds;
    std::vector<int> epochs_run;

    int size() const { return static_cast<int>(members.size()); }
    /// The inference grid: canonical point count over [0, reference_max_strain].
    VectorXd canonical_grid() const;
};

/// Trains `config.members` networks concurrently, each from its own
/// seed-derived stream (seed, member index). Requires >= 1 record and
/// >= 2 members.
EnsembleModel train_ensemble(const std::vector<TrainingRecord>& records, std::uint64_t seed,
                             const EnsembleTrainConfig& config);

/// Denormalized stress of one member over a strain grid for one phase.
VectorXd predict_member_stress(const EnsembleModel& model, int member, const WeightVector& w,
                               const VectorXd& strains, Phase phase);

struct StressPrediction {
    VectorXd mean;
    VectorXd variance; // 1/(N-1) across members, elementwise
};

StressPrediction predict_stress(const EnsembleModel& model, const WeightVector& w, const VectorXd& strains,
                                Phase phase = Phase::load);

struct DissipationPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Per-member trapezoidal dissipation of the predicted loading/unloading
/// pair, then mean/variance across members (not the dissipation of the
/// mean curve).
DissipationPrediction predict_dissipation(const EnsembleModel& model, const WeightVector& w,
                                          const VectorXd& strain_grid);

/// Batched candidate scorer. Folds batch-norm into the affine layers and
/// precomputes all strain-head work once, so a candidate costs only the
/// param head plus the trunk reevaluation per grid row. Agrees with
/// predict_dissipation to floating-point reassociation error.
class DissipationScorer {
public:
    DissipationScorer(const EnsembleModel& model, const VectorXd& strain_grid);

    /// Scores candidates [begin, end); writes mean/variance per candidate.
    void score_range(const std::vector<WeightVector>& candidates, std::size_t begin, std::size_t end,
                     double* mean_out, double* variance_out) const;

    /// Scores the whole pool with `threads` workers (0 = hardware).
    void score_all(const std::vector<WeightVector>& candidates, std::vector<double>& mean_out,
                   std::vector<double>& variance_out, int threads = 0) const;

    DissipationPrediction score_one(const WeightVector& w) const;

private:
    struct Affine {
        MatrixXd weight;
        VectorXd bias;
        bool relu = false;
    };
    struct MemberPlan {
        std::vector<Affine> param_head;
        MatrixXd trunk1_param;        // trunk block 1 columns acting on param features
        MatrixXd strain_offsets;      // per grid row: trunk1 strain part + bias
        bool trunk1_relu = false;
        std::vector<Affine> rest;     // remaining trunk blocks + output
    };
    std::vector<MemberPlan> plans_;
    VectorXd row_weights_; // signed trapezoid weights, kJ/m^3 per unit stress z-score
    int n_members_ = 0;
};

/// Versioned little-endian binary checkpoint (spec, normalization,
/// per-member parameters and running stats).
void save_ensemble(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_ensemble(const std::filesystem::path& path);

bool ensembles_equal(const EnsembleModel& a, const EnsembleModel& b);

} // namespace tpms
