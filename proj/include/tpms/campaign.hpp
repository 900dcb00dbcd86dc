#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tpms/acquisition.hpp"
#include "tpms/curve.hpp"
#include "tpms/ensemble.hpp"
#include "tpms/lattice.hpp"
#include "tpms/virtual_lab.hpp"
#include "tpms/weights.hpp"

namespace tpms {

struct CampaignConfig {
    int initial_designs = 23;
    int proposal_size = 40;
    int fabricate_per_batch = 25;
    int total_batches = 10;
    std::size_t pool_size = 1'000'000;
    double radius = 0.2;
    bool kappa_scales_std = true;
    KappaSchedule schedule;
    int sg_window = 11;
    int sg_order = 3;
    LatticeSpec lattice;              // meshing / export
    LatticeSpec validity;             // printability checks
    EnsembleTrainConfig ensemble;
    int scoring_stride = 1;           // acquisition scoring grid subsampling
    double virtual_noise = 0.02;
    bool fast = false;
};

/// Paper-scale defaults: pool 1e6, 30-member ensemble, full D-series MLP.
CampaignConfig default_campaign_config();

/// CI profile: pool 1e5, 10 lean members, capped epochs, coarse validity
/// grid and subsampled training/scoring strains.
CampaignConfig fast_campaign_config();

struct Measurement {
    CanonicalCurve curve;
    double dissipation = 0.0;
    int replicates = 0;
    bool single_replicate = false;
};

/// One design in the campaign. batch 0 marks an external reference
/// design (e.g. a primitives baseline) that was never proposed.
struct DesignRecord {
    std::string id;
    WeightVector weights = WeightVector::Zero();
    int batch = 0;
    int rank = 0;
    double pred_mean = 0.0;
    double pred_variance = 0.0;
    double ucb = 0.0;
    bool measured = false;
    Measurement measurement;
};

struct BatchRecord {
    int index = 0;
    double kappa = 0.0;
    std::vector<std::string> design_ids;
};

inline constexpr int kStateSchemaVersion = 1;

struct CampaignState {
    int schema_version = kStateSchemaVersion;
    std::uint64_t seed = 0;
    int revision = 0;
    CampaignConfig config;
    std::string checkpoint_path;
    std::vector<BatchRecord> batches;
    std::vector<DesignRecord> designs;

    DesignRecord* find_design(const std::string& id);
    const DesignRecord* find_design(const std::string& id) const;
    std::vector<TrainingRecord> measured_records() const;
    int next_batch_index() const { return batches.empty() ? 1 : batches.back().index + 1; }
};

/// Batch 1: Dirichlet-uniform designs, printability-checked, primitives
/// excluded, no measurements yet.
CampaignState init_campaign(const CampaignConfig& config, std::uint64_t seed);

/// Registers a design that was measured outside the campaign (batch 0).
void register_external_design(CampaignState& state, const std::string& id, const WeightVector& weights);

/// Averages replicates, denoises, canonicalizes and stores the result.
/// Returns false when the design already holds an identical measurement.
bool ingest_curves(CampaignState& state, const std::string& design_id, const std::vector<StressStrainCurve>& replicates);

/// Measurement files named <design-id>_rep<k>.csv. Unknown ids and
/// malformed files throw; a single replicate is accepted with a flag.
void ingest_results(CampaignState& state, const std::vector<std::filesystem::path>& files);

struct ProposalOutcome {
    int batch_index = 0;
    double kappa = 0.0;
    bool pool_exhausted = false;
    std::filesystem::path proposal_csv;
    std::filesystem::path checkpoint;
};

/// Retrains the ensemble on everything measured, scores a fresh Dirichlet
/// pool with UCB, and greedily selects the next batch under the
/// min-distance rule, printability-filtering candidates before ranking.
ProposalOutcome propose_next_batch(CampaignState& state, const std::filesystem::path& output_dir,
                                   std::optional<double> kappa_override = std::nullopt);

struct BatchStats {
    std::string label; // "baseline" or the batch number
    int batch = 0;     // 0 for baseline
    int count = 0;
    double min = 0.0, max = 0.0, mean = 0.0, median = 0.0;
};

struct PcaPoint {
    std::string id;
    int batch = 0;
    double pc1 = 0.0, pc2 = 0.0;
    double dissipation = 0.0;
    int dominant_primitive = 0; // 1-based canonical index
};

struct CampaignReport {
    std::vector<BatchStats> rows;
    std::vector<PcaPoint> pca;
};

CampaignReport summarize(const CampaignState& state);

/// Writes batch_stats.csv, pca.csv and curves/<id>.csv under out_dir.
CampaignReport write_report(const CampaignState& state, const std::filesystem::path& out_dir);

struct MeshExportOutcome {
    std::vector<std::filesystem::path> written;
    std::vector<std::pair<std::string, std::string>> skipped; // (id, reason)
};

MeshExportOutcome export_batch_meshes(const CampaignState& state, int batch_index,
                                      const std::filesystem::path& out_dir);

/// Full closed loop against the virtual lab: init, then measure -> ingest
/// -> propose for config.total_batches batches.
CampaignState run_virtual_campaign(const CampaignConfig& config, std::uint64_t seed,
                                   const std::filesystem::path& work_dir);

void save_state(const CampaignState& state, const std::filesystem::path& path);
CampaignState load_state(const std::filesystem::path& path);
bool states_equal(const CampaignState& a, const CampaignState& b);

} // namespace tpms
