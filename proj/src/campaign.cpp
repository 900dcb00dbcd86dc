#include "tpms/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "json.hpp"

#include "tpms/mesh.hpp"
#include "tpms/mesh_io.hpp"
#include "tpms/rng.hpp"

namespace tpms {

namespace {

using nlohmann::json;

enum SeedStream : std::uint64_t {
    kInitStream = 1,
    kPoolStream = 2,
    kTrainStream = 3,
    kLabStream = 4,
};

std::string design_id(int batch, int rank) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "b%02d_d%03d", batch, rank);
    return buf;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

CampaignConfig default_campaign_config() {
    CampaignConfig config;
    config.ensemble.members = 30;
    return config;
}

CampaignConfig fast_campaign_config() {
    CampaignConfig config;
    config.fast = true;
    config.pool_size = 100'000;
    config.fabricate_per_batch = 10;
    config.ensemble.members = 10;
    config.ensemble.spec.param_head = {24, 24};
    config.ensemble.spec.strain_head = {12, 12};
    config.ensemble.spec.trunk = {24, 24};
    config.ensemble.train.max_epochs = 180;
    config.ensemble.train.patience = 50;
    config.ensemble.train.batch_size = 256;
    config.ensemble.strain_stride = 8;
    config.scoring_stride = 4;
    config.validity.tiling = Eigen::Vector3i(2, 2, 1);
    config.validity.resolution = 32;
    return config;
}

DesignRecord* CampaignState::find_design(const std::string& id) {
    for (auto& d : designs) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

const DesignRecord* CampaignState::find_design(const std::string& id) const {
    for (const auto& d : designs) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

std::vector<TrainingRecord> CampaignState::measured_records() const {
    std::vector<TrainingRecord> records;
    for (const auto& d : designs) {
        if (d.measured) records.push_back({d.weights, d.measurement.curve});
    }
    return records;
}

CampaignState init_campaign(const CampaignConfig& config, std::uint64_t seed) {
    if (config.initial_designs < 1) throw std::invalid_argument("initial batch size must be >= 1");
    CampaignState state;
    state.seed = seed;
    state.config = config;

    Rng rng(derive_seed(seed, kInitStream));
    BatchRecord batch;
    batch.index = 1;
    batch.kappa = 0.0; // uniform sampling, no acquisition
    const std::size_t attempt_cap = 200 * static_cast<std::size_t>(config.initial_designs);
    std::size_t attempts = 0;
    while (static_cast<int>(batch.design_ids.size()) < config.initial_designs) {
        if (++attempts > attempt_cap) {
            throw std::runtime_error("could not find enough printable designs for the initial batch");
        }
        WeightVector w;
        double sum = 0.0;
        for (int i = 0; i < kNumPrimitives; ++i) {
            w[i] = rng.exponential();
            sum += w[i];
        }
        w /= sum;
        if (!is_valid_design(make_field(w), config.validity)) continue;
        DesignRecord rec;
        rec.id = design_id(1, static_cast<int>(batch.design_ids.size()) + 1);
        rec.weights = w;
        rec.batch = 1;
        rec.rank = static_cast<int>(batch.design_ids.size()) + 1;
        batch.design_ids.push_back(rec.id);
        state.designs.push_back(std::move(rec));
    }
    state.batches.push_back(std::move(batch));
    return state;
}

void register_external_design(CampaignState& state, const std::string& id, const WeightVector& weights) {
    check_weights(weights);
    if (state.find_design(id)) throw std::invalid_argument("design id already registered: " + id);
    DesignRecord rec;
    rec.id = id;
    rec.weights = weights;
    rec.batch = 0;
    state.designs.push_back(std::move(rec));
}

bool ingest_curves(CampaignState& state, const std::string& design_id,
                   const std::vector<StressStrainCurve>& replicates) {
    DesignRecord* design = state.find_design(design_id);
    if (!design) throw std::runtime_error("unknown design id: " + design_id);
    if (replicates.empty()) throw std::invalid_argument("no replicate curves for " + design_id);

    const StressStrainCurve averaged = average_replicates(replicates);
    const StressStrainCurve denoised = denoise_curve(averaged, state.config.sg_window, state.config.sg_order);
    Measurement m;
    m.curve = canonicalize(denoised);
    m.dissipation = energy_dissipation(m.curve);
    m.replicates = static_cast<int>(replicates.size());
    m.single_replicate = replicates.size() == 1;

    if (design->measured && design->measurement.curve.strain == m.curve.strain &&
        design->measurement.curve.loading == m.curve.loading &&
        design->measurement.curve.unloading == m.curve.unloading &&
        design->measurement.dissipation == m.dissipation && design->measurement.replicates == m.replicates) {
        return false;
    }
    design->measured = true;
    design->measurement = std::move(m);
    ++state.revision;
    return true;
}

void ingest_results(CampaignState& state, const std::vector<std::filesystem::path>& files) {
    std::vector<std::pair<std::string, std::filesystem::path>> tagged;
    for (const auto& file : files) {
        const std::string stem = file.stem().string();
        const std::size_t pos = stem.rfind("_rep");
        if (pos == std::string::npos || pos == 0) {
            throw std::runtime_error("measurement file must be named <design-id>_rep<k>.csv: " + file.string());
        }
        tagged.emplace_back(stem.substr(0, pos), file);
    }
    std::stable_sort(tagged.begin(), tagged.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t i = 0;
    while (i < tagged.size()) {
        const std::string& id = tagged[i].first;
        std::vector<StressStrainCurve> replicates;
        while (i < tagged.size() && tagged[i].first == id) {
            replicates.push_back(read_curve_csv(tagged[i].second));
            ++i;
        }
        ingest_curves(state, id, replicates);
    }
}

namespace {

VectorXd strided_grid(const VectorXd& full, int stride) {
    if (stride <= 1) return full;
    std::vector<double> kept;
    for (Eigen::Index k = 0; k < full.size(); k += stride) kept.push_back(full[k]);
    if (kept.back() != full[full.size() - 1]) kept.push_back(full[full.size() - 1]);
    return Eigen::Map<VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

} // namespace

ProposalOutcome propose_next_batch(CampaignState& state, const std::filesystem::path& output_dir,
                                   std::optional<double> kappa_override) {
    const std::vector<TrainingRecord> records = state.measured_records();
    if (records.empty()) throw std::runtime_error("cannot propose: no measurements ingested yet");
    const CampaignConfig& config = state.config;
    const int batch_index = state.next_batch_index();

    const EnsembleModel model =
        train_ensemble(records, derive_seed(state.seed, kTrainStream, static_cast<std::uint64_t>(batch_index)),
                       config.ensemble);

    const double kappa = kappa_override ? *kappa_override : config.schedule.for_batch(batch_index);
    const CandidatePool pool =
        sample_candidates(config.pool_size, derive_seed(state.seed, kPoolStream, static_cast<std::uint64_t>(batch_index)));

    const DissipationScorer scorer(model, strided_grid(model.canonical_grid(), config.scoring_stride));
    std::vector<double> mu, var;
    scorer.score_all(pool.candidates, mu, var, config.ensemble.threads);
    std::vector<double> scores(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        scores[i] = ucb_from_prediction({mu[i], var[i]}, kappa, config.kappa_scales_std);
    }

    AcquisitionConfig acq;
    acq.kappa = kappa;
    acq.radius = config.radius;
    acq.batch_size = config.proposal_size;
    acq.kappa_scales_std = config.kappa_scales_std;
    // Fabricated structures exclude their neighborhoods; proposals that
    // were never measured do not block future batches.
    for (const auto& d : state.designs) {
        if (d.measured) acq.exclusions.push_back(d.weights);
    }

    std::unordered_map<std::size_t, bool> validity_cache;
    auto admissible = [&](std::size_t idx) {
        auto it = validity_cache.find(idx);
        if (it != validity_cache.end()) return it->second;
        const bool ok = is_valid_design(make_field(pool.candidates[idx]), config.validity);
        validity_cache.emplace(idx, ok);
        return ok;
    };

    const SelectionResult selection = select_batch(pool.candidates, scores, acq, admissible);

    std::filesystem::create_directories(output_dir);
    ProposalOutcome outcome;
    outcome.batch_index = batch_index;
    outcome.kappa = kappa;
    outcome.pool_exhausted = selection.pool_exhausted;
    char name[64];
    std::snprintf(name, sizeof(name), "proposal_b%02d.csv", batch_index);
    outcome.proposal_csv = output_dir / name;
    std::snprintf(name, sizeof(name), "ensemble_b%02d.ckpt", batch_index);
    outcome.checkpoint = output_dir / name;

    save_ensemble(model, outcome.checkpoint);
    state.checkpoint_path = outcome.checkpoint.string();

    BatchRecord batch;
    batch.index = batch_index;
    batch.kappa = kappa;

    std::ofstream csv(outcome.proposal_csv);
    if (!csv) throw std::runtime_error("cannot write proposal file: " + outcome.proposal_csv.string());
    csv << "rank,design_id,w1,w2,w3,w4,w5,w6,w7,w8,mu_d_kj_m3,sigma_d_kj_m3_sq,ucb\n";
    int rank = 0;
    for (std::size_t idx : selection.chosen) {
        ++rank;
        DesignRecord rec;
        rec.id = design_id(batch_index, rank);
        rec.weights = pool.candidates[idx];
        rec.batch = batch_index;
        rec.rank = rank;
        rec.pred_mean = mu[idx];
        rec.pred_variance = var[idx];
        rec.ucb = scores[idx];
        csv << rank << ',' << rec.id;
        for (int i = 0; i < kNumPrimitives; ++i) csv << ',' << fmt_double(rec.weights[i]);
        csv << ',' << fmt_double(rec.pred_mean) << ',' << fmt_double(rec.pred_variance) << ','
            << fmt_double(rec.ucb) << '\n';
        batch.design_ids.push_back(rec.id);
        state.designs.push_back(std::move(rec));
    }
    if (!csv) throw std::runtime_error("proposal write failed: " + outcome.proposal_csv.string());
    state.batches.push_back(std::move(batch));
    return outcome;
}

namespace {

BatchStats stats_from(const std::string& label, int batch, std::vector<double> values) {
    BatchStats row;
    row.label = label;
    row.batch = batch;
    row.count = static_cast<int>(values.size());
    std::sort(values.begin(), values.end());
    row.min = values.front();
    row.max = values.back();
    row.mean = 0.0;
    for (double v : values) row.mean += v;
    row.mean /= static_cast<double>(values.size());
    const std::size_t n = values.size();
    row.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return row;
}

} // namespace

CampaignReport summarize(const CampaignState& state) {
    CampaignReport report;
    std::vector<double> baseline;
    for (const auto& d : state.designs) {
        if (d.batch == 0 && d.measured) baseline.push_back(d.measurement.dissipation);
    }
    if (!baseline.empty()) report.rows.push_back(stats_from("baseline", 0, std::move(baseline)));
    for (const auto& batch : state.batches) {
        std::vector<double> values;
        for (const auto& id : batch.design_ids) {
            const DesignRecord* d = state.find_design(id);
            if (d && d->measured) values.push_back(d->measurement.dissipation);
        }
        if (!values.empty()) {
            report.rows.push_back(stats_from(std::to_string(batch.index), batch.index, std::move(values)));
        }
    }
    if (report.rows.empty()) throw std::runtime_error("nothing measured yet; cannot report");

    // PCA of all measured weight vectors (covariance eigendecomposition).
    std::vector<const DesignRecord*> measured;
    for (const auto& d : state.designs) {
        if (d.measured) measured.push_back(&d);
    }
    MatrixXd points(static_cast<Eigen::Index>(measured.size()), kNumPrimitives);
    for (std::size_t i = 0; i < measured.size(); ++i) points.row(static_cast<Eigen::Index>(i)) = measured[i]->weights.transpose();
    const Eigen::RowVectorXd mean = points.colwise().mean();
    const MatrixXd centered = points.rowwise() - mean;
    const double denom = measured.size() > 1 ? static_cast<double>(measured.size() - 1) : 1.0;
    const MatrixXd covariance = centered.transpose() * centered / denom;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(covariance);
    auto component = [&](int which) {
        VectorXd v = eig.eigenvectors().col(kNumPrimitives - 1 - which); // eigenvalues ascend
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        return v;
    };
    const VectorXd pc1 = component(0), pc2 = component(1);
    for (std::size_t i = 0; i < measured.size(); ++i) {
        PcaPoint pt;
        pt.id = measured[i]->id;
        pt.batch = measured[i]->batch;
        pt.pc1 = centered.row(static_cast<Eigen::Index>(i)).dot(pc1);
        pt.pc2 = centered.row(static_cast<Eigen::Index>(i)).dot(pc2);
        pt.dissipation = measured[i]->measurement.dissipation;
        pt.dominant_primitive = dominant_primitive(measured[i]->weights) + 1;
        report.pca.push_back(std::move(pt));
    }
    return report;
}

CampaignReport write_report(const CampaignState& state, const std::filesystem::path& out_dir) {
    const CampaignReport report = summarize(state);
    std::filesystem::create_directories(out_dir / "curves");

    std::ofstream stats(out_dir / "batch_stats.csv");
    stats << "batch,count,min_kj_m3,max_kj_m3,mean_kj_m3,median_kj_m3\n";
    for (const auto& row : report.rows) {
        stats << row.label << ',' << row.count << ',' << fmt_double(row.min) << ',' << fmt_double(row.max) << ','
              << fmt_double(row.mean) << ',' << fmt_double(row.median) << '\n';
    }

    std::ofstream pca(out_dir / "pca.csv");
    pca << "design_id,batch,pc1,pc2,dissipation_kj_m3,dominant_primitive\n";
    for (const auto& pt : report.pca) {
        pca << pt.id << ',' << pt.batch << ',' << fmt_double(pt.pc1) << ',' << fmt_double(pt.pc2) << ','
            << fmt_double(pt.dissipation) << ',' << pt.dominant_primitive << '\n';
    }

    for (const auto& d : state.designs) {
        if (!d.measured) continue;
        std::ofstream curve(out_dir / "curves" / (d.id + ".csv"));
        curve << "strain,loading_mpa,unloading_mpa\n";
        for (int k = 0; k < kCanonicalPoints; ++k) {
            curve << fmt_double(d.measurement.curve.strain[k]) << ',' << fmt_double(d.measurement.curve.loading[k])
                  << ',' << fmt_double(d.measurement.curve.unloading[k]) << '\n';
        }
    }
    return report;
}

MeshExportOutcome export_batch_meshes(const CampaignState& state, int batch_index,
                                      const std::filesystem::path& out_dir) {
    const BatchRecord* batch = nullptr;
    for (const auto& b : state.batches) {
        if (b.index == batch_index) batch = &b;
    }
    if (!batch) throw std::runtime_error("no batch " + std::to_string(batch_index) + " in this campaign");

    std::filesystem::create_directories(out_dir);
    MeshExportOutcome outcome;
    for (const auto& id : batch->design_ids) {
        const DesignRecord* d = state.find_design(id);
        if (!d) continue;
        const TpmsField field = make_field(d->weights);
        if (!is_valid_design(field, state.config.validity)) {
            outcome.skipped.emplace_back(id, "fails printability check (cavities or floating material)");
            continue;
        }
        const SurfaceMesh mesh = extract_surface(field, state.config.lattice);
        const std::filesystem::path path = out_dir / (id + ".stl");
        write_stl(mesh, path);
        outcome.written.push_back(path);
    }
    return outcome;
}

CampaignState run_virtual_campaign(const CampaignConfig& config, std::uint64_t seed,
                                   const std::filesystem::path& work_dir) {
    std::filesystem::create_directories(work_dir);
    CampaignState state = init_campaign(config, seed);
    const VirtualLab lab(derive_seed(seed, kLabStream), config.virtual_noise);

    for (int batch = 1; batch <= config.total_batches; ++batch) {
        const BatchRecord& record = state.batches.back();
        if (record.index != batch) throw std::logic_error("batch bookkeeping out of step");
        const int measure_count = batch == 1 ? static_cast<int>(record.design_ids.size())
                                             : std::min<int>(config.fabricate_per_batch,
                                                             static_cast<int>(record.design_ids.size()));
        for (int i = 0; i < measure_count; ++i) {
            const DesignRecord* d = state.find_design(record.design_ids[static_cast<std::size_t>(i)]);
            ingest_curves(state, d->id, {lab.measure(d->weights, 0), lab.measure(d->weights, 1)});
        }
        if (batch < config.total_batches) propose_next_batch(state, work_dir);
    }
    write_report(state, work_dir / "report");
    return state;
}

// --- persistence ---

namespace {

json spec_to_json(const MlpSpec& spec) {
    return json{{"param_head", spec.param_head}, {"strain_head", spec.strain_head}, {"trunk", spec.trunk},
                {"dropout", spec.dropout},       {"batch_norm", spec.batch_norm},   {"activation", spec.activation}};
}

MlpSpec spec_from_json(const json& j) {
    MlpSpec spec;
    spec.param_head = j.at("param_head").get<std::vector<int>>();
    spec.strain_head = j.at("strain_head").get<std::vector<int>>();
    spec.trunk = j.at("trunk").get<std::vector<int>>();
    spec.dropout = j.at("dropout").get<double>();
    spec.batch_norm = j.at("batch_norm").get<bool>();
    spec.activation = j.at("activation").get<std::string>();
    return spec;
}

json lattice_to_json(const LatticeSpec& spec) {
    return json{{"tiling", {spec.tiling.x(), spec.tiling.y(), spec.tiling.z()}},
                {"cell_length_um", spec.cell_length_um},
                {"resolution", spec.resolution}};
}

LatticeSpec lattice_from_json(const json& j) {
    LatticeSpec spec;
    const auto t = j.at("tiling").get<std::vector<int>>();
    spec.tiling = Eigen::Vector3i(t.at(0), t.at(1), t.at(2));
    spec.cell_length_um = j.at("cell_length_um").get<double>();
    spec.resolution = j.at("resolution").get<int>();
    return spec;
}

json config_to_json(const CampaignConfig& c) {
    return json{{"initial_designs", c.initial_designs},
                {"proposal_size", c.proposal_size},
                {"fabricate_per_batch", c.fabricate_per_batch},
                {"total_batches", c.total_batches},
                {"pool_size", c.pool_size},
                {"radius", c.radius},
                {"kappa_scales_std", c.kappa_scales_std},
                {"kappa_early", c.schedule.early},
                {"kappa_taper", c.schedule.taper},
                {"sg_window", c.sg_window},
                {"sg_order", c.sg_order},
                {"lattice", lattice_to_json(c.lattice)},
                {"validity", lattice_to_json(c.validity)},
                {"members", c.ensemble.members},
                {"mlp", spec_to_json(c.ensemble.spec)},
                {"max_epochs", c.ensemble.train.max_epochs},
                {"patience", c.ensemble.train.patience},
                {"learning_rate", c.ensemble.train.learning_rate},
                {"batch_size", c.ensemble.train.batch_size},
                {"holdout_fraction", c.ensemble.train.holdout_fraction},
                {"strain_stride", c.ensemble.strain_stride},
                {"scoring_stride", c.scoring_stride},
                {"virtual_noise", c.virtual_noise},
                {"fast", c.fast}};
}

CampaignConfig config_from_json(const json& j) {
    CampaignConfig c;
    c.initial_designs = j.at("initial_designs").get<int>();
    c.proposal_size = j.at("proposal_size").get<int>();
    c.fabricate_per_batch = j.at("fabricate_per_batch").get<int>();
    c.total_batches = j.at("total_batches").get<int>();
    c.pool_size = j.at("pool_size").get<std::size_t>();
    c.radius = j.at("radius").get<double>();
    c.kappa_scales_std = j.at("kappa_scales_std").get<bool>();
    c.schedule.early = j.at("kappa_early").get<double>();
    c.schedule.taper = j.at("kappa_taper").get<std::vector<double>>();
    c.sg_window = j.at("sg_window").get<int>();
    c.sg_order = j.at("sg_order").get<int>();
    c.lattice = lattice_from_json(j.at("lattice"));
    c.validity = lattice_from_json(j.at("validity"));
    c.ensemble.members = j.at("members").get<int>();
    c.ensemble.spec = spec_from_json(j.at("mlp"));
    c.ensemble.train.max_epochs = j.at("max_epochs").get<int>();
    c.ensemble.train.patience = j.at("patience").get<int>();
    c.ensemble.train.learning_rate = j.at("learning_rate").get<double>();
    c.ensemble.train.batch_size = j.at("batch_size").get<int>();
    c.ensemble.train.holdout_fraction = j.at("holdout_fraction").get<double>();
    c.ensemble.strain_stride = j.at("strain_stride").get<int>();
    c.scoring_stride = j.at("scoring_stride").get<int>();
    c.virtual_noise = j.at("virtual_noise").get<double>();
    c.fast = j.at("fast").get<bool>();
    return c;
}

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_vec(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json state_to_json(const CampaignState& state) {
    json j;
    j["schema_version"] = state.schema_version;
    j["seed"] = state.seed;
    j["revision"] = state.revision;
    j["config"] = config_to_json(state.config);
    j["checkpoint"] = state.checkpoint_path;
    j["batches"] = json::array();
    for (const auto& b : state.batches) {
        j["batches"].push_back(json{{"index", b.index}, {"kappa", b.kappa}, {"designs", b.design_ids}});
    }
    j["designs"] = json::array();
    for (const auto& d : state.designs) {
        json dj{{"id", d.id},
                {"weights", to_vec(d.weights)},
                {"batch", d.batch},
                {"rank", d.rank},
                {"pred_mean", d.pred_mean},
                {"pred_variance", d.pred_variance},
                {"ucb", d.ucb},
                {"measured", d.measured}};
        if (d.measured) {
            dj["curve"] = json{{"strain", to_vec(d.measurement.curve.strain)},
                               {"loading", to_vec(d.measurement.curve.loading)},
                               {"unloading", to_vec(d.measurement.curve.unloading)}};
            dj["dissipation"] = d.measurement.dissipation;
            dj["replicates"] = d.measurement.replicates;
            dj["single_replicate"] = d.measurement.single_replicate;
        }
        j["designs"].push_back(std::move(dj));
    }
    return j;
}

CampaignState state_from_json(const json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kStateSchemaVersion) {
        throw std::runtime_error("unsupported campaign state schema version " + std::to_string(version) +
                                 " (this build reads version " + std::to_string(kStateSchemaVersion) + ")");
    }
    CampaignState state;
    state.schema_version = version;
    state.seed = j.at("seed").get<std::uint64_t>();
    state.revision = j.at("revision").get<int>();
    state.config = config_from_json(j.at("config"));
    state.checkpoint_path = j.at("checkpoint").get<std::string>();
    for (const auto& bj : j.at("batches")) {
        BatchRecord b;
        b.index = bj.at("index").get<int>();
        b.kappa = bj.at("kappa").get<double>();
        b.design_ids = bj.at("designs").get<std::vector<std::string>>();
        state.batches.push_back(std::move(b));
    }
    for (const auto& dj : j.at("designs")) {
        DesignRecord d;
        d.id = dj.at("id").get<std::string>();
        const auto w = dj.at("weights").get<std::vector<double>>();
        if (w.size() != kNumPrimitives) throw std::runtime_error("design " + d.id + " has malformed weights");
        for (int i = 0; i < kNumPrimitives; ++i) d.weights[i] = w[static_cast<std::size_t>(i)];
        d.batch = dj.at("batch").get<int>();
        d.rank = dj.at("rank").get<int>();
        d.pred_mean = dj.at("pred_mean").get<double>();
        d.pred_variance = dj.at("pred_variance").get<double>();
        d.ucb = dj.at("ucb").get<double>();
        d.measured = dj.at("measured").get<bool>();
        if (d.measured) {
            d.measurement.curve.strain = from_vec(dj.at("curve").at("strain").get<std::vector<double>>());
            d.measurement.curve.loading = from_vec(dj.at("curve").at("loading").get<std::vector<double>>());
            d.measurement.curve.unloading = from_vec(dj.at("curve").at("unloading").get<std::vector<double>>());
            d.measurement.dissipation = dj.at("dissipation").get<double>();
            d.measurement.replicates = dj.at("replicates").get<int>();
            d.measurement.single_replicate = dj.at("single_replicate").get<bool>();
        }
        state.designs.push_back(std::move(d));
    }
    return state;
}

} // namespace

void save_state(const CampaignState& state, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write state file: " + path.string());
    out << state_to_json(state).dump(2) << '\n';
    if (!out) throw std::runtime_error("state write failed: " + path.string());
}

CampaignState load_state(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open state file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("state file is not valid JSON (" + path.string() + "): " + e.what());
    }
    return state_from_json(j);
}

bool states_equal(const CampaignState& a, const CampaignState& b) {
    return state_to_json(a) == state_to_json(b);
}

} // namespace tpms
