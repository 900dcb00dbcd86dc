#include "tpms/ensemble.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace tpms {

namespace {

/// Signed trapezoid weights of a strain grid (integral of a sampled
/// function = weights dot samples).
VectorXd trapezoid_weights(const VectorXd& grid) {
    const Eigen::Index n = grid.size();
    if (n < 2) throw std::invalid_argument("strain grid needs >= 2 points");
    VectorXd w = VectorXd::Zero(n);
    for (Eigen::Index i = 1; i < n; ++i) {
        const double h = grid[i] - grid[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    return w;
}

struct RowSet {
    MatrixXd params;
    MatrixXd strains;
    VectorXd stresses; // raw MPa
};

RowSet build_rows(const std::vector<TrainingRecord>& records, int stride) {
    if (records.empty()) throw std::invalid_argument("training set is empty");
    if (stride < 1) throw std::invalid_argument("strain stride must be >= 1");
    std::vector<int> kept;
    for (int k = 0; k < kCanonicalPoints; k += stride) kept.push_back(k);
    if (kept.back() != kCanonicalPoints - 1) kept.push_back(kCanonicalPoints - 1);

    const Eigen::Index rows_per_record = 2 * static_cast<Eigen::Index>(kept.size());
    const Eigen::Index n = rows_per_record * static_cast<Eigen::Index>(records.size());
    RowSet set;
    set.params.resize(kParamInputs, n);
    set.strains.resize(kStrainInputs, n);
    set.stresses.resize(n);
    Eigen::Index col = 0;
    for (const auto& rec : records) {
        check_weights(rec.weights);
        for (int phase = 0; phase < 2; ++phase) {
            const VectorXd& stress = phase == 0 ? rec.curve.loading : rec.curve.unloading;
            for (int k : kept) {
                set.params.col(col) = rec.weights;
                set.strains(0, col) = rec.curve.strain[k];
                set.strains(1, col) = static_cast<double>(phase);
                set.stresses[col] = stress[k];
                ++col;
            }
        }
    }
    return set;
}

MatrixXd phase_rows(const VectorXd& strains, Phase phase) {
    MatrixXd s(kStrainInputs, strains.size());
    s.row(0) = strains.transpose();
    s.row(1).setConstant(phase == Phase::load ? 0.0 : 1.0);
    return s;
}

} // namespace

VectorXd EnsembleModel::canonical_grid() const {
    VectorXd grid(kCanonicalPoints);
    for (int k = 0; k < kCanonicalPoints; ++k) {
        grid[k] = reference_max_strain * static_cast<double>(k) / static_cast<double>(kCanonicalPoints - 1);
    }
    return grid;
}

EnsembleModel train_ensemble(const std::vector<TrainingRecord>& records, std::uint64_t seed,
                             const EnsembleTrainConfig& config) {
    if (config.members < 2) throw std::invalid_argument("ensemble needs at least 2 members");
    check_spec(config.spec);
    const RowSet rows = build_rows(records, config.strain_stride);

    EnsembleModel model;
    model.spec = config.spec;
    model.stress_mean = rows.stresses.mean();
    const double var = (rows.stresses.array() - model.stress_mean).square().mean();
    model.stress_std = std::max(std::sqrt(var), 1e-8);
    model.reference_max_strain = 0.0;
    for (const auto& rec : records) model.reference_max_strain = std::max(model.reference_max_strain, rec.curve.max_strain());

    TrainData data;
    data.params = rows.params;
    data.strains = rows.strains;
    data.targets = (rows.stresses.array() - model.stress_mean) / model.stress_std;

    model.members.resize(config.members);
    model.member_seeds.resize(config.members);
    model.epochs_run.assign(config.members, 0);
    for (int m = 0; m < config.members; ++m) model.member_seeds[m] = derive_seed(seed, 100, static_cast<std::uint64_t>(m));

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads = std::max(1, std::min<int>(config.threads > 0 ? config.threads : static_cast<int>(hw), config.members));

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const int m = next.fetch_add(1);
            if (m >= config.members) return;
            try {
                model.members[m] = train_mlp(config.spec, data, model.member_seeds[m], config.train, &model.epochs_run[m]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return model;
}

VectorXd predict_member_stress(const EnsembleModel& model, int member, const WeightVector& w,
                               const VectorXd& strains, Phase phase) {
    if (member < 0 || member >= model.size()) throw std::out_of_range("member index");
    MatrixXd params(kParamInputs, strains.size());
    params.colwise() = w;
    const Eigen::RowVectorXd z = model.members[member].infer(params, phase_rows(strains, phase));
    return (z.transpose().array() * model.stress_std + model.stress_mean).matrix();
}

StressPrediction predict_stress(const EnsembleModel& model, const WeightVector& w, const VectorXd& strains,
                                Phase phase) {
    check_weights(w);
    if (model.size() < 2) throw std::invalid_argument("ensemble needs >= 2 trained members");
    for (Eigen::Index i = 0; i < strains.size(); ++i) {
        if (!(strains[i] >= 0.0 && strains[i] <= 1.0)) throw std::invalid_argument("strains must lie in [0, 1]");
    }
    const int n = model.size();
    MatrixXd all(strains.size(), n);
    for (int m = 0; m < n; ++m) all.col(m) = predict_member_stress(model, m, w, strains, phase);
    StressPrediction out;
    out.mean = all.rowwise().mean();
    out.variance = (all.colwise() - out.mean).array().square().rowwise().sum() / static_cast<double>(n - 1);
    return out;
}

DissipationPrediction predict_dissipation(const EnsembleModel& model, const WeightVector& w,
                                          const VectorXd& strain_grid) {
    check_weights(w);
    if (model.size() < 2) throw std::invalid_argument("ensemble needs >= 2 trained members");
    const int n = model.size();
    VectorXd per_member(n);
    for (int m = 0; m < n; ++m) {
        const VectorXd loading = predict_member_stress(model, m, w, strain_grid, Phase::load);
        const VectorXd unloading = predict_member_stress(model, m, w, strain_grid, Phase::unload);
        per_member[m] = hysteresis_area_kj_per_m3(strain_grid, loading, unloading);
    }
    DissipationPrediction out;
    out.mean = per_member.mean();
    out.variance = (per_member.array() - out.mean).square().sum() / static_cast<double>(n - 1);
    return out;
}

DissipationScorer::DissipationScorer(const EnsembleModel& model, const VectorXd& strain_grid) {
    if (model.size() < 2) throw std::invalid_argument("ensemble needs >= 2 trained members");
    n_members_ = model.size();
    const Eigen::Index g = strain_grid.size();
    const VectorXd trap = trapezoid_weights(strain_grid);
    row_weights_.resize(2 * g);
    row_weights_.head(g) = 1000.0 * model.stress_std * trap;  // loading rows
    row_weights_.tail(g) = -1000.0 * model.stress_std * trap; // unloading rows

    MatrixXd strain_inputs(kStrainInputs, 2 * g);
    strain_inputs.leftCols(g) = phase_rows(strain_grid, Phase::load);
    strain_inputs.rightCols(g) = phase_rows(strain_grid, Phase::unload);

    auto fold = [](const Mlp::Block& blk) {
        Affine aff;
        aff.weight = blk.weight;
        aff.bias = blk.bias.col(0);
        aff.relu = blk.relu;
        if (blk.has_bn) {
            const VectorXd scale = blk.gamma.col(0).array() * (blk.run_var.col(0).array() + 1e-5).rsqrt();
            aff.weight = scale.asDiagonal() * aff.weight;
            aff.bias = (scale.array() * (aff.bias - blk.run_mean.col(0)).array()).matrix() + blk.beta.col(0);
        }
        return aff;
    };

    plans_.reserve(n_members_);
    for (int m = 0; m < n_members_; ++m) {
        const Mlp& net = model.members[m];
        const auto& blocks = net.blocks();
        MemberPlan plan;
        for (int i = 0; i < net.strain_begin(); ++i) plan.param_head.push_back(fold(blocks[i]));

        // All strain-head features are shared by every candidate.
        MatrixXd sfeat = strain_inputs;
        for (int i = net.strain_begin(); i < net.trunk_begin(); ++i) {
            sfeat = blocks[i].apply_inference(sfeat);
        }

        const Affine first = fold(blocks[net.trunk_begin()]);
        const int pw = net.param_feature_width();
        plan.trunk1_param = first.weight.leftCols(pw);
        plan.strain_offsets = (first.weight.rightCols(first.weight.cols() - pw) * sfeat).colwise() + first.bias;
        plan.trunk1_relu = first.relu;
        for (int i = net.trunk_begin() + 1; i < static_cast<int>(blocks.size()); ++i) {
            plan.rest.push_back(fold(blocks[i]));
        }
        plans_.push_back(std::move(plan));
    }
}

void DissipationScorer::score_range(const std::vector<WeightVector>& candidates, std::size_t begin, std::size_t end,
                                    double* mean_out, double* variance_out) const {
    constexpr std::size_t kBlock = 256;
    const Eigen::Index rows = row_weights_.size();
    MatrixXd per_member; // member x candidates in block
    for (std::size_t s = begin; s < end; s += kBlock) {
        const std::size_t e = std::min(end, s + kBlock);
        const Eigen::Index b = static_cast<Eigen::Index>(e - s);
        MatrixXd input(kParamInputs, b);
        for (Eigen::Index i = 0; i < b; ++i) input.col(i) = candidates[s + i];
        per_member.setZero(n_members_, b);

        for (int m = 0; m < n_members_; ++m) {
            const MemberPlan& plan = plans_[m];
            MatrixXd feat = input;
            for (const Affine& aff : plan.param_head) {
                feat = (aff.weight * feat).colwise() + aff.bias;
                if (aff.relu) feat = feat.cwiseMax(0.0);
            }
            const MatrixXd trunk_base = plan.trunk1_param * feat;
            for (Eigen::Index j = 0; j < rows; ++j) {
                MatrixXd z = trunk_base.colwise() + plan.strain_offsets.col(j);
                if (plan.trunk1_relu) z = z.cwiseMax(0.0);
                for (const Affine& aff : plan.rest) {
                    z = (aff.weight * z).colwise() + aff.bias;
                    if (aff.relu) z = z.cwiseMax(0.0);
                }
                per_member.row(m) += row_weights_[j] * z.row(0);
            }
        }
        for (Eigen::Index i = 0; i < b; ++i) {
            const double mu = per_member.col(i).mean();
            mean_out[s + i] = mu;
            variance_out[s + i] =
                (per_member.col(i).array() - mu).square().sum() / static_cast<double>(n_members_ - 1);
        }
    }
}

void DissipationScorer::score_all(const std::vector<WeightVector>& candidates, std::vector<double>& mean_out,
                                  std::vector<double>& variance_out, int threads) const {
    const std::size_t n = candidates.size();
    mean_out.resize(n);
    variance_out.resize(n);
    if (n == 0) return;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads = std::max(1, std::min<int>(threads > 0 ? threads : static_cast<int>(hw),
                                                   static_cast<int>((n + 255) / 256)));
    if (nthreads == 1) {
        score_range(candidates, 0, n, mean_out.data(), variance_out.data());
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
        const std::size_t b = n * t / nthreads;
        const std::size_t e = n * (t + 1) / nthreads;
        pool.emplace_back([&, b, e] { score_range(candidates, b, e, mean_out.data(), variance_out.data()); });
    }
    for (auto& th : pool) th.join();
}

DissipationPrediction DissipationScorer::score_one(const WeightVector& w) const {
    double mu = 0.0, var = 0.0;
    std::vector<WeightVector> one{w};
    score_range(one, 0, 1, &mu, &var);
    return {mu, var};
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_matrix(std::ostream& out, const MatrixXd& m) {
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_f64(out, m.data()[i]);
}

void get_matrix(std::istream& in, MatrixXd& m) {
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    if (m.rows() != rows || m.cols() != cols) throw std::runtime_error("checkpoint tensor shape mismatch");
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get_f64(in);
}

constexpr char kMagic[8] = {'T', 'P', 'M', 'S', 'E', 'N', 'S', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

} // namespace

void save_ensemble(const EnsembleModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    out.write(kMagic, 8);
    put_u32(out, kCheckpointVersion);

    auto put_widths = [&](const std::vector<int>& widths) {
        put_u32(out, static_cast<std::uint32_t>(widths.size()));
        for (int w : widths) put_u32(out, static_cast<std::uint32_t>(w));
    };
    put_widths(model.spec.param_head);
    put_widths(model.spec.strain_head);
    put_widths(model.spec.trunk);
    put_f64(out, model.spec.dropout);
    put_u32(out, model.spec.batch_norm ? 1 : 0);
    put_u32(out, static_cast<std::uint32_t>(model.spec.activation.size()));
    out.write(model.spec.activation.data(), static_cast<std::streamsize>(model.spec.activation.size()));

    put_f64(out, model.stress_mean);
    put_f64(out, model.stress_std);
    put_f64(out, model.reference_max_strain);
    put_u32(out, static_cast<std::uint32_t>(model.members.size()));
    for (int m = 0; m < model.size(); ++m) {
        put_u64(out, model.member_seeds[m]);
        put_u32(out, static_cast<std::uint32_t>(model.epochs_run[m]));
        model.members[m].visit_params([&](const MatrixXd& value, const MatrixXd&) { put_matrix(out, value); });
        model.members[m].visit_buffers([&](const MatrixXd& buf) { put_matrix(out, buf); });
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

EnsembleModel load_ensemble(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("not an ensemble checkpoint: " + path.string());
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("incompatible checkpoint version " + std::to_string(version) + " in " + path.string() +
                                 " (expected " + std::to_string(kCheckpointVersion) + ")");
    }

    EnsembleModel model;
    auto get_widths = [&](std::vector<int>& widths) {
        widths.resize(get_u32(in));
        for (auto& w : widths) w = static_cast<int>(get_u32(in));
    };
    get_widths(model.spec.param_head);
    get_widths(model.spec.strain_head);
    get_widths(model.spec.trunk);
    model.spec.dropout = get_f64(in);
    model.spec.batch_norm = get_u32(in) != 0;
    model.spec.activation.resize(get_u32(in));
    in.read(model.spec.activation.data(), static_cast<std::streamsize>(model.spec.activation.size()));

    model.stress_mean = get_f64(in);
    model.stress_std = get_f64(in);
    model.reference_max_strain = get_f64(in);
    const std::uint32_t count = get_u32(in);
    model.members.reserve(count);
    for (std::uint32_t m = 0; m < count; ++m) {
        model.member_seeds.push_back(get_u64(in));
        model.epochs_run.push_back(static_cast<int>(get_u32(in)));
        Mlp net(model.spec, 0);
        net.visit_params([&](MatrixXd& value, MatrixXd&) { get_matrix(in, value); });
        net.visit_buffers([&](MatrixXd& buf) { get_matrix(in, buf); });
        model.members.push_back(std::move(net));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    return model;
}

bool ensembles_equal(const EnsembleModel& a, const EnsembleModel& b) {
    if (a.spec.param_head != b.spec.param_head || a.spec.strain_head != b.spec.strain_head ||
        a.spec.trunk != b.spec.trunk || a.spec.dropout != b.spec.dropout ||
        a.spec.batch_norm != b.spec.batch_norm || a.spec.activation != b.spec.activation) {
        return false;
    }
    if (a.stress_mean != b.stress_mean || a.stress_std != b.stress_std ||
        a.reference_max_strain != b.reference_max_strain || a.size() != b.size() ||
        a.member_seeds != b.member_seeds || a.epochs_run != b.epochs_run) {
        return false;
    }
    for (int m = 0; m < a.size(); ++m) {
        if (!a.members[m].equals(b.members[m])) return false;
    }
    return true;
}

} // namespace tpms
