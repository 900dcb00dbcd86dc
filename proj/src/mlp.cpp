#include "tpms/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tpms {

namespace {
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
} // namespace

void check_spec(const MlpSpec& spec) {
    for (const auto* widths : {&spec.param_head, &spec.strain_head, &spec.trunk}) {
        for (int w : *widths) {
            if (w < 1) throw std::invalid_argument("layer widths must be positive");
        }
    }
    if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
    if (spec.activation != "relu" && spec.activation != "identity") {
        throw std::invalid_argument("activation must be 'relu' or 'identity'");
    }
}

Mlp::Mlp(const MlpSpec& spec, std::uint64_t init_seed) : spec_(spec) {
    check_spec(spec);
    Rng rng(init_seed);
    const bool relu = spec.activation == "relu";

    auto add_block = [&](int in, int out, bool hidden) {
        Block blk;
        const double stddev = std::sqrt((relu && hidden ? 2.0 : 1.0) / in);
        blk.weight.resize(out, in);
        for (Eigen::Index i = 0; i < blk.weight.size(); ++i) blk.weight.data()[i] = stddev * rng.normal();
        blk.bias = MatrixXd::Zero(out, 1);
        blk.grad_weight = MatrixXd::Zero(out, in);
        blk.grad_bias = MatrixXd::Zero(out, 1);
        blk.adam_m_w = MatrixXd::Zero(out, in);
        blk.adam_v_w = MatrixXd::Zero(out, in);
        blk.adam_m_b = MatrixXd::Zero(out, 1);
        blk.adam_v_b = MatrixXd::Zero(out, 1);
        if (hidden && spec.batch_norm) {
            blk.has_bn = true;
            blk.gamma = MatrixXd::Ones(out, 1);
            blk.beta = MatrixXd::Zero(out, 1);
            blk.run_mean = MatrixXd::Zero(out, 1);
            blk.run_var = MatrixXd::Ones(out, 1);
            for (MatrixXd* g : {&blk.grad_gamma, &blk.grad_beta, &blk.adam_m_g, &blk.adam_v_g, &blk.adam_m_be, &blk.adam_v_be}) {
                *g = MatrixXd::Zero(out, 1);
            }
        }
        blk.relu = hidden && relu;
        blk.dropout = hidden ? spec.dropout : 0.0;
        blocks_.push_back(std::move(blk));
        return out;
    };

    int width = kParamInputs;
    for (int w : spec.param_head) width = add_block(width, w, true);
    param_feat_width_ = width;

    strain_begin_ = static_cast<int>(blocks_.size());
    width = kStrainInputs;
    for (int w : spec.strain_head) width = add_block(width, w, true);
    const int strain_feat_width = width;

    trunk_begin_ = static_cast<int>(blocks_.size());
    width = param_feat_width_ + strain_feat_width;
    for (int w : spec.trunk) width = add_block(width, w, true);
    add_block(width, 1, false); // scalar stress output
}

MatrixXd Mlp::Block::forward(const MatrixXd& x, bool training, Rng* rng) {
    in = x;
    cached_training = training;
    lin = (weight * x).colwise() + bias.col(0);
    MatrixXd y;
    if (has_bn) {
        if (training) {
            const Eigen::Index m = lin.cols();
            batch_mean = lin.rowwise().mean();
            MatrixXd centered = lin.colwise() - batch_mean;
            VectorXd var = centered.array().square().rowwise().mean();
            batch_inv_std = (var.array() + kBnEps).rsqrt();
            x_hat = centered.array().colwise() * batch_inv_std.array();
            run_mean.col(0) = (1.0 - kBnMomentum) * run_mean.col(0) + kBnMomentum * batch_mean;
            const double unbias = m > 1 ? static_cast<double>(m) / (m - 1) : 1.0;
            run_var.col(0) = (1.0 - kBnMomentum) * run_var.col(0) + kBnMomentum * unbias * var;
        } else {
            const VectorXd inv_std = (run_var.col(0).array() + kBnEps).rsqrt();
            x_hat = (lin.colwise() - run_mean.col(0)).array().colwise() * inv_std.array();
        }
        y = (x_hat.array().colwise() * gamma.col(0).array()).colwise() + beta.col(0).array();
    } else {
        y = lin;
    }
    pre_act = y;
    if (relu) y = y.cwiseMax(0.0);
    if (training && dropout > 0.0) {
        drop_mask.resize(y.rows(), y.cols());
        const double keep_scale = 1.0 / (1.0 - dropout);
        for (Eigen::Index i = 0; i < drop_mask.size(); ++i) {
            drop_mask.data()[i] = (rng->uniform() >= dropout) ? keep_scale : 0.0;
        }
        y.array() *= drop_mask.array();
    } else {
        drop_mask.resize(0, 0);
    }
    return y;
}

MatrixXd Mlp::Block::backward(MatrixXd grad_out) {
    if (drop_mask.size() > 0) grad_out.array() *= drop_mask.array();
    if (relu) grad_out.array() *= (pre_act.array() > 0.0).cast<double>();

    MatrixXd grad_lin;
    if (has_bn) {
        grad_gamma.col(0) = (grad_out.array() * x_hat.array()).rowwise().sum();
        grad_beta.col(0) = grad_out.rowwise().sum();
        MatrixXd grad_xhat = grad_out.array().colwise() * gamma.col(0).array();
        if (cached_training) {
            const double m = static_cast<double>(grad_out.cols());
            const VectorXd sum_g = grad_xhat.rowwise().sum();
            const VectorXd sum_gx = (grad_xhat.array() * x_hat.array()).rowwise().sum();
            grad_lin = ((grad_xhat * m).colwise() - sum_g).array() - (x_hat.array().colwise() * sum_gx.array());
            grad_lin = grad_lin.array().colwise() * (batch_inv_std.array() / m);
        } else {
            const VectorXd inv_std = (run_var.col(0).array() + kBnEps).rsqrt();
            grad_lin = grad_xhat.array().colwise() * inv_std.array();
        }
    } else {
        grad_lin = std::move(grad_out);
    }
    grad_weight = grad_lin * in.transpose();
    grad_bias.col(0) = grad_lin.rowwise().sum();
    return weight.transpose() * grad_lin;
}

MatrixXd Mlp::Block::apply_inference(const MatrixXd& x) const {
    MatrixXd y = (weight * x).colwise() + bias.col(0);
    if (has_bn) {
        const VectorXd inv_std = (run_var.col(0).array() + kBnEps).rsqrt();
        y = ((y.colwise() - run_mean.col(0)).array().colwise() * (gamma.col(0).array() * inv_std.array()))
                .colwise() +
            beta.col(0).array();
    }
    if (relu) y = y.cwiseMax(0.0);
    return y;
}

void Mlp::Block::clear_caches() {
    in.resize(0, 0);
    lin.resize(0, 0);
    x_hat.resize(0, 0);
    pre_act.resize(0, 0);
    drop_mask.resize(0, 0);
}

Eigen::RowVectorXd Mlp::forward(const MatrixXd& params, const MatrixXd& strains, bool training, Rng* dropout_rng) {
    if (params.rows() != kParamInputs || strains.rows() != kStrainInputs || params.cols() != strains.cols()) {
        throw std::invalid_argument("forward expects 8 x B params and 2 x B strains");
    }
    if (training && spec_.dropout > 0.0 && dropout_rng == nullptr) {
        throw std::invalid_argument("training forward with dropout needs an RNG");
    }
    MatrixXd a = params;
    for (int i = 0; i < strain_begin_; ++i) a = blocks_[i].forward(a, training, dropout_rng);
    MatrixXd s = strains;
    for (int i = strain_begin_; i < trunk_begin_; ++i) s = blocks_[i].forward(s, training, dropout_rng);

    MatrixXd joined(a.rows() + s.rows(), a.cols());
    joined.topRows(a.rows()) = a;
    joined.bottomRows(s.rows()) = s;
    for (int i = trunk_begin_; i < static_cast<int>(blocks_.size()); ++i) {
        joined = blocks_[i].forward(joined, training, dropout_rng);
    }
    return joined.row(0);
}

Eigen::RowVectorXd Mlp::infer(const MatrixXd& params, const MatrixXd& strains) const {
    if (params.rows() != kParamInputs || strains.rows() != kStrainInputs || params.cols() != strains.cols()) {
        throw std::invalid_argument("infer expects 8 x B params and 2 x B strains");
    }
    MatrixXd a = params;
    for (int i = 0; i < strain_begin_; ++i) a = blocks_[i].apply_inference(a);
    MatrixXd s = strains;
    for (int i = strain_begin_; i < trunk_begin_; ++i) s = blocks_[i].apply_inference(s);
    MatrixXd joined(a.rows() + s.rows(), a.cols());
    joined.topRows(a.rows()) = a;
    joined.bottomRows(s.rows()) = s;
    for (int i = trunk_begin_; i < static_cast<int>(blocks_.size()); ++i) {
        joined = blocks_[i].apply_inference(joined);
    }
    return joined.row(0);
}

void Mlp::backward(const Eigen::RowVectorXd& grad_output) {
    MatrixXd grad = grad_output;
    for (int i = static_cast<int>(blocks_.size()) - 1; i >= trunk_begin_; --i) {
        grad = blocks_[i].backward(std::move(grad));
    }
    MatrixXd grad_param = grad.topRows(param_feat_width_);
    MatrixXd grad_strain = grad.bottomRows(grad.rows() - param_feat_width_);
    for (int i = trunk_begin_ - 1; i >= strain_begin_; --i) {
        grad_strain = blocks_[i].backward(std::move(grad_strain));
    }
    for (int i = strain_begin_ - 1; i >= 0; --i) {
        grad_param = blocks_[i].backward(std::move(grad_param));
    }
}

void Mlp::adam_step(double lr, double beta1, double beta2, double eps) {
    ++adam_t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
    auto update = [&](MatrixXd& value, const MatrixXd& grad, MatrixXd& m, MatrixXd& v) {
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.array().square().matrix();
        value.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    };
    for (auto& blk : blocks_) {
        update(blk.weight, blk.grad_weight, blk.adam_m_w, blk.adam_v_w);
        update(blk.bias, blk.grad_bias, blk.adam_m_b, blk.adam_v_b);
        if (blk.has_bn) {
            update(blk.gamma, blk.grad_gamma, blk.adam_m_g, blk.adam_v_g);
            update(blk.beta, blk.grad_beta, blk.adam_m_be, blk.adam_v_be);
        }
    }
}

bool Mlp::equals(const Mlp& other) const {
    if (blocks_.size() != other.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& a = blocks_[i];
        const Block& b = other.blocks_[i];
        if (a.weight != b.weight || a.bias != b.bias || a.has_bn != b.has_bn) return false;
        if (a.has_bn && (a.gamma != b.gamma || a.beta != b.beta || a.run_mean != b.run_mean || a.run_var != b.run_var)) {
            return false;
        }
    }
    return true;
}

Mlp train_mlp(const MlpSpec& spec, const TrainData& data, std::uint64_t seed, const TrainOptions& options,
              int* epochs_run) {
    const Eigen::Index n = data.targets.size();
    if (n == 0) throw std::invalid_argument("training data is empty");
    if (data.params.cols() != n || data.strains.cols() != n) {
        throw std::invalid_argument("training arrays disagree on sample count");
    }

    Mlp net(spec, derive_seed(seed, 0));
    Rng rng(derive_seed(seed, 1));

    // Held-out split for early stopping, drawn from this member's stream.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    Eigen::Index n_val = n >= 2 ? std::max<Eigen::Index>(1, static_cast<Eigen::Index>(options.holdout_fraction * n)) : 0;
    if (n_val >= n) n_val = n - 1;
    const Eigen::Index n_train = n - n_val;

    auto gather = [&](Eigen::Index begin, Eigen::Index count, TrainData& out) {
        out.params.resize(kParamInputs, count);
        out.strains.resize(kStrainInputs, count);
        out.targets.resize(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            const Eigen::Index src = order[static_cast<std::size_t>(begin + i)];
            out.params.col(i) = data.params.col(src);
            out.strains.col(i) = data.strains.col(src);
            out.targets[i] = data.targets[src];
        }
    };
    TrainData train, val;
    gather(0, n_train, train);
    gather(n_train, n_val, val);

    auto eval_loss = [&](const TrainData& d) {
        const Eigen::RowVectorXd pred = net.forward(d.params, d.strains, false);
        return (pred.transpose() - d.targets).squaredNorm() / static_cast<double>(d.targets.size());
    };

    Mlp best = net;
    double best_loss = n_val > 0 ? eval_loss(val) : eval_loss(train);
    int since_best = 0;
    int epoch = 0;

    const int batch = std::max(1, options.batch_size);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_train));
    std::iota(idx.begin(), idx.end(), 0);

    MatrixXd bp(kParamInputs, batch), bs(kStrainInputs, batch);
    VectorXd by(batch);
    for (; epoch < options.max_epochs; ++epoch) {
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
        double epoch_loss = 0.0;
        Eigen::Index start = 0;
        while (start < n_train) {
            Eigen::Index b = std::min<Eigen::Index>(batch, n_train - start);
            // Fold a would-be singleton tail into this batch; batch stats
            // over one sample are degenerate.
            if (n_train - (start + b) == 1) ++b;
            bp.resize(kParamInputs, b);
            bs.resize(kStrainInputs, b);
            by.resize(b);
            for (Eigen::Index i = 0; i < b; ++i) {
                const Eigen::Index src = idx[static_cast<std::size_t>(start + i)];
                bp.col(i) = train.params.col(src);
                bs.col(i) = train.strains.col(src);
                by[i] = train.targets[src];
            }
            const Eigen::RowVectorXd pred = net.forward(bp, bs, true, &rng);
            const Eigen::RowVectorXd residual = pred - by.transpose();
            epoch_loss += residual.squaredNorm();
            net.backward(residual * (2.0 / static_cast<double>(b)));
            net.adam_step(options.learning_rate);
            start += b;
        }
        epoch_loss /= static_cast<double>(n_train);
        if (!std::isfinite(epoch_loss)) {
            throw std::runtime_error("training diverged to a non-finite loss (seed " + std::to_string(seed) + ")");
        }

        const double monitored = n_val > 0 ? eval_loss(val) : eval_loss(train);
        if (!std::isfinite(monitored)) {
            throw std::runtime_error("validation loss is non-finite (seed " + std::to_string(seed) + ")");
        }
        if (monitored < best_loss) {
            best_loss = monitored;
            best = net;
            since_best = 0;
        } else if (++since_best >= options.patience) {
            ++epoch;
            break;
        }
    }
    if (epochs_run) *epochs_run = epoch;
    for (auto& blk : best.blocks()) blk.clear_caches();
    return best;
}

double gradient_check(Mlp& mlp, const MatrixXd& params, const MatrixXd& strains, const VectorXd& targets,
                      double step) {
    const double m = static_cast<double>(targets.size());
    auto loss = [&] {
        const Eigen::RowVectorXd pred = mlp.forward(params, strains, false);
        return (pred.transpose() - targets).squaredNorm() / m;
    };
    // Analytic gradients through the inference-mode graph.
    const Eigen::RowVectorXd pred = mlp.forward(params, strains, false);
    mlp.backward((pred - targets.transpose()) * (2.0 / m));

    double worst = 0.0;
    mlp.visit_params([&](MatrixXd& value, MatrixXd& grad) {
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            const double saved = value.data()[i];
            value.data()[i] = saved + step;
            const double up = loss();
            value.data()[i] = saved - step;
            const double down = loss();
            value.data()[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double analytic = grad.data()[i];
            // Floor keeps finite-difference roundoff (~1e-11 at h=1e-5)
            // from dominating parameters whose true gradient is zero,
            // e.g. a bias feeding straight into batch normalization.
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic) / denom);
        }
    });
    return worst;
}

} // namespace tpms
