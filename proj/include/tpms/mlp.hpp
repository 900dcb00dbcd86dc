#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tpms/rng.hpp"

namespace tpms {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr int kParamInputs = 8;  // TPMS weights
inline constexpr int kStrainInputs = 2; // (strain, phase flag: 0 load / 1 unload)

/// Dual-headed MLP layout: one head embeds the 8 TPMS parameters, the
/// other a (strain, phase) pair; the trunk maps their concatenation to a
/// scalar stress. Empty width lists degenerate a segment to identity.
struct MlpSpec {
    std::vector<int> param_head{128, 128};
    std::vector<int> strain_head{64, 64};
    std::vector<int> trunk{128, 128};
    double dropout = 0.1;
    bool batch_norm = true;
    std::string activation = "relu"; // or "identity"
};

void check_spec(const MlpSpec& spec);

/// One stress-prediction network. Inputs are column batches: P is
/// 8 x B, S is 2 x B; the output is 1 x B.
class Mlp {
public:
    Mlp() = default;
    Mlp(const MlpSpec& spec, std::uint64_t init_seed);

    const MlpSpec& spec() const { return spec_; }

    /// training=true activates dropout and batch-statistics normalization
    /// (and updates the running stats); inference mode is deterministic.
    Eigen::RowVectorXd forward(const MatrixXd& params, const MatrixXd& strains, bool training = false,
                               Rng* dropout_rng = nullptr);

    /// Cache-free inference; safe to call concurrently on a const model.
    Eigen::RowVectorXd infer(const MatrixXd& params, const MatrixXd& strains) const;

    /// Backpropagates d(loss)/d(output) through the caches of the last
    /// forward call, overwriting parameter gradients.
    void backward(const Eigen::RowVectorXd& grad_output);

    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    /// fn(MatrixXd& value, MatrixXd& grad) over every trainable tensor,
    /// in a stable order.
    template <class Fn> void visit_params(Fn&& fn);
    template <class Fn> void visit_params(Fn&& fn) const;
    /// fn(MatrixXd& buffer) over non-trainable state (running stats).
    template <class Fn> void visit_buffers(Fn&& fn);
    template <class Fn> void visit_buffers(Fn&& fn) const;

    bool equals(const Mlp& other) const;

    struct Block {
        MatrixXd weight, grad_weight, adam_m_w, adam_v_w;
        MatrixXd bias, grad_bias, adam_m_b, adam_v_b;
        bool has_bn = false;
        MatrixXd gamma, grad_gamma, adam_m_g, adam_v_g;
        MatrixXd beta, grad_beta, adam_m_be, adam_v_be;
        MatrixXd run_mean, run_var;
        bool relu = false;
        double dropout = 0.0;

        // forward caches
        MatrixXd in, lin, x_hat, pre_act, drop_mask;
        VectorXd batch_mean, batch_inv_std;
        bool cached_training = false;

        MatrixXd forward(const MatrixXd& x, bool training, Rng* rng);
        MatrixXd backward(MatrixXd grad_out);
        MatrixXd apply_inference(const MatrixXd& x) const;
        void clear_caches();
    };

    std::vector<Block>& blocks() { return blocks_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    int param_feature_width() const { return param_feat_width_; }
    int trunk_begin() const { return trunk_begin_; }
    int strain_begin() const { return strain_begin_; }

private:
    MlpSpec spec_;
    // blocks_ = [param head..., strain head..., trunk..., output linear]
    std::vector<Block> blocks_;
    int strain_begin_ = 0; // first strain-head block
    int trunk_begin_ = 0;  // first trunk block
    int param_feat_width_ = kParamInputs;
    long adam_t_ = 0;
};

struct TrainOptions {
    int max_epochs = 2000;
    int patience = 100;
    double learning_rate = 1e-3;
    int batch_size = 128;
    double holdout_fraction = 0.1;
};

/// Flat training rows: column i of params/strains with target stress y[i].
struct TrainData {
    MatrixXd params;  // 8 x N
    MatrixXd strains; // 2 x N
    VectorXd targets; // N
};

/// Adam + MSE with per-member held-out early stopping; restores the
/// best-epoch parameters and running stats. Throws std::runtime_error on
/// a non-finite loss, naming the seed.
Mlp train_mlp(const MlpSpec& spec, const TrainData& data, std::uint64_t seed, const TrainOptions& options,
              int* epochs_run = nullptr);

/// Worst relative error between analytic parameter gradients and central
/// finite differences of the MSE loss (inference-mode network).
double gradient_check(Mlp& mlp, const MatrixXd& params, const MatrixXd& strains, const VectorXd& targets,
                      double step = 1e-5);

// --- template bodies ---

template <class Fn> void Mlp::visit_params(Fn&& fn) {
    for (auto& blk : blocks_) {
        fn(blk.weight, blk.grad_weight);
        fn(blk.bias, blk.grad_bias);
        if (blk.has_bn) {
            fn(blk.gamma, blk.grad_gamma);
            fn(blk.beta, blk.grad_beta);
        }
    }
}

template <class Fn> void Mlp::visit_params(Fn&& fn) const {
    for (const auto& blk : blocks_) {
        fn(blk.weight, blk.grad_weight);
        fn(blk.bias, blk.grad_bias);
        if (blk.has_bn) {
            fn(blk.gamma, blk.grad_gamma);
            fn(blk.beta, blk.grad_beta);
        }
    }
}

template <class Fn> void Mlp::visit_buffers(Fn&& fn) {
    for (auto& blk : blocks_) {
        if (blk.has_bn) {
            fn(blk.run_mean);
            fn(blk.run_var);
        }
    }
}

template <class Fn> void Mlp::visit_buffers(Fn&& fn) const {
    for (const auto& blk : blocks_) {
        if (blk.has_bn) {
            fn(blk.run_mean);
            fn(blk.run_var);
        }
    }
}

} // namespace tpms
