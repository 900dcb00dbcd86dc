#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "tpms/mlp.hpp"

using namespace tpms;

namespace {

MlpSpec tiny_spec() {
    MlpSpec spec;
    spec.param_head = {12, 12};
    spec.strain_head = {6, 6};
    spec.trunk = {12, 12};
    spec.dropout = 0.1;
    spec.batch_norm = true;
    return spec;
}

MlpSpec linear_spec() {
    MlpSpec spec;
    spec.param_head = {};
    spec.strain_head = {};
    spec.trunk = {};
    spec.dropout = 0.0;
    spec.batch_norm = false;
    spec.activation = "identity";
    return spec;
}

void random_batch(Rng& rng, int n, MatrixXd& params, MatrixXd& strains, VectorXd& targets) {
    params.resize(kParamInputs, n);
    strains.resize(kStrainInputs, n);
    targets.resize(n);
    for (int c = 0; c < n; ++c) {
        double sum = 0.0;
        for (int i = 0; i < kParamInputs; ++i) {
            params(i, c) = rng.exponential();
            sum += params(i, c);
        }
        params.col(c) /= sum;
        strains(0, c) = rng.uniform(0.0, 0.6);
        strains(1, c) = rng.uniform() < 0.5 ? 0.0 : 1.0;
        targets[c] = rng.normal();
    }
}

} // namespace

TEST_CASE("spec validation") {
    MlpSpec spec = tiny_spec();
    spec.dropout = 1.0;
    CHECK_THROWS_AS(check_spec(spec), std::invalid_argument);
    spec = tiny_spec();
    spec.activation = "tanh";
    CHECK_THROWS_AS(check_spec(spec), std::invalid_argument);
    spec = tiny_spec();
    spec.trunk = {0};
    CHECK_THROWS_AS(check_spec(spec), std::invalid_argument);
}

TEST_CASE("gradient check is exact for a pure linear network") {
    Mlp net(linear_spec(), 99);
    Rng rng(1);
    MatrixXd params, strains;
    VectorXd targets;
    random_batch(rng, 4, params, strains, targets);
    CHECK(gradient_check(net, params, strains, targets) < 1e-8);
}

TEST_CASE("gradient check on the dual-headed architecture") {
    Mlp net(tiny_spec(), 7);
    Rng rng(2);
    MatrixXd params, strains;
    VectorXd targets;
    random_batch(rng, 3, params, strains, targets);
    CHECK(gradient_check(net, params, strains, targets) < 1e-4);
}

TEST_CASE("gradient check with zero inputs stays finite") {
    // Zero inputs park every normalized preactivation exactly on the
    // ReLU kink, where central differences legitimately disagree with
    // the one-sided analytic convention; only finiteness is contractual.
    Mlp net(tiny_spec(), 8);
    MatrixXd params = MatrixXd::Zero(kParamInputs, 2);
    MatrixXd strains = MatrixXd::Zero(kStrainInputs, 2);
    VectorXd targets = VectorXd::Zero(2);
    const double err = gradient_check(net, params, strains, targets);
    CHECK(std::isfinite(err));
}

TEST_CASE("training-mode backward matches finite differences through batch statistics") {
    MlpSpec spec = tiny_spec();
    spec.dropout = 0.0;          // keep the loss a deterministic function of parameters
    spec.activation = "identity"; // batch norm centers activations on the ReLU kink
    Mlp net(spec, 21);
    Rng rng(3);
    // Well-spread inputs: a feature with near-zero batch variance makes
    // the normalized activations stiff enough that central differences
    // lose accuracy for reasons unrelated to the backward pass.
    const int n = 16;
    MatrixXd params(kParamInputs, n), strains(kStrainInputs, n);
    VectorXd targets(n);
    for (int c = 0; c < n; ++c) {
        for (int i = 0; i < kParamInputs; ++i) params(i, c) = rng.normal();
        strains(0, c) = rng.normal();
        strains(1, c) = rng.normal();
        targets[c] = rng.normal();
    }

    auto loss = [&] {
        const Eigen::RowVectorXd pred = net.forward(params, strains, true, nullptr);
        return (pred.transpose() - targets).squaredNorm() / static_cast<double>(n);
    };
    const Eigen::RowVectorXd pred = net.forward(params, strains, true, nullptr);
    net.backward((pred - targets.transpose()) * (2.0 / static_cast<double>(n)));

    double worst = 0.0;
    const double h = 1e-5;
    net.visit_params([&](MatrixXd& value, MatrixXd& grad) {
        for (Eigen::Index i = 0; i < value.size(); i += 7) { // sampled entries
            const double saved = value.data()[i];
            const double analytic = grad.data()[i];
            value.data()[i] = saved + h;
            const double up = loss();
            value.data()[i] = saved - h;
            const double down = loss();
            value.data()[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6}));
        }
    });
    CHECK(worst < 1e-4);
}

TEST_CASE("training fits a constant target") {
    TrainData data;
    const int n = 64;
    Rng rng(4);
    random_batch(rng, n, data.params, data.strains, data.targets);
    data.targets.setConstant(0.0); // standardized constant target
    TrainOptions options;
    options.max_epochs = 1500;
    options.patience = 1500;
    Mlp net = train_mlp(tiny_spec(), data, 42, options);
    const Eigen::RowVectorXd pred = net.infer(data.params, data.strains);
    for (int i = 0; i < n; ++i) CHECK(std::abs(pred[i]) < 0.1);
}

TEST_CASE("training is deterministic per seed and differs across seeds") {
    TrainData data;
    Rng rng(5);
    random_batch(rng, 48, data.params, data.strains, data.targets);
    TrainOptions options;
    options.max_epochs = 30;
    options.patience = 30;
    const MlpSpec spec = tiny_spec();
    Mlp a = train_mlp(spec, data, 1234, options);
    Mlp b = train_mlp(spec, data, 1234, options);
    Mlp c = train_mlp(spec, data, 4321, options);
    CHECK(a.equals(b));
    CHECK_FALSE(a.equals(c));
}

TEST_CASE("non-finite targets raise a divergence error naming the seed") {
    TrainData data;
    Rng rng(6);
    random_batch(rng, 16, data.params, data.strains, data.targets);
    data.targets[3] = std::numeric_limits<double>::infinity();
    TrainOptions options;
    options.max_epochs = 5;
    try {
        train_mlp(tiny_spec(), data, 777, options);
        FAIL("expected divergence");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("777") != std::string::npos);
    }
}

TEST_CASE("inference is deterministic, training forward is stochastic") {
    Mlp net(tiny_spec(), 10);
    Rng rng(8);
    MatrixXd params, strains;
    VectorXd targets;
    random_batch(rng, 6, params, strains, targets);
    const Eigen::RowVectorXd a = net.infer(params, strains);
    const Eigen::RowVectorXd b = net.infer(params, strains);
    CHECK(a == b);

    Rng drop1(9), drop2(10);
    const Eigen::RowVectorXd t1 = net.forward(params, strains, true, &drop1);
    const Eigen::RowVectorXd t2 = net.forward(params, strains, true, &drop2);
    CHECK(t1 != t2); // dropout masks differ
}

TEST_CASE("empty training data is rejected") {
    TrainData data;
    data.params.resize(kParamInputs, 0);
    data.strains.resize(kStrainInputs, 0);
    data.targets.resize(0);
    CHECK_THROWS_AS(train_mlp(tiny_spec(), data, 1, TrainOptions{}), std::invalid_argument);
}
