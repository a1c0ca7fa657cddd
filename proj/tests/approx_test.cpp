#include <cmath>

#include <gtest/gtest.h>

#include "kisgmm/approx/checkpoint.hpp"
#include "kisgmm/approx/finite_diff.hpp"
#include "kisgmm/approx/network.hpp"
#include "kisgmm/approx/optimizer.hpp"
#include "kisgmm/approx/presets.hpp"
#include "kisgmm/common/errors.hpp"
#include "kisgmm/common/rng.hpp"

using namespace kisgmm;
using namespace kisgmm::approx;

namespace {

Network dense_net(int in, int out, Activation act, std::vector<double> w, std::vector<double> b) {
    NetworkSpec spec;
    spec.layers = {DenseSpec{in, out, act}};
    Network net(spec);
    net.params()[0].values = std::move(w);
    net.params()[1].values = std::move(b);
    return net;
}

}  // namespace

TEST(Forward, IdentityDense) {
    auto net = dense_net(2, 2, Activation::Linear, {1, 0, 0, 1}, {0, 0});
    const auto out = net.forward(std::vector<double>{1.0, 2.0});
    EXPECT_DOUBLE_EQ(out[0], 1.0);
    EXPECT_DOUBLE_EQ(out[1], 2.0);
}

TEST(Forward, HandComputableAffine) {
    auto net = dense_net(2, 1, Activation::Linear, {1, 1}, {0.5});
    const auto out = net.forward(std::vector<double>{1.0, 2.0});
    EXPECT_DOUBLE_EQ(out[0], 3.5);
}

// oracle: straight-line re-evaluation of the same arithmetic
TEST(Forward, TwoLayerMatchesStraightLineReimplementation) {
    NetworkSpec spec;
    spec.seed = 42;
    spec.layers = {DenseSpec{3, 4, Activation::Tanh}, DenseSpec{4, 2, Activation::Linear}};
    Network net(spec);
    const std::vector<double> input = {0.3, -0.7, 1.1};
    const auto out = net.forward(input);

    const auto& w1 = net.params()[0].values;
    const auto& b1 = net.params()[1].values;
    const auto& w2 = net.params()[2].values;
    const auto& b2 = net.params()[3].values;
    double h[4];
    for (int o = 0; o < 4; ++o)
        h[o] = std::tanh(w1[o * 3 + 0] * input[0] + w1[o * 3 + 1] * input[1] +
                         w1[o * 3 + 2] * input[2] + b1[o]);
    for (int o = 0; o < 2; ++o) {
        const double expect =
            w2[o * 4 + 0] * h[0] + w2[o * 4 + 1] * h[1] + w2[o * 4 + 2] * h[2] +
            w2[o * 4 + 3] * h[3] + b2[o];
        EXPECT_DOUBLE_EQ(out[o], expect);
    }
}

TEST(Forward, DimensionMismatchIsConfigError) {
    NetworkSpec spec;
    spec.layers = {DenseSpec{3, 4, Activation::Tanh}, DenseSpec{5, 2, Activation::Linear}};
    EXPECT_THROW(Network net(spec), ConfigError);

    NetworkSpec ok;
    ok.layers = {DenseSpec{3, 2, Activation::Linear}};
    Network net(ok);
    EXPECT_THROW(net.forward(std::vector<double>{1.0}), ConfigError);
}

TEST(Forward, DeterministicGivenParamsAndInput) {
    NetworkSpec spec;
    spec.seed = 7;
    spec.layers = {DenseSpec{4, 8, Activation::Tanh}, DenseSpec{8, 2, Activation::Linear}};
    Network net(spec);
    const std::vector<double> input = {0.1, 0.2, 0.3, 0.4};
    EXPECT_EQ(net.forward(input), net.forward(input));
}

TEST(Backward, ChainRuleByHand) {
    auto net = dense_net(1, 1, Activation::Linear, {2.0}, {0.0});
    net.forward(std::vector<double>{3.0});
    net.backward(std::vector<double>{1.0});  // loss = output
    EXPECT_DOUBLE_EQ(net.params()[0].grad[0], 3.0);  // dL/dw
    EXPECT_DOUBLE_EQ(net.params()[1].grad[0], 1.0);  // dL/db
}

TEST(Backward, ZeroLossGradGivesZeroGrads) {
    NetworkSpec spec;
    spec.seed = 3;
    spec.layers = {DenseSpec{3, 5, Activation::Tanh}, DenseSpec{5, 2, Activation::Sigmoid}};
    Network net(spec);
    net.forward(std::vector<double>{0.5, -0.5, 0.25});
    net.backward(std::vector<double>{0.0, 0.0});
    for (const auto& p : net.params())
        for (double g : p.grad) EXPECT_EQ(g, 0.0);
}

TEST(Backward, WithoutForwardIsStateError) {
    NetworkSpec spec;
    spec.layers = {DenseSpec{2, 1, Activation::Linear}};
    Network net(spec);
    EXPECT_THROW(net.backward(std::vector<double>{1.0}), StateError);
}

// finite-difference oracle, step 1e-5
TEST(Backward, MatchesCentralDifferences) {
    NetworkSpec spec;
    spec.seed = 11;
    spec.layers = {DenseSpec{4, 6, Activation::Tanh}, DenseSpec{6, 3, Activation::Linear}};
    Network net(spec);
    Rng rng(5);
    std::vector<double> input(4);
    for (auto& v : input) v = rng.uniform(-1.0, 1.0);

    const auto analytic = analytic_gradients(net, input);
    const auto numeric = numeric_gradients(net, input, 1e-5);
    EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);
}

TEST(Backward, ConvMatchesCentralDifferences) {
    NetworkSpec spec;
    spec.seed = 13;
    spec.input_height = 6;
    spec.input_width = 6;
    spec.layers = {ConvSpec{2, 3, 3, 2, Activation::Tanh}, FlattenSpec{},
                   DenseSpec{12, 2, Activation::Linear}};
    Network net(spec);
    Rng rng(6);
    std::vector<double> input(2 * 6 * 6);
    for (auto& v : input) v = rng.uniform(-1.0, 1.0);
    EXPECT_LT(finite_diff_check(net, input, 1e-5), 1e-4);
}

TEST(OptimizerStep, ZeroGradIsIdentityAndMomentsDecay) {
    auto net = dense_net(1, 1, Activation::Linear, {1.5}, {0.25});
    AdamOptimizer opt({0.1});
    net.zero_grad();
    for (int i = 0; i < 5; ++i) opt.step(net.params());
    EXPECT_DOUBLE_EQ(net.params()[0].values[0], 1.5);
    EXPECT_DOUBLE_EQ(net.params()[1].values[0], 0.25);

    // a previously accumulated moment decays geometrically under zero grads
    AdamOptimizer opt2({0.0});
    net.params()[0].grad[0] = 1.0;
    opt2.step(net.params());
    const double m0 = std::abs(opt2.first_moments()[0][0]);
    net.zero_grad();
    double prev = m0;
    for (int i = 0; i < 10; ++i) {
        opt2.step(net.params());
        const double m = std::abs(opt2.first_moments()[0][0]);
        EXPECT_LT(m, prev);
        prev = m;
    }
    EXPECT_LT(prev, 0.4 * m0);
}

TEST(OptimizerStep, QuadraticConvergesToClosedFormMinimum) {
    // loss (p - 3)^2 has its minimum at p = 3
    std::vector<ParamTensor> params(1);
    params[0].name = "p";
    params[0].shape = {1};
    params[0].values = {0.0};
    params[0].grad = {0.0};
    AdamOptimizer opt({0.05});
    for (int i = 0; i < 500; ++i) {
        params[0].grad[0] = 2.0 * (params[0].values[0] - 3.0);
        opt.step(params);
    }
    EXPECT_LT(std::abs(params[0].values[0] - 3.0), 0.01);
}

TEST(OptimizerStep, SymmetricParamsGetIdenticalUpdates) {
    std::vector<ParamTensor> params(1);
    params[0].shape = {2};
    params[0].values = {0.7, 0.7};
    params[0].grad = {0.3, 0.3};
    AdamOptimizer opt({0.01});
    opt.step(params);
    EXPECT_DOUBLE_EQ(params[0].values[0], params[0].values[1]);
}

TEST(OptimizerStep, NonFiniteGradLeavesParamsUntouched) {
    std::vector<ParamTensor> params(1);
    params[0].shape = {2};
    params[0].values = {1.0, 2.0};
    params[0].grad = {0.1, std::numeric_limits<double>::quiet_NaN()};
    AdamOptimizer opt({0.01});
    EXPECT_THROW(opt.step(params), NumericError);
    EXPECT_DOUBLE_EQ(params[0].values[0], 1.0);
    EXPECT_DOUBLE_EQ(params[0].values[1], 2.0);
}

TEST(OptimizerStep, ZeroLearningRateIsIdentity) {
    auto net = dense_net(2, 2, Activation::Tanh, {0.1, 0.2, 0.3, 0.4}, {0.0, 0.0});
    const auto before = net.params()[0].values;
    AdamOptimizer opt({0.0});
    net.params()[0].grad = {1.0, -1.0, 0.5, 2.0};
    opt.step(net.params());
    EXPECT_EQ(net.params()[0].values, before);
}

TEST(FiniteDiffCheck, LinearNetIsExact) {
    NetworkSpec spec;
    spec.seed = 21;
    spec.layers = {DenseSpec{3, 2, Activation::Linear}};
    Network net(spec);
    const std::vector<double> input = {0.4, -0.2, 0.9};
    EXPECT_LT(finite_diff_check(net, input, 1e-5), 1e-8);
}

TEST(FiniteDiffCheck, TanhMlp482) {
    NetworkSpec spec;
    spec.seed = 22;
    spec.layers = {DenseSpec{4, 8, Activation::Tanh}, DenseSpec{8, 2, Activation::Linear}};
    Network net(spec);
    Rng rng(9);
    std::vector<double> input(4);
    for (auto& v : input) v = rng.uniform(-1.0, 1.0);
    EXPECT_LT(finite_diff_check(net, input, 1e-5), 1e-4);
}

TEST(FiniteDiffCheck, CorruptedGradientIsDetected) {
    NetworkSpec spec;
    spec.seed = 23;
    spec.layers = {DenseSpec{4, 8, Activation::Tanh}, DenseSpec{8, 2, Activation::Linear}};
    Network net(spec);
    Rng rng(10);
    std::vector<double> input(4);
    for (auto& v : input) v = rng.uniform(-1.0, 1.0);

    auto analytic = analytic_gradients(net, input);
    analytic[0][0] += 1.0;  // fault injection
    const auto numeric = numeric_gradients(net, input, 1e-5);
    EXPECT_GT(max_relative_error(analytic, numeric), 0.1);
}

TEST(FiniteDiffCheck, EpsOutOfRangeIsConfigError) {
    NetworkSpec spec;
    spec.layers = {DenseSpec{2, 1, Activation::Linear}};
    Network net(spec);
    const std::vector<double> input = {0.0, 0.0};
    EXPECT_THROW(finite_diff_check(net, input, 0.0), ConfigError);
    EXPECT_THROW(finite_diff_check(net, input, 0.1), ConfigError);
}

TEST(Checkpoint, NetworkRoundTripsLosslessly) {
    auto spec = conv_backbone_spec(4, 24, 24, 77);
    spec.layers.push_back(DenseSpec{conv_backbone_output(24, 24), 16, Activation::Linear});
    Network net(spec);

    Checkpoint ck;
    ck.meta["note"] = "roundtrip";
    ck.add_network("enc", net);
    const std::string path = testing::TempDir() + "/roundtrip.ckpt";
    ck.save(path);

    const auto loaded = Checkpoint::load(path);
    const auto net2 = loaded.network("enc");
    ASSERT_EQ(net2.params().size(), net.params().size());
    for (size_t i = 0; i < net.params().size(); ++i)
        EXPECT_EQ(net2.params()[i].values, net.params()[i].values);
    EXPECT_EQ(loaded.meta.at("note"), "roundtrip");
}

TEST(Network, ParamTensorInvariantsHold) {
    auto spec = mlp_spec(5, 16, 3, 99);
    Network net(spec);
    for (const auto& p : net.params()) {
        size_t n = 1;
        for (int d : p.shape) n *= static_cast<size_t>(d);
        EXPECT_EQ(p.values.size(), n);
        EXPECT_EQ(p.grad.size(), p.values.size());
    }
    EXPECT_TRUE(net.all_finite());
}
