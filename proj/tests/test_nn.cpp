#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "aecl/nn/adam.h"
#include "aecl/nn/checkpoint.h"
#include "aecl/nn/gradcheck.h"
#include "aecl/nn/loss.h"
#include "aecl/nn/network.h"

using namespace aecl::nn;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    std::uniform_real_distribution<double> d(lo, hi);
    for (auto& v : t.data) v = d(rng);
    return t;
}

LossResult<double> half_sum_squares(const Tensor<double>& y) {
    LossResult<double> r;
    r.gradient = y;
    for (double v : y.data) r.value += 0.5 * v * v;
    return r;
}

// Direct 3x3 "same" convolution, independent of the im2col path.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, int filters) {
    const int n = x.shape[0], h = x.shape[1], wd = x.shape[2], c = x.shape[3];
    Tensor<double> y({n, h, wd, filters});
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < wd; ++j)
                for (int f = 0; f < filters; ++f) {
                    double acc = b.data[f];
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ii = i + ky - 1, jj = j + kx - 1;
                            if (ii < 0 || jj < 0 || ii >= h || jj >= wd) continue;
                            for (int k = 0; k < c; ++k)
                                acc += x.data[((s * h + ii) * wd + jj) * c + k] *
                                       w.data[((ky * 3 + kx) * c + k) * filters + f];
                        }
                    y.data[((s * h + i) * wd + j) * filters + f] = acc;
                }
    return y;
}

// Direct stride-2 transposed convolution: output (2i+ky, 2j+kx) gathers input (i, j).
Tensor<double> naive_conv_transpose(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                                    int filters) {
    const int n = x.shape[0], h = x.shape[1], wd = x.shape[2], c = x.shape[3];
    const int oh = 2 * h, ow = 2 * wd;
    Tensor<double> y({n, oh, ow, filters});
    for (int s = 0; s < n; ++s)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                for (int f = 0; f < filters; ++f) {
                    double acc = b.data[f];
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            if ((oy - ky) % 2 != 0 || (ox - kx) % 2 != 0) continue;
                            const int i = (oy - ky) / 2, j = (ox - kx) / 2;
                            if (i < 0 || j < 0 || i >= h || j >= wd) continue;
                            for (int k = 0; k < c; ++k)
                                acc += x.data[((s * h + i) * wd + j) * c + k] *
                                       w.data[k * 9 * filters + (ky * 3 + kx) * filters + f];
                        }
                    y.data[((s * oh + oy) * ow + ox) * filters + f] = acc;
                }
    return y;
}

void expect_near_all(const Tensor<double>& a, const Tensor<double>& b, double tol) {
    ASSERT_EQ(a.shape, b.shape);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data[i], b.data[i], tol) << "element " << i;
}

}  // namespace

TEST(NetworkForward, IdentityDenseIsIdentity) {
    Network<float> net({4}, {Dense{4, 4}}, 1);
    auto& p = net.mutable_parameters();
    p[0].fill(0.0f);
    for (int i = 0; i < 4; ++i) p[0].data[i * 4 + i] = 1.0f;
    p[1].fill(0.0f);
    const Tensor<float> x({2, 4}, {1, -2, 3, 0.5f, 7, 8, -9, 0});
    EXPECT_EQ(net.forward(x).data, x.data);
}

TEST(NetworkForward, MaxPoolTakesWindowMaxima) {
    Network<float> net({4, 4, 1}, {MaxPool2D{}}, 1);
    Tensor<float> x({1, 4, 4, 1});
    for (int i = 0; i < 16; ++i) x.data[i] = static_cast<float>(i + 1);
    const auto y = net.forward(x);
    EXPECT_EQ(y.shape, (Shape{1, 2, 2, 1}));
    EXPECT_EQ(y.data, (std::vector<float>{6, 8, 14, 16}));
}

TEST(NetworkForward, MaxPoolCeilModeKeepsOddEdge) {
    Network<float> net({3, 3, 1}, {MaxPool2D{}}, 1);
    const Tensor<float> x({1, 3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    EXPECT_EQ(net.forward(x).data, (std::vector<float>{5, 6, 8, 9}));
}

TEST(NetworkForward, SigmoidOfZeroIsHalf) {
    Network<float> net({6}, {Activation{ActivationKind::Sigmoid}}, 1);
    const auto y = net.forward(Tensor<float>({3, 6}));
    for (float v : y.data) EXPECT_EQ(v, 0.5f);
}

TEST(NetworkForward, ConvMatchesDirectConvolution) {
    std::mt19937_64 rng(3);
    Network<double> net({5, 4, 3}, {Conv2D{4}}, 9);
    const auto x = random_tensor({2, 5, 4, 3}, rng);
    expect_near_all(net.forward(x), naive_conv(x, net.parameters()[0], net.parameters()[1], 4), 1e-12);
}

TEST(NetworkForward, ConvTransposeMatchesDirectScatter) {
    std::mt19937_64 rng(4);
    Network<double> net({2, 3, 2}, {Conv2DTranspose{3}}, 9);
    auto& p = net.mutable_parameters();
    p[1] = random_tensor({3}, rng);
    const auto x = random_tensor({2, 2, 3, 2}, rng);
    expect_near_all(net.forward(x), naive_conv_transpose(x, net.parameters()[0], net.parameters()[1], 3), 1e-12);
}

TEST(NetworkForward, InputShapeMismatchIsRejected) {
    Network<float> net({7, 7, 3}, {Conv2D{2}}, 1);
    EXPECT_THROW(net.forward(Tensor<float>({1, 7, 6, 3})), std::invalid_argument);
    EXPECT_THROW(net.forward(Tensor<float>({7, 7, 3})), std::invalid_argument);
}

TEST(NetworkBuild, IncompatibleChainsFailAtBuildTime) {
    EXPECT_THROW(Network<float>({7, 7, 3}, {Dense{147, 4}}, 1), std::invalid_argument);
    EXPECT_THROW(Network<float>({10}, {Dense{9, 4}}, 1), std::invalid_argument);
    EXPECT_THROW(Network<float>({10}, {Conv2D{4}}, 1), std::invalid_argument);
    EXPECT_THROW(Network<float>({4, 4, 1}, {Crop2D{5, 4}}, 1), std::invalid_argument);
    EXPECT_NO_THROW(Network<float>({7, 7, 3}, {Flatten{}, Dense{147, 4}}, 1));
}

TEST(NetworkBuild, AutoencoderShapesRoundTrip) {
    Network<float> net({7, 7, 3},
                       {Conv2D{16}, Activation{}, MaxPool2D{}, Conv2D{8}, Activation{}, MaxPool2D{},
                        Conv2DTranspose{8}, Activation{}, Conv2DTranspose{16}, Activation{}, Crop2D{7, 7}, Conv2D{3},
                        Activation{ActivationKind::Sigmoid}},
                       1);
    EXPECT_EQ(net.shapes()[3], (Shape{4, 4, 16}));
    EXPECT_EQ(net.shapes()[6], (Shape{2, 2, 8}));
    EXPECT_EQ(net.shapes()[10], (Shape{8, 8, 16}));
    EXPECT_EQ(net.output_shape(), (Shape{7, 7, 3}));
}

TEST(NetworkBuild, SameSeedSameInitialization) {
    const std::vector<LayerSpec> spec{Conv2D{4}, Activation{}, Flatten{}, Dense{100, 3}};
    Network<float> a({5, 5, 2}, spec, 77), b({5, 5, 2}, spec, 77), c({5, 5, 2}, spec, 78);
    EXPECT_EQ(a.parameters(), b.parameters());
    EXPECT_NE(a.parameters(), c.parameters());
}

TEST(NetworkBackward, MeanOfLinearLayerGivesUniformBiasGradient) {
    Network<double> net({3}, {Dense{3, 4}}, 5);
    Tape<double> tape;
    const auto y = net.forward(Tensor<double>({1, 3}, {0.3, -0.1, 2.0}), tape);
    Tensor<double> dy(y.shape, 1.0 / 4.0);  // d mean / d y
    auto grads = net.zero_gradients();
    net.backward(tape, dy, grads);
    for (double g : grads[1].data) EXPECT_DOUBLE_EQ(g, 0.25);
}

TEST(NetworkBackward, ZeroOutputGradientGivesZeroParameterGradients) {
    Network<float> net({5, 5, 2}, {Conv2D{3}, Activation{}, MaxPool2D{}, Flatten{}, Dense{27, 2}}, 8);
    Tape<float> tape;
    const auto y = net.forward(Tensor<float>({2, 5, 5, 2}, 0.7f), tape);
    auto grads = net.zero_gradients();
    net.backward(tape, Tensor<float>(y.shape), grads);
    for (const auto& g : grads)
        for (float v : g.data) EXPECT_EQ(v, 0.0f);
}

TEST(NetworkBackward, ScalarChainRule) {
    Network<float> net({1}, {Dense{1, 1}}, 1);
    net.mutable_parameters()[0].data[0] = 0.5f;
    Tape<float> tape;
    net.forward(Tensor<float>({1, 1}, {3.0f}), tape);
    auto grads = net.zero_gradients();
    net.backward(tape, Tensor<float>({1, 1}, {2.0f}), grads);
    EXPECT_FLOAT_EQ(grads[0].data[0], 6.0f);
    EXPECT_FLOAT_EQ(grads[1].data[0], 2.0f);
}

TEST(NetworkBackward, StaleOrReusedTapesAreRejected) {
    Network<float> net({2}, {Dense{2, 2}}, 1);
    Network<float> other({2}, {Dense{2, 2}}, 1);
    const Tensor<float> x({1, 2}, {1.0f, 2.0f});
    const Tensor<float> dy({1, 2}, {1.0f, 1.0f});
    auto grads = net.zero_gradients();

    Tape<float> tape;
    net.forward(x, tape);
    net.backward(tape, dy, grads);
    EXPECT_THROW(net.backward(tape, dy, grads), std::logic_error);

    net.forward(x, tape);
    net.mutable_parameters();
    EXPECT_THROW(net.backward(tape, dy, grads), std::logic_error);

    other.forward(x, tape);
    EXPECT_THROW(net.backward(tape, dy, grads), std::logic_error);
}

TEST(Adam, ZeroGradientLeavesParametersAndAdvancesStep) {
    std::vector<Tensor<float>> params{Tensor<float>({3}, {1.0f, -2.0f, 0.5f})};
    const auto before = params;
    auto state = make_adam(params, 3e-4);
    adam_step(params, {Tensor<float>({3})}, state);
    EXPECT_EQ(params, before);
    EXPECT_EQ(state.t, 1);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
    // m1 = (1-b1) g, v1 = (1-b2) g^2; bias correction gives m/sqrt(v) = sign(g).
    for (float g : {0.37f, -5.0f}) {
        std::vector<Tensor<float>> params{Tensor<float>({4}, 1.0f)};
        auto state = make_adam(params, 1e-3);
        adam_step(params, {Tensor<float>({4}, g)}, state);
        for (float p : params[0].data) EXPECT_NEAR(p, 1.0f - 1e-3f * (g > 0 ? 1.0f : -1.0f), 1e-6f);
    }
}

TEST(Adam, DeterministicAndRejectsNonFinite) {
    std::vector<Tensor<float>> a{Tensor<float>({2}, {0.1f, 0.2f})};
    auto b = a;
    auto sa = make_adam(a), sb = make_adam(b);
    const std::vector<Tensor<float>> g{Tensor<float>({2}, {0.3f, -0.7f})};
    adam_step(a, g, sa);
    adam_step(b, g, sb);
    EXPECT_EQ(a, b);

    const std::vector<Tensor<float>> bad{Tensor<float>({2}, {NAN, 1.0f})};
    const auto snapshot = a;
    EXPECT_THROW(adam_step(a, bad, sa), std::domain_error);
    EXPECT_EQ(a, snapshot);
    EXPECT_EQ(sa.t, 1);
}

TEST(Adam, GradientNormClipping) {
    std::vector<Tensor<float>> g{Tensor<float>({2}, {3.0f, 4.0f})};
    EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
    EXPECT_NEAR(g[0].data[0], 0.6f, 1e-6f);
    EXPECT_NEAR(g[0].data[1], 0.8f, 1e-6f);
}

TEST(BceLoss, HalfAgainstHalfIsLn2) {
    const Tensor<float> p({2, 3}, 0.5f);
    EXPECT_NEAR(bce_loss(p, p).value, 0.69314718, 1e-6);
}

TEST(BceLoss, PerfectBinaryReconstructionIsNearZero) {
    const Tensor<float> t({1, 4}, {0.0f, 1.0f, 1.0f, 0.0f});
    EXPECT_LT(bce_loss(t, t).value, 1e-6);
}

TEST(BceLoss, GradientAtHalfWithUnitTarget) {
    const Tensor<double> p({1, 8}, 0.5);
    const Tensor<double> t({1, 8}, 1.0);
    const auto r = bce_loss(p, t);
    for (double g : r.gradient.data) EXPECT_DOUBLE_EQ(g, -2.0 / 8.0);
}

TEST(BceLoss, RejectsBadTargets) {
    EXPECT_THROW(bce_loss(Tensor<float>({1, 2}, 0.5f), Tensor<float>({1, 2}, {0.5f, 1.5f})), std::invalid_argument);
    EXPECT_THROW(bce_loss(Tensor<float>({1, 2}, 0.5f), Tensor<float>({1, 3}, 0.5f)), std::invalid_argument);
}

TEST(BceLoss, PerSampleMeansAverageToBatchLoss) {
    std::mt19937_64 rng(2);
    const auto p = random_tensor({5, 6}, rng, 0.05, 0.95);
    const auto t = random_tensor({5, 6}, rng, 0.0, 1.0);
    const auto per = bce_per_sample(p, t);
    double mean = 0.0;
    for (double v : per) mean += v / 5.0;
    EXPECT_NEAR(mean, bce_loss(p, t).value, 1e-12);
}

TEST(ExcessBce, ZeroForExactFractionalReconstruction) {
    const Tensor<double> t({2, 3}, {0.2, 0.5, 0.9, 0.0, 1.0, 0.4});
    for (double v : excess_bce_per_sample(t, t)) EXPECT_NEAR(v, 0.0, 1e-6);
    EXPECT_GT(bce_per_sample(t, t)[0], 0.5);
}

TEST(ExcessBce, BernoulliKlByHand) {
    // 0.2 ln(0.2 / 0.5) + 0.8 ln(0.8 / 0.5)
    const auto v = excess_bce_per_sample(Tensor<double>({1, 1}, 0.5), Tensor<double>({1, 1}, 0.2));
    EXPECT_NEAR(v[0], 0.1927448, 1e-6);
}

TEST(ExcessBce, MatchesBceOnBinaryTargets) {
    std::mt19937_64 rng(4);
    const auto p = random_tensor({3, 5}, rng, 0.05, 0.95);
    Tensor<double> t({3, 5});
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<double>(i % 2);
    const auto a = excess_bce_per_sample(p, t);
    const auto b = bce_per_sample(p, t);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(GradCheck, DenseStacksAgreeWithFiniteDifferences) {
    std::mt19937_64 rng(11);
    const ActivationKind acts[] = {ActivationKind::Relu, ActivationKind::Sigmoid, ActivationKind::Tanh};
    for (int trial = 0; trial < 20; ++trial) {
        const int in = 3 + trial % 4, hidden = 5 + trial % 3, out = 2 + trial % 2;
        Network<double> net({in}, {Dense{in, hidden}, Activation{acts[trial % 3]}, Dense{hidden, out},
                                   Activation{acts[(trial + 1) % 3]}},
                            static_cast<std::uint64_t>(trial));
        const auto report = grad_check(net, random_tensor({3, in}, rng), half_sum_squares);
        EXPECT_LT(report.max_relative_error, 1e-4) << "trial " << trial;
        EXPECT_GT(report.checked, 0u);
    }
}

TEST(GradCheck, ConvPoolSigmoidStacksAgreeWithFiniteDifferences) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        Network<double> net({5, 5, 2},
                            {Conv2D{3}, Activation{}, MaxPool2D{}, Conv2DTranspose{2}, Activation{},
                             Crop2D{5, 5}, Conv2D{2}, Activation{ActivationKind::Sigmoid}},
                            static_cast<std::uint64_t>(100 + trial));
        const auto x = random_tensor({2, 5, 5, 2}, rng);
        const auto target = random_tensor({2, 5, 5, 2}, rng, 0.0, 1.0);
        const auto report = grad_check(net, x, [&](const Tensor<double>& y) { return bce_loss(y, target); });
        EXPECT_LT(report.max_relative_error, 1e-3) << "trial " << trial;
        EXPECT_GT(report.checked, report.skipped_kinks);
    }
}

TEST(GradCheck, DegenerateZeroNetworkIsExact) {
    Network<double> net({1}, {Dense{1, 1}}, 1);
    net.mutable_parameters()[0].fill(0.0);
    const auto report = grad_check(net, Tensor<double>({1, 1}), [](const Tensor<double>& y) {
        return LossResult<double>{y.data[0], Tensor<double>(y.shape, 1.0)};
    });
    EXPECT_EQ(report.max_relative_error, 0.0);
    EXPECT_EQ(report.checked, 2u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Network<float> net({7, 7, 3},
                       {Conv2D{4}, Activation{}, MaxPool2D{}, Conv2DTranspose{2}, Crop2D{7, 7},
                        Activation{ActivationKind::Tanh}, Flatten{}, Dense{98, 5}},
                       21);
    std::stringstream buf;
    save_network(buf, net);
    const std::string bytes = buf.str();
    const auto loaded = load_network(buf);
    EXPECT_EQ(loaded.parameters(), net.parameters());
    EXPECT_EQ(loaded.shapes(), net.shapes());
    std::stringstream again;
    save_network(again, loaded);
    EXPECT_EQ(again.str(), bytes);
    EXPECT_EQ(bytes.substr(0, 4), "AENN");
}

TEST(Checkpoint, CorruptFilesAreRejected) {
    Network<float> net({3}, {Dense{3, 2}}, 1);
    std::stringstream buf;
    save_network(buf, net);
    const std::string bytes = buf.str();

    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(load_network(truncated), std::runtime_error);
    std::string bad = bytes;
    bad[0] = 'X';
    std::stringstream bad_magic(bad);
    EXPECT_THROW(load_network(bad_magic), std::runtime_error);
}
