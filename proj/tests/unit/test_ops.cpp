// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "siamct/errors.hpp"
#include "siamct/nn.hpp"
#include "siamct/ops.hpp"

namespace siamct::ops {
namespace {

using testing::random_tensor;

/// Relative gradient error of sum(f(inputs) * R) for a fixed random R.
double op_error(std::vector<Tensor> inputs, const std::function<Var(const std::vector<Var>&)>& f,
                std::uint64_t seed = 1)
{
    nn::ParameterSet params;
    std::vector<Var> vars;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        vars.push_back(params.add("in" + std::to_string(i), std::move(inputs[i])));
    }
    Var probe;
    auto loss = [&] {
        const Var y = f(vars);
        if (!probe.defined()) {
            probe = Var::constant(random_tensor(y.shape(), seed + 1000));
        }
        return sum(mul(y, probe));
    };
    const auto r = testing::check_gradients({&params}, loss, 1e-5, 1e-6);
    return r.max_rel_error;
}

constexpr double kTol = 1e-6;

TEST(OpsGrad, Elementwise)
{
    const Tensor a = random_tensor({3, 4}, 1), b = random_tensor({3, 4}, 2);
    EXPECT_LT(op_error({a, b}, [](auto& v) { return add(v[0], v[1]); }), kTol);
    EXPECT_LT(op_error({a, b}, [](auto& v) { return mul(v[0], v[1]); }), kTol);
    EXPECT_LT(op_error({a}, [](auto& v) { return scale(v[0], -2.5); }), kTol);
    EXPECT_LT(op_error({a}, [](auto& v) { return relu(v[0]); }), kTol);
    EXPECT_LT(op_error({a}, [](auto& v) { return tanh(v[0]); }), kTol);
    EXPECT_LT(op_error({a}, [](auto& v) { return sigmoid(v[0]); }), kTol);
    EXPECT_LT(op_error({a, random_tensor({4}, 3)}, [](auto& v) { return add_row(v[0], v[1]); }), kTol);
}

TEST(OpsGrad, MatrixOps)
{
    const Tensor x = random_tensor({3, 5}, 4), w = random_tensor({2, 5}, 5), bias = random_tensor({2}, 6);
    EXPECT_LT(op_error({x, random_tensor({5, 2}, 7)}, [](auto& v) { return matmul(v[0], v[1]); }), kTol);
    EXPECT_LT(op_error({x, w, bias}, [](auto& v) { return linear(v[0], v[1], v[2]); }), kTol);
    EXPECT_LT(op_error({x, w}, [](auto& v) { return linear(v[0], v[1], Var{}); }), kTol);
    EXPECT_LT(op_error({x}, [](auto& v) { return transpose(v[0]); }), kTol);
    EXPECT_LT(op_error({x}, [](auto& v) { return reshape(v[0], {5, 3}); }), kTol);
    EXPECT_LT(op_error({x}, [](auto& v) { return slice_cols(v[0], 1, 3); }), kTol);
    EXPECT_LT(op_error({x, random_tensor({3, 2}, 8)}, [](auto& v) { return concat_cols({v[0], v[1]}); }), kTol);
    EXPECT_LT(op_error({random_tensor({2, 3, 3}, 9), random_tensor({1, 3, 3}, 10)},
                       [](auto& v) { return concat_leading({v[0], v[1]}); }),
              kTol);
}

TEST(OpsGrad, SoftmaxAndNorm)
{
    const Tensor x = random_tensor({3, 5}, 11, 2.0);
    EXPECT_LT(op_error({x}, [](auto& v) { return softmax_rows(v[0]); }), kTol);
    const std::vector<std::uint8_t> keep{1, 1, 0, 1, 0};
    EXPECT_LT(op_error({x}, [&](auto& v) { return softmax_rows(v[0], keep); }), kTol);
    EXPECT_LT(op_error({x, random_tensor({5}, 12), random_tensor({5}, 13)},
                       [](auto& v) { return layer_norm_rows(v[0], v[1], v[2]); }),
              kTol);
}

TEST(OpsGrad, Convolutions)
{
    const Tensor x = random_tensor({4, 7, 6}, 14);
    ConvSpec s;
    s.kernel_h = 3;
    s.kernel_w = 2;
    s.stride_h = 2;
    s.pad_h = 1;
    s.pad_w = 1;
    EXPECT_LT(op_error({x, random_tensor({3, 4, 3, 2}, 15), random_tensor({3}, 16)},
                       [&](auto& v) { return conv2d(v[0], v[1], v[2], s); }),
              kTol);
    s.groups = 2;
    EXPECT_LT(op_error({x, random_tensor({4, 2, 3, 2}, 17), Tensor({4}, 0.1)},
                       [&](auto& v) { return conv2d(v[0], v[1], v[2], s); }),
              kTol);
    const Tensor sig = random_tensor({4, 9}, 18);
    EXPECT_LT(op_error({sig, random_tensor({6, 2, 3}, 19), random_tensor({6}, 20)},
                       [](auto& v) { return conv1d(v[0], v[1], v[2], 3, 1, 2); }),
              kTol);
}

TEST(OpsGrad, PoolingAndResampling)
{
    const Tensor x = random_tensor({2, 7, 7}, 21);
    EXPECT_LT(op_error({x}, [](auto& v) { return max_pool2d(v[0], 3, 3, 2, 2); }), kTol);
    EXPECT_LT(op_error({random_tensor({3, 8}, 22)}, [](auto& v) { return max_pool1d(v[0], 2, 2); }), kTol);
    const Tensor rows = adaptive_pool_matrix(7, 3), cols = bilinear_matrix(7, 10);
    EXPECT_LT(op_error({x}, [&](auto& v) { return resample_spatial(v[0], rows, cols); }), kTol);
    EXPECT_LT(op_error({x}, [](auto& v) { return mean_spatial(v[0]); }), kTol);
    EXPECT_LT(op_error({x, random_tensor({2}, 23)}, [](auto& v) { return scale_channels(v[0], v[1]); }), kTol);
}

TEST(OpsGrad, BinaryCrossEntropy)
{
    for (double label : {0.0, 1.0}) {
        EXPECT_LT(op_error({random_tensor({1}, 24)},
                           [&](auto& v) { return bce(sigmoid(v[0]), label); }),
                  kTol);
    }
}

// ---------------------------------------------------------------------------

TEST(Ops, SoftmaxMaskedColumnsGetZero)
{
    const Var x = Var::constant(random_tensor({4, 6}, 30, 3.0));
    const std::vector<std::uint8_t> keep{1, 0, 1, 1, 0, 0};
    const Var p = softmax_rows(x, keep);
    for (std::size_t r = 0; r < 4; ++r) {
        double total = 0;
        for (std::size_t c = 0; c < 6; ++c) {
            total += p.value().at(r, c);
            if (!keep[c]) {
                EXPECT_EQ(p.value().at(r, c), 0.0);
            }
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Ops, SoftmaxStableForLargeInputs)
{
    const Var p = softmax_rows(Var::constant(Tensor({1, 3}, std::vector<double>{1000, 1000, -1000})));
    EXPECT_NEAR(p.value()[0], 0.5, 1e-12);
    EXPECT_EQ(p.value()[2], 0.0);
}

Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& s)
{
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), O = w.dim(0);
    const std::size_t cg = C / s.groups, og = O / s.groups;
    const std::size_t Ho = (H + 2 * s.pad_h - s.kernel_h) / s.stride_h + 1;
    const std::size_t Wo = (W + 2 * s.pad_w - s.kernel_w) / s.stride_w + 1;
    Tensor y({O, Ho, Wo});
    for (std::size_t o = 0; o < O; ++o) {
        const std::size_t g = o / og;
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
                double acc = b.size() ? b[o] : 0.0;
                for (std::size_t c = 0; c < cg; ++c) {
                    for (std::size_t u = 0; u < s.kernel_h; ++u) {
                        for (std::size_t v = 0; v < s.kernel_w; ++v) {
                            const long r = static_cast<long>(i * s.stride_h + u) - static_cast<long>(s.pad_h);
                            const long q = static_cast<long>(j * s.stride_w + v) - static_cast<long>(s.pad_w);
                            if (r < 0 || q < 0 || r >= static_cast<long>(H) || q >= static_cast<long>(W)) {
                                continue;
                            }
                            const double wv =
                                w.data[((o * cg + c) * s.kernel_h + u) * s.kernel_w + v];
                            acc += wv * x.at(g * cg + c, static_cast<std::size_t>(r), static_cast<std::size_t>(q));
                        }
                    }
                }
                y.at(o, i, j) = acc;
            }
        }
    }
    return y;
}

TEST(Ops, Conv2dMatchesDirectLoops)
{
    ConvSpec s;
    s.kernel_h = 3;
    s.kernel_w = 3;
    s.stride_h = 2;
    s.stride_w = 1;
    s.pad_h = 1;
    s.pad_w = 2;
    for (std::size_t groups : {1u, 3u}) {
        s.groups = groups;
        const Tensor x = random_tensor({6, 9, 8}, 31);
        const Tensor w = random_tensor({6, 6 / groups, 3, 3}, 32);
        const Tensor b = random_tensor({6}, 33);
        const Var y = conv2d(Var::constant(x), Var::constant(w), Var::constant(b), s);
        const Tensor ref = naive_conv2d(x, w, b, s);
        ASSERT_EQ(y.shape(), ref.shape);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            EXPECT_NEAR(y.value()[i], ref[i], 1e-10);
        }
    }
}

TEST(Ops, MaxPoolShapeAndValues)
{
    Tensor x({1, 4, 4});
    std::iota(x.data.begin(), x.data.end(), 0.0);
    const Var y = max_pool2d(Var::constant(x), 2, 2, 2, 2);
    EXPECT_EQ(y.shape(), (Shape{1, 2, 2}));
    EXPECT_EQ(y.value().data, (std::vector<double>{5, 7, 13, 15}));
    EXPECT_EQ(max_pool2d(Var::constant(Tensor({2, 31, 31})), 3, 3, 2, 2).shape(), (Shape{2, 15, 15}));
}

TEST(Ops, ResamplingMatrices)
{
    const Tensor a = adaptive_pool_matrix(6, 3);
    for (std::size_t r = 0; r < 3; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 6; ++c) {
            s += a.at(r, c);
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    EXPECT_EQ(a.at(0, 0), 0.5);
    EXPECT_EQ(a.at(0, 2), 0.0);
    const Tensor b = bilinear_matrix(3, 5);
    EXPECT_EQ(b.at(0, 0), 1.0);
    EXPECT_EQ(b.at(4, 2), 1.0);
    EXPECT_NEAR(b.at(1, 0), 0.5, 1e-12);
    EXPECT_NEAR(b.at(1, 1), 0.5, 1e-12);
}

TEST(Ops, BceValues)
{
    EXPECT_NEAR(bce(Var::constant(Tensor::scalar(0.5)), 1.0).item(), std::log(2.0), 1e-12);
    EXPECT_NEAR(bce(Var::constant(Tensor::scalar(0.9)), 0.0).item(), 2.302585, 1e-6);
    EXPECT_TRUE(std::isfinite(bce(Var::constant(Tensor::scalar(1.0)), 0.0).item()));
}

TEST(Ops, DropoutIdentityAtZero)
{
    std::mt19937_64 rng(1);
    const Tensor x = random_tensor({3, 3}, 40);
    EXPECT_EQ(dropout(Var::constant(x), 0.0, rng).value().data, x.data);
    const Var d = dropout(Var::constant(Tensor({1, 10000}, 1.0)), 0.25, rng);
    double mean = 0;
    for (double v : d.value().data) {
        EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12);
        mean += v / 10000;
    }
    EXPECT_NEAR(mean, 1.0, 0.05);
}

TEST(Ops, ShapeMismatchThrows)
{
    EXPECT_THROW(add(Var::constant(Tensor({2, 3})), Var::constant(Tensor({3, 2}))), ShapeError);
    EXPECT_THROW(matmul(Var::constant(Tensor({2, 3})), Var::constant(Tensor({2, 3}))), ShapeError);
}

TEST(Autograd, NoGradGuardDropsGraph)
{
    nn::ParameterSet p;
    const Var w = p.add("w", random_tensor({2}, 41));
    {
        ag::NoGradGuard g;
        EXPECT_FALSE(ag::grad_enabled());
        EXPECT_FALSE(sum(mul(w, w)).requires_grad());
    }
    EXPECT_TRUE(ag::grad_enabled());
    sum(mul(w, w)).backward();
    EXPECT_NEAR(w.grad()[0], 2 * w.value()[0], 1e-12);
}

TEST(Autograd, SharedSubexpressionAccumulates)
{
    nn::ParameterSet p;
    const Var w = p.add("w", Tensor({1}, 3.0));
    const Var y = mul(w, w);
    sum(add(y, mul(y, w))).backward();  // w^2 + w^3
    EXPECT_NEAR(w.grad()[0], 2 * 3 + 3 * 9, 1e-12);
}

}  // namespace
}  // namespace siamct::ops
