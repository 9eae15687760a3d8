// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "siamct/errors.hpp"
#include "siamct/model_ca.hpp"

namespace siamct::model {
namespace {

using ag::Var;
using testing::random_tensor;

void fill(Head& h, const std::string& name, double v)
{
    for (double& x : h.params().get(name).mutable_value().data) {
        x = v;
    }
}

void zero_biases(Head& h)
{
    for (auto& [name, p] : h.params().entries()) {
        if (name.ends_with(".bias") || name.ends_with(".beta")) {
            for (double& x : p.mutable_value().data) {
                x = 0.0;
            }
        }
    }
}

CaConfig small(bool ppm)
{
    auto c = testing::mini_ca(ppm);
    c.dropout = 0.1;
    return c;
}

HeadInput mini_input(const CaConfig& c, std::uint64_t seed, std::size_t valid)
{
    Tensor s = random_tensor({c.sentence_length, c.embed_dim}, seed + 1);
    for (std::size_t r = valid; r < c.sentence_length; ++r) {
        for (std::size_t k = 0; k < c.embed_dim; ++k) {
            s.at(r, k) = 0.0;
        }
    }
    return {Var::constant(random_tensor({c.input_channels, c.spatial, c.spatial}, seed)), Var::constant(s), valid};
}

TEST(CaConfig, Columns)
{
    const auto p = CaConfig::plain();
    EXPECT_EQ(p.layers, 3u);
    EXPECT_EQ(p.hidden, 768u);
    EXPECT_EQ(p.heads, 6u);
    EXPECT_EQ(p.head_dim, 128u);
    EXPECT_DOUBLE_EQ(p.dropout, 0.1);
    EXPECT_EQ(p.feed_forward, 512u);
    EXPECT_EQ(p.reduction_output, 1024u);
    const auto q = CaConfig::ppm();
    EXPECT_EQ(q.layers, 3u);
    EXPECT_EQ(q.hidden, 1024u);
    EXPECT_EQ(q.heads, 8u);
    EXPECT_EQ(q.head_dim, 128u);
    EXPECT_DOUBLE_EQ(q.dropout, 0.1);
    EXPECT_EQ(q.reducer_channels(), 1024u);
    EXPECT_EQ(p.stage1_size(), 15u);
    EXPECT_EQ(p.image_positions(), 75u);
}

TEST(CaConfig, Validation)
{
    auto c = CaConfig::plain();
    c.heads = 5;
    EXPECT_THROW(c.validate(), ValidationError);
    auto q = CaConfig::ppm();
    q.ppm_scales = {1, 32};
    EXPECT_THROW(q.validate(), ValidationError);
    auto r = testing::mini_ca(false);
    EXPECT_EQ(CaConfig::from_json(r.to_json()).to_json(), r.to_json());
    EXPECT_THROW(make_head(HeadKind::ca_ppm, r.to_json()), ValidationError);
}

TEST(CaShapes, FullScalePlain)
{
    const CaHead h(CaConfig::plain());
    const Var x = Var::constant(random_tensor({768, 31, 31}, 1));
    EXPECT_EQ(h.preprocess_sentence(Var::constant(random_tensor({20, 300}, 2))).shape(), (Shape{20, 768}));
    EXPECT_EQ(h.reduce_stage1(x).shape(), (Shape{768, 15, 15}));
    EXPECT_EQ(h.reduce_image(x).shape(), (Shape{75, 768}));
}

TEST(CaShapes, FullScalePyramid)
{
    const CaHead h(CaConfig::ppm());
    const Tensor x = random_tensor({768, 31, 31}, 3);
    const Var aug = h.pyramid_pool(Var::constant(x));
    EXPECT_EQ(aug.shape(), (Shape{1024, 31, 31}));
    for (std::size_t i = 0; i < x.size(); ++i) {
        ASSERT_EQ(aug.value()[i], x[i]);
    }
    EXPECT_EQ(h.preprocess_sentence(Var::constant(random_tensor({20, 300}, 4))).shape(), (Shape{20, 1024}));
    EXPECT_EQ(h.reduce_image(aug).shape(), (Shape{75, 1024}));
}

TEST(CaSentence, ZeroInputAndPaddingRows)
{
    CaHead h(small(false));
    zero_biases(h);
    const Tensor zero = h.preprocess_sentence(Var::constant(Tensor({4, 12}))).value();
    for (double v : zero.data) {
        EXPECT_EQ(v, 0.0);
    }
    const auto in = mini_input(h.config(), 5, 2);
    const Tensor w = h.preprocess_sentence(in.sentence).value();
    for (std::size_t r = 2; r < 4; ++r) {
        for (std::size_t k = 0; k < h.config().hidden; ++k) {
            EXPECT_EQ(w.at(r, k), 0.0);
        }
    }
}

TEST(CaImage, ZeroInputZeroBiasGivesZero)
{
    CaHead h(small(false));
    zero_biases(h);
    const Tensor r = h.reduce_image(Var::constant(Tensor({8, 7, 7}))).value();
    for (double v : r.data) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(CaPyramid, ConstantInputSingleScale)
{
    auto c = small(true);
    c.ppm_scales = {1};
    c.ppm_width = 8;
    CaHead h(c);
    Tensor x({8, 7, 7});
    for (std::size_t ch = 0; ch < 8; ++ch) {
        for (std::size_t i = 0; i < 49; ++i) {
            x.data[ch * 49 + i] = 0.1 * static_cast<double>(ch) - 0.3;
        }
    }
    const Tensor aug = h.pyramid_pool(Var::constant(x)).value();
    ASSERT_EQ(aug.shape, (Shape{16, 7, 7}));
    const Tensor& w = h.params().get("ppm.scale1.weight").value();
    const Tensor& b = h.params().get("ppm.scale1.bias").value();
    for (std::size_t o = 0; o < 8; ++o) {
        double expected = b[o];
        for (std::size_t ch = 0; ch < 8; ++ch) {
            expected += w.data[o * 8 + ch] * (0.1 * static_cast<double>(ch) - 0.3);
        }
        expected = std::max(expected, 0.0);
        for (std::size_t i = 0; i < 49; ++i) {
            EXPECT_NEAR(aug.data[(8 + o) * 49 + i], expected, 1e-12);
        }
    }
}

TEST(CaPyramid, FourScalesAppendFourGroups)
{
    const CaHead h(small(true));
    const Tensor x = random_tensor({8, 7, 7}, 6);
    const Tensor aug = h.pyramid_pool(Var::constant(x)).value();
    EXPECT_EQ(aug.shape, (Shape{8 + 4 * 2, 7, 7}));
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(aug[i], x[i]);
    }
    EXPECT_THROW(CaHead(small(false)).pyramid_pool(Var::constant(x)), ValidationError);
}

// Scaled dot-product attention on two tokens, written out by hand.
TEST(CaAttention, SingleHeadMatchesHandComputation)
{
    CaConfig c;
    c.input_channels = 4;
    c.spatial = 5;
    c.sentence_length = 2;
    c.embed_dim = 4;
    c.layers = 1;
    c.hidden = 4;
    c.heads = 1;
    c.head_dim = 4;
    c.dropout = 0.0;
    c.feed_forward = 4;
    c.reduction_hidden = 4;
    c.reduction_output = 4;
    c.groups = 1;
    c.seed = 3;
    const CaHead h(c);
    const Tensor words = random_tensor({2, 4}, 7);
    const Tensor image = random_tensor({c.image_positions(), 4}, 8);
    const auto fused = h.mcan_forward(Var::constant(words), Var::constant(image), 2, false, nullptr);
    const auto& wq = h.params().get("encoder1.att.q.weight").value();
    const auto& bq = h.params().get("encoder1.att.q.bias").value();
    const auto& wk = h.params().get("encoder1.att.k.weight").value();
    const auto& bk = h.params().get("encoder1.att.k.bias").value();
    double q[2][4], k[2][4];
    for (int t = 0; t < 2; ++t) {
        for (int o = 0; o < 4; ++o) {
            q[t][o] = bq[o];
            k[t][o] = bk[o];
            for (int i = 0; i < 4; ++i) {
                q[t][o] += wq.at(o, i) * words.at(t, i);
                k[t][o] += wk.at(o, i) * words.at(t, i);
            }
        }
    }
    const AttentionMap* sa = nullptr;
    for (const auto& m : fused.attention) {
        if (m.block == "sa" && m.layer == 1 && m.head == 1) {
            sa = &m;
        }
    }
    ASSERT_NE(sa, nullptr);
    for (int t = 0; t < 2; ++t) {
        double logit[2];
        for (int u = 0; u < 2; ++u) {
            logit[u] = 0;
            for (int o = 0; o < 4; ++o) {
                logit[u] += q[t][o] * k[u][o];
            }
            logit[u] /= 2.0;  // sqrt(head_dim)
        }
        const double e0 = std::exp(logit[0]), e1 = std::exp(logit[1]);
        EXPECT_NEAR(sa->weights.at(t, 0), e0 / (e0 + e1), 1e-6);
        EXPECT_NEAR(sa->weights.at(t, 1), e1 / (e0 + e1), 1e-6);
    }
}

TEST(CaAttention, RowsNormalizedAndPaddingMasked)
{
    const CaHead h(small(true));
    for (std::size_t valid : {1u, 2u, 3u}) {
        const auto out = h.forward(mini_input(h.config(), 9, valid), false, nullptr);
        // 2 layers: one "sa" map and two decoder maps per head per layer.
        EXPECT_EQ(out.attention.size(), 2u * 3u * h.config().heads);
        for (const auto& m : out.attention) {
            for (std::size_t r = 0; r < m.weights.dim(0); ++r) {
                double total = 0;
                for (std::size_t col = 0; col < m.weights.dim(1); ++col) {
                    const double w = m.weights.at(r, col);
                    EXPECT_GE(w, 0.0);
                    total += w;
                    if (m.block != "sga_self" && col >= valid) {
                        EXPECT_EQ(w, 0.0) << m.block << " col " << col;
                    }
                }
                EXPECT_NEAR(total, 1.0, 1e-6);
            }
        }
    }
}

TEST(CaAttention, UnmaskedModeSpreadsMassOverPadding)
{
    auto c = small(false);
    c.mask_padding = false;
    const CaHead h(c);
    EXPECT_TRUE(h.word_mask(2).empty());
    const auto out = h.forward(mini_input(c, 10, 2), false, nullptr);
    double padding_mass = 0;
    for (const auto& m : out.attention) {
        if (m.block == "sa") {
            padding_mass += m.weights.at(0, 3);
        }
    }
    EXPECT_GT(padding_mass, 0.0);
}

TEST(CaReduce, MatchesStraightLineRecomputation)
{
    const CaHead h(small(false));
    const std::size_t d = h.config().hidden;
    const Tensor words = random_tensor({4, d}, 11);
    const Tensor image = random_tensor({h.config().image_positions(), d}, 12);
    const std::size_t valid = 3;
    const Tensor got = h.attentional_reduce(Var::constant(words), Var::constant(image), valid, false, nullptr).value();

    auto branch = [&](const std::string& name, const Tensor& x, std::size_t count) {
        const auto& w1 = h.params().get(name + ".fc1.weight").value();
        const auto& b1 = h.params().get(name + ".fc1.bias").value();
        const auto& w2 = h.params().get(name + ".fc2.weight").value();
        const auto& b2 = h.params().get(name + ".fc2.bias").value();
        const auto& wm = h.params().get(name + ".merge.weight").value();
        const auto& bm = h.params().get(name + ".merge.bias").value();
        const std::size_t hidden = w1.dim(0), out = wm.dim(0);
        std::vector<double> logits(count);
        for (std::size_t p = 0; p < count; ++p) {
            double l = b2[0];
            for (std::size_t j = 0; j < hidden; ++j) {
                double a = b1[j];
                for (std::size_t i = 0; i < d; ++i) {
                    a += w1.at(j, i) * x.at(p, i);
                }
                l += w2.at(0, j) * std::max(a, 0.0);
            }
            logits[p] = l;
        }
        double m = logits[0], z = 0;
        for (double l : logits) {
            m = std::max(m, l);
        }
        for (double& l : logits) {
            l = std::exp(l - m);
            z += l;
        }
        std::vector<double> result(out);
        for (std::size_t o = 0; o < out; ++o) {
            result[o] = bm[o];
            for (std::size_t i = 0; i < d; ++i) {
                double pooled = 0;
                for (std::size_t p = 0; p < count; ++p) {
                    pooled += logits[p] / z * x.at(p, i);
                }
                result[o] += wm.at(o, i) * pooled;
            }
        }
        return result;
    };
    const auto a = branch("reduce.words", words, valid);
    const auto b = branch("reduce.image", image, image.dim(0));
    ASSERT_EQ(got.size(), a.size());
    for (std::size_t o = 0; o < a.size(); ++o) {
        EXPECT_NEAR(got[o], a[o] + b[o], 1e-6);
    }
}

TEST(CaReduce, UniformLogitsAverageThenProject)
{
    CaHead h(small(false));
    fill(h, "reduce.words.fc2.weight", 0.0);
    fill(h, "reduce.image.fc2.weight", 0.0);
    fill(h, "reduce.image.merge.weight", 0.0);
    fill(h, "reduce.image.merge.bias", 0.0);
    const std::size_t d = h.config().hidden;
    const Tensor words = random_tensor({4, d}, 13);
    const Tensor got = h.attentional_reduce(Var::constant(words),
                                            Var::constant(random_tensor({h.config().image_positions(), d}, 14)), 4,
                                            false, nullptr)
                           .value();
    const auto& wm = h.params().get("reduce.words.merge.weight").value();
    for (std::size_t o = 0; o < got.size(); ++o) {
        double expected = 0;
        for (std::size_t i = 0; i < d; ++i) {
            double mean = 0;
            for (std::size_t p = 0; p < 4; ++p) {
                mean += words.at(p, i) / 4;
            }
            expected += wm.at(o, i) * mean;
        }
        EXPECT_NEAR(got[o], expected, 1e-12);
    }
}

TEST(CaPredict, ZeroReadoutGivesHalf)
{
    CaHead h(small(true));
    fill(h, "readout.weight", 0.0);
    EXPECT_EQ(h.forward(mini_input(h.config(), 15, 3), false, nullptr).score.item(), 0.5);
}

TEST(CaPredict, EvalPassesAreBitwiseIdentical)
{
    const CaHead h(small(false));
    const auto in = mini_input(h.config(), 16, 3);
    const double a = h.forward(in, false, nullptr).score.item();
    EXPECT_EQ(a, h.forward(in, false, nullptr).score.item());
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
    std::mt19937_64 rng(1);
    const double t1 = h.forward(in, true, &rng).score.item();
    const double t2 = h.forward(in, true, &rng).score.item();
    EXPECT_NE(t1, t2);
    EXPECT_THROW(h.forward(in, true, nullptr), ValidationError);
}

}  // namespace
}  // namespace siamct::model
