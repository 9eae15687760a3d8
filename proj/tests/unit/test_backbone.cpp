// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "siamct/backbone.hpp"
#include "siamct/container.hpp"
#include "siamct/errors.hpp"

namespace siamct::backbone {
namespace {

using testing::random_tensor;

std::filesystem::path temp_file(const char* name)
{
    return std::filesystem::temp_directory_path() / name;
}

TEST(ToyBackbone, FullScaleShape)
{
    const auto cfg = ToyBackboneConfig::full();
    EXPECT_EQ(cfg.input_size, 255u);
    EXPECT_EQ(cfg.output_size(), 31u);
    const ToyBackbone b(cfg);
    EXPECT_EQ(b.output_shape(), (Shape{768, 31, 31}));
    const Tensor f = b.extract(random_tensor({3, 255, 255}, 1));
    EXPECT_EQ(f.shape, (Shape{768, 31, 31}));
    EXPECT_TRUE(f.all_finite());
}

TEST(ToyBackbone, DeskScaleShape)
{
    const ToyBackbone b(ToyBackboneConfig::desk());
    EXPECT_EQ(b.output_shape(), (Shape{24, 11, 11}));
    EXPECT_EQ(b.extract(random_tensor({3, 95, 95}, 2)).shape, (Shape{24, 11, 11}));
}

TEST(ToyBackbone, ZeroImageGivesZeroMap)
{
    const ToyBackbone b(ToyBackboneConfig::desk());
    for (double v : b.extract(Tensor({3, 95, 95})).data) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ToyBackbone, SeededAndDeterministic)
{
    auto cfg = ToyBackboneConfig::desk();
    const Tensor crop = random_tensor({3, 95, 95}, 3);
    const ToyBackbone a(cfg), b(cfg);
    EXPECT_EQ(a.extract(crop).data, b.extract(crop).data);
    cfg.seed = 1;
    EXPECT_NE(a.extract(crop).data, ToyBackbone(cfg).extract(crop).data);
}

TEST(ToyBackbone, RejectsWrongInput)
{
    const ToyBackbone b(ToyBackboneConfig::desk());
    EXPECT_THROW(b.extract(Tensor({3, 96, 96})), ShapeError);
    auto tiny = ToyBackboneConfig::desk();
    tiny.input_size = 5;
    EXPECT_THROW(ToyBackbone{tiny}, ValidationError);
}

TEST(ToyBackbone, ForwardMatchesExtract)
{
    const ToyBackbone b(testing::mini_backbone(5));
    const Tensor crop = random_tensor({3, b.input_size(), b.input_size()}, 4);
    EXPECT_EQ(b.forward(ag::Var::constant(crop)).value().data, b.extract(crop).data);
}

class FullGraphGradient : public ::testing::TestWithParam<model::HeadKind> {};

// Small steps keep the central differences away from ReLU and max-pool
// switching points, so the whole graph can be checked at once.
TEST_P(FullGraphGradient, BackboneAndHead)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto g = testing::grad_case(GetParam(), seed);
        const auto r = testing::check_gradients({&g.backbone->params(), &g.head->params()},
                                                [&] { return g.full_loss(); }, 1e-5, 1e-6);
        EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst_parameter << ": "
                                         << r.worst_entry;
    }
}

INSTANTIATE_TEST_SUITE_P(Heads, FullGraphGradient,
                         ::testing::Values(model::HeadKind::dfg, model::HeadKind::dfg_no_att, model::HeadKind::ca,
                                           model::HeadKind::ca_ppm),
                         [](const auto& info) { return model::to_string(info.param); });

// ---------------------------------------------------------------------------

TEST(FeatureStore, RoundTrip)
{
    FeatureStore s;
    s.add("seq:1:2", 4, random_tensor({2, 3, 3}, 5));
    s.add("seq:1:2", 5, random_tensor({2, 3, 3}, 6));
    EXPECT_THROW(s.add("x", 1, Tensor({3, 3, 3})), ShapeError);
    const auto path = temp_file("siamct_features_test.bin");
    s.save(path);
    const auto back = FeatureStore::load(path);
    EXPECT_EQ(back.size(), 2u);
    EXPECT_TRUE(back.contains("seq:1:2", 5));
    EXPECT_FALSE(back.contains("seq:1:2", 6));
    const auto& a = back.get("seq:1:2", 4);
    ASSERT_EQ(a.shape, (Shape{2, 3, 3}));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a[i], s.get("seq:1:2", 4)[i], 1e-7);  // stored as float32
    }
    EXPECT_THROW(back.get("seq:1:2", 7), ValidationError);
    std::filesystem::remove(path);
}

TEST(Container, RoundTripBothDtypes)
{
    io::Container c;
    c.meta["kind"] = "test";
    c.add("a", random_tensor({2, 5}, 7));
    c.add("b", Tensor::scalar(0.1));
    const auto path = temp_file("siamct_container_test.bin");
    io::write_container(path, c, io::DType::f64);
    const auto exact = io::read_container(path);
    EXPECT_EQ(exact.meta["kind"], "test");
    EXPECT_EQ(exact.at("a").data, c.at("a").data);
    EXPECT_EQ(exact.at("a").shape, (Shape{2, 5}));
    io::write_container(path, c, io::DType::f32);
    const auto single = io::read_container(path);
    EXPECT_NEAR(single.at("b")[0], 0.1, 1e-7);
    EXPECT_NE(single.at("b")[0], 0.1);
    EXPECT_EQ(single.find("missing"), nullptr);
    EXPECT_THROW(c.add("a", Tensor({1})), ValidationError);
    std::filesystem::remove(path);
}

TEST(Container, RejectsForeignAndTruncatedFiles)
{
    const auto path = temp_file("siamct_container_bad.bin");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACONTAINER";
    }
    EXPECT_THROW(io::read_container(path), FormatError);

    io::Container c;
    c.add("a", random_tensor({50}, 8));
    io::write_container(path, c);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 16);
    EXPECT_THROW(io::read_container(path), FormatError);
    std::filesystem::remove(path);
}

}  // namespace
}  // namespace siamct::backbone
