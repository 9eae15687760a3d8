// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include <random>

#include <gtest/gtest.h>

#include "constraint_cases.hpp"
#include "oracles.hpp"
#include "siamct/errors.hpp"
#include "siamct/geometry.hpp"

namespace siamct::geometry {
namespace {

ObjectDescription desc(const char* s)
{
    return ObjectDescription::from_sentence(s);
}

TEST(Overlap, Examples)
{
    EXPECT_DOUBLE_EQ(compute_overlap({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
    EXPECT_DOUBLE_EQ(compute_overlap({0, 0, 10, 10}, {20, 20, 5, 5}), 0.0);
    EXPECT_DOUBLE_EQ(compute_overlap({0, 0, 10, 10}, {5, 0, 10, 10}), 0.5);
}

TEST(Overlap, IsAsymmetric)
{
    const BoundingBox big{0, 0, 10, 10};
    const BoundingBox small{2, 2, 2, 2};
    EXPECT_DOUBLE_EQ(compute_overlap(big, small), 1.0);
    EXPECT_DOUBLE_EQ(compute_overlap(small, big), 0.04);
}

TEST(Overlap, RejectsDegenerateBoxes)
{
    EXPECT_THROW(compute_overlap({0, 0, 0, 10}, {0, 0, 1, 1}), ValidationError);
    EXPECT_THROW(compute_overlap({0, 0, 1, 1}, {0, 0, 1, -2}), ValidationError);
    EXPECT_THROW(compute_overlap({0, 0, 1, 1}, {std::nan(""), 0, 1, 1}), ValidationError);
}

TEST(Overlap, MatchesRasterizationOracle)
{
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> pos(0, 30), size(1, 15);
    for (int i = 0; i < 1000; ++i) {
        const BoundingBox a{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
        const BoundingBox b{double(pos(rng)), double(pos(rng)), double(size(rng)), double(size(rng))};
        EXPECT_NEAR(compute_overlap(a, b), testing::raster_overlap(a, b), 1e-9);
    }
}

TEST(Overlap, RangeAndMonotonicity)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(0, 50), size(0.5, 20), grow(0, 5);
    for (int i = 0; i < 500; ++i) {
        const BoundingBox a{pos(rng), pos(rng), size(rng), size(rng)};
        const BoundingBox b{pos(rng), pos(rng), size(rng), size(rng)};
        const double o = compute_overlap(a, b);
        EXPECT_GE(o, 0.0);
        EXPECT_LE(o, 1.0);
        const double dl = grow(rng), dt = grow(rng);
        const BoundingBox bigger{a.left - dl, a.top - dt, a.width + dl + grow(rng), a.height + dt + grow(rng)};
        EXPECT_GE(compute_overlap(bigger, b), o - 1e-12);
    }
}

TEST(Overlap, OneExactlyWhenContained)
{
    EXPECT_DOUBLE_EQ(compute_overlap({0, 0, 10, 10}, {3, 3, 7, 7}), 1.0);
    EXPECT_LT(compute_overlap({0, 0, 10, 10}, {3, 3, 7.5, 7}), 1.0);
}

TEST(Tokens, NormalizationIsIdempotent)
{
    EXPECT_EQ(normalize("A Person, with dark-shorts!"), "a person with darkshorts");
    for (const char* s : {"  Hello   World ", "a, b; c.", "MiXeD CaSe", ""}) {
        EXPECT_EQ(normalize(normalize(s)), normalize(s));
    }
}

TEST(Subset, Examples)
{
    EXPECT_TRUE(description_subset(desc("a person with dark shorts"),
                                   desc("a person with dark shorts a green backpack and a white shirt")));
    EXPECT_TRUE(description_subset(desc("a red car"), desc("a red car")));
    EXPECT_FALSE(description_subset(desc("a green backpack"), desc("a person with dark shorts")));
}

TEST(Subset, CountsDuplicateWords)
{
    EXPECT_FALSE(description_subset(desc("a red car and a red bike"), desc("a red car and a bike")));
    EXPECT_TRUE(description_subset(desc("a car"), desc("a car and a bike")));
}

TEST(Subset, EmptyIsNeverASubset)
{
    EXPECT_FALSE(description_subset(desc(""), desc("anything at all")));
    EXPECT_FALSE(description_subset(desc(""), desc("")));
}

TEST(Subset, ReflexiveAndTransitive)
{
    const auto a = desc("a man");
    const auto b = desc("a man in a coat");
    const auto c = desc("a tall man in a long coat");
    EXPECT_TRUE(description_subset(a, a));
    EXPECT_TRUE(description_subset(a, b));
    EXPECT_TRUE(description_subset(b, c));
    EXPECT_TRUE(description_subset(a, c));
}

TEST(Constraint, BoundaryIsInclusive)
{
    const BoundingBox target{0, 0, 10, 10};
    EXPECT_EQ(constraint_satisfied(target, {{5, 0, 10, 10}, desc("a car")}, {}), 1);
    EXPECT_EQ(constraint_satisfied(target, {{5.1, 0, 10, 10}, desc("a car")}, {}), 0);
}

TEST(Constraint, SupersetRescuesDistantConstraint)
{
    const BoundingBox target{0, 0, 10, 10};
    const DescribedBox b{{9, 0, 10, 10}, desc("a person")};  // O = 0.1
    const std::vector<DescribedBox> others{{{-2, 0, 10, 10}, desc("a person with a bag")}};  // O = 0.8
    EXPECT_EQ(constraint_satisfied(target, b, others), 1);
    EXPECT_EQ(satisfied_by_superset(target, b.description, others), 1);
}

TEST(Constraint, HandEnumeratedCases)
{
    const BoundingBox target{0, 0, 10, 10};
    for (const auto& c : testing::constraint_cases()) {
        EXPECT_EQ(constraint_satisfied(target, {c.constraint, desc(c.constraint_sentence)}, c.others, c.threshold),
                  c.expected)
            << c.name;
    }
}

TEST(Constraint, ThresholdValidated)
{
    const DescribedBox b{{0, 0, 1, 1}, desc("x")};
    EXPECT_THROW(constraint_satisfied({0, 0, 1, 1}, b, {}, 0.0), ValidationError);
    EXPECT_THROW(constraint_satisfied({0, 0, 1, 1}, b, {}, 1.5), ValidationError);
    EXPECT_NO_THROW(constraint_satisfied({0, 0, 1, 1}, b, {}, 1.0));
}

TEST(Constraint, MonotoneInCandidates)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(0, 30), size(1, 12);
    const char* sentences[] = {"a car", "a red car", "a person", "a person with a bag", "a bag"};
    std::uniform_int_distribution<int> pick(0, 4);
    for (int trial = 0; trial < 300; ++trial) {
        const BoundingBox target{pos(rng), pos(rng), size(rng), size(rng)};
        const DescribedBox b{{pos(rng), pos(rng), size(rng), size(rng)}, desc(sentences[pick(rng)])};
        std::vector<DescribedBox> others;
        int prev = constraint_satisfied(target, b, others);
        for (int k = 0; k < 4; ++k) {
            others.push_back({{pos(rng), pos(rng), size(rng), size(rng)}, desc(sentences[pick(rng)])});
            const int now = constraint_satisfied(target, b, others);
            EXPECT_GE(now, prev);
            prev = now;
        }
    }
}

}  // namespace
}  // namespace siamct::geometry
