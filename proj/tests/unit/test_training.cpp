// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "golden.hpp"
#include "siamct/errors.hpp"
#include "siamct/training.hpp"

namespace siamct::training {
namespace {

using testing::random_tensor;

std::filesystem::path temp_dir(const char* name)
{
    const auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

bool close_rel(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::abs(b);
}

TEST(Bce, Values)
{
    EXPECT_NEAR(bce_loss(0.5, 0), std::log(2.0), 1e-15);
    EXPECT_NEAR(bce_loss(0.5, 1), std::log(2.0), 1e-15);
    EXPECT_NEAR(bce_loss(0.9, 0), -std::log(0.1), 1e-12);
    EXPECT_NEAR(bce_loss(0.9, 0), 2.3026, 1e-4);
    EXPECT_LT(bce_loss(1.0 - 1e-12, 1), 1e-6);
    EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1)));
    EXPECT_NEAR(bce_loss(0.0, 1), -std::log(1e-7), 1e-9);
}

TEST(Schedule, GoldenTable)
{
    for (const auto& row : testing::kScheduleGolden) {
        EXPECT_TRUE(close_rel(sgd_lr(row.epoch, 15), row.sgd, testing::kScheduleRelTol))
            << "sgd epoch " << row.epoch << ": " << sgd_lr(row.epoch, 15);
        EXPECT_TRUE(close_rel(adam_lr(row.epoch), row.adam, testing::kScheduleRelTol))
            << "adam epoch " << row.epoch << ": " << adam_lr(row.epoch);
        EXPECT_EQ(learning_rate(OptimizerKind::sgd, row.epoch, 20), sgd_lr(row.epoch, 15));
    }
}

TEST(Schedule, NamedValues)
{
    EXPECT_EQ(sgd_lr(3, 15), 0.01);
    EXPECT_EQ(sgd_lr(6, 15), 0.03);
    EXPECT_EQ(sgd_lr(20, 15), 5e-4);
    EXPECT_EQ(sgd_lr(6, 1), 0.03);
    EXPECT_DOUBLE_EQ(adam_lr(1), 2.5e-5);
    EXPECT_DOUBLE_EQ(adam_lr(2), 5e-5);
    EXPECT_DOUBLE_EQ(adam_lr(3), 7.5e-5);
    EXPECT_EQ(adam_lr(7), 1e-4);
    EXPECT_DOUBLE_EQ(adam_lr(12), 2e-5);
}

TEST(Schedule, LogSpacingAndErrors)
{
    for (int e = 7; e <= 20; ++e) {
        EXPECT_NEAR(std::log(sgd_lr(e, 15)) - std::log(sgd_lr(e - 1, 15)), std::log(5e-4 / 0.03) / 14, 1e-12);
    }
    EXPECT_THROW(sgd_lr(0, 15), ValidationError);
    EXPECT_THROW(sgd_lr(21, 15), ValidationError);
    EXPECT_THROW(adam_lr(0), ValidationError);
    for (int e = 1; e <= 40; ++e) {
        EXPECT_GT(adam_lr(e), 0.0);
    }
}

TEST(Defaults, OptimizerAndBatchPerHead)
{
    const auto dfg = TrainConfig::defaults(model::HeadKind::dfg);
    EXPECT_EQ(dfg.optimizer, OptimizerKind::sgd);
    EXPECT_EQ(dfg.batch_size, 128u);
    const auto ca = TrainConfig::defaults(model::HeadKind::ca_ppm);
    EXPECT_EQ(ca.optimizer, OptimizerKind::adam);
    EXPECT_EQ(ca.batch_size, 64u);
    EXPECT_THROW(parse_optimizer("rmsprop"), ValidationError);
}

TEST(Optimizer, ZeroGradientLeavesParameters)
{
    for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
        nn::ParameterSet p;
        p.add("w", random_tensor({3, 4}, 1));
        p.add("b", random_tensor({4}, 2));
        const auto before_w = p.get("w").value().data;
        const auto before_b = p.get("b").value().data;
        p.zero_grad();
        auto opt = make_optimizer(kind);
        opt->step(p, 0.1);
        opt->step(p, 0.1);
        EXPECT_EQ(p.get("w").value().data, before_w);
        EXPECT_EQ(p.get("b").value().data, before_b);
    }
}

TEST(Optimizer, SgdMomentumRecurrence)
{
    nn::ParameterSet p;
    auto w = p.add("w", Tensor({1}, 1.0));
    SgdMomentum opt(0.9);
    w.mutable_grad()[0] = 2.0;
    opt.step(p, 0.1);  // v = 2, w = 1 - 0.2
    EXPECT_DOUBLE_EQ(w.value()[0], 0.8);
    w.mutable_grad()[0] = 1.0;
    opt.step(p, 0.1);  // v = 1.8 + 1, w = 0.8 - 0.28
    EXPECT_DOUBLE_EQ(w.value()[0], 0.52);
}

TEST(Optimizer, AdamFirstStepIsLearningRate)
{
    nn::ParameterSet p;
    auto w = p.add("w", Tensor({2}, std::vector<double>{1.0, -1.0}));
    Adam opt;
    w.mutable_grad()[0] = 0.3;
    w.mutable_grad()[1] = -7.0;
    opt.step(p, 0.01);
    EXPECT_NEAR(w.value()[0], 0.99, 1e-9);
    EXPECT_NEAR(w.value()[1], -0.99, 1e-9);
}

TEST(Checkpoint, RoundTripGivesIdenticalScores)
{
    const auto dir = temp_dir("siamct_ckpt_test");
    const auto batch = testing::synthetic_batch(2, 3);
    for (auto kind : {model::HeadKind::dfg, model::HeadKind::ca_ppm}) {
        auto head = model::make_head(kind, model::desk_config(kind));
        const auto path = dir / (model::to_string(kind) + ".bin");
        save_checkpoint(path, *head, 42, "finetune", 3, {{"note", "x"}});
        const auto ck = load_checkpoint(path);
        EXPECT_EQ(ck.head->kind(), kind);
        EXPECT_EQ(ck.seed, 42u);
        EXPECT_EQ(ck.stage, "finetune");
        EXPECT_EQ(ck.epoch, 3);
        EXPECT_EQ(ck.run_info["note"], "x");
        for (const auto& s : batch) {
            EXPECT_EQ(predict(*head, s), predict(*ck.head, s));
        }
        auto other = model::make_head(kind, model::desk_config(kind));
        load_parameters(*other, path);
        EXPECT_EQ(predict(*other, batch[0]), predict(*head, batch[0]));
    }
    auto dfg = model::make_head(model::HeadKind::dfg, model::desk_config(model::HeadKind::dfg));
    EXPECT_THROW(load_parameters(*dfg, dir / "ca_ppm.bin"), FormatError);
    std::filesystem::remove_all(dir);
}

TEST(TrainStep, DivergenceGuard)
{
    auto head = model::make_head(model::HeadKind::dfg, model::desk_config(model::HeadKind::dfg));
    head->params().get("readout.bias").mutable_value()[0] = std::nan("");
    auto opt = make_optimizer(OptimizerKind::sgd);
    std::mt19937_64 rng(1);
    const auto batch = testing::synthetic_batch(1, 1);
    EXPECT_THROW(train_step(*head, *opt, batch, 0.01, rng), TrainingDiverged);
    EXPECT_THROW(train_step(*head, *opt, {}, 0.01, rng), ValidationError);
}

TEST(TrainStep, OverfitsFixedBatch)
{
    const auto batch = testing::synthetic_batch(4, 1);
    auto head = model::make_head(model::HeadKind::dfg, model::desk_config(model::HeadKind::dfg));
    auto opt = make_optimizer(OptimizerKind::sgd);
    std::mt19937_64 rng(7);
    double loss = 0;
    for (int step = 0; step < 500; ++step) {
        loss = train_step(*head, *opt, batch, 0.01, rng);
    }
    EXPECT_LT(loss, 0.05);
}

// Sequences whose feature maps carry the label in their sign pattern.
struct SeparableData {
    datasets::SequenceManifest manifest;
    backbone::FeatureStore store;
    text::HashEmbeddingProvider words{0, 32};
};

SeparableData separable(const Shape& shape)
{
    SeparableData d;
    const Tensor pattern = random_tensor(shape, 100);
    for (int s = 0; s < 6; ++s) {
        datasets::ConstraintSequence seq;
        seq.sequence_id = "sep" + std::to_string(s);
        seq.source = "synthetic";
        seq.sentence = s % 2 ? "a red block" : "a blue block";
        for (int f = 1; f <= 12; ++f) {
            const int label = (f + s) % 3 == 0 ? 1 : 0;
            seq.frames.push_back({f, geometry::BoundingBox{0, 0, 1, 1}, std::nullopt, label});
            Tensor t = random_tensor(shape, 1000 + static_cast<std::uint64_t>(s * 100 + f), 0.3);
            for (std::size_t i = 0; i < t.size(); ++i) {
                t[i] += (label ? 1.0 : -1.0) * pattern[i];
            }
            d.store.add(seq.sequence_id, f, std::move(t));
        }
        d.manifest.sequences.push_back(std::move(seq));
    }
    return d;
}

TEST(Train, DeskSmokeLossDecreasesAndIsReproducible)
{
    const auto kind = model::HeadKind::dfg;
    const auto data = separable({24, 11, 11});
    const pipeline::StoredFeatureEncoder encoder(data.store, data.words);
    auto config = TrainConfig::defaults(kind);
    config.batch_size = 16;
    config.seed = 5;
    const Stage stage{"finetune", &data.manifest, &encoder, 6, 256, 100};

    const auto dir = temp_dir("siamct_train_test");
    auto head = model::make_head(kind, model::desk_config(kind));
    const auto history = train(*head, config, std::span(&stage, 1), dir);
    ASSERT_EQ(history.size(), 1u);
    const auto& ep = history[0].epochs;
    ASSERT_EQ(ep.size(), 6u);
    std::vector<double> smoothed;
    for (std::size_t i = 2; i < ep.size(); ++i) {
        smoothed.push_back((ep[i].mean_loss + ep[i - 1].mean_loss + ep[i - 2].mean_loss) / 3);
    }
    for (std::size_t i = 1; i < smoothed.size(); ++i) {
        EXPECT_LE(smoothed[i], smoothed[i - 1]) << "window " << i;
    }
    EXPECT_LT(ep.back().mean_loss, ep.front().mean_loss);
    EXPECT_EQ(ep[0].lr, 0.01);

    EXPECT_TRUE(std::filesystem::exists(dir / "loss_finetune.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_finetune_e06.bin"));
    const auto ck = load_checkpoint(dir / "checkpoint.bin");
    EXPECT_EQ(ck.epoch, 6);

    auto again = model::make_head(kind, model::desk_config(kind));
    const auto repeat = train(*again, config, std::span(&stage, 1));
    for (std::size_t i = 0; i < ep.size(); ++i) {
        EXPECT_EQ(repeat[0].epochs[i].mean_loss, ep[i].mean_loss);
    }
    std::filesystem::remove_all(dir);
}

TEST(Train, LossCsvFormat)
{
    const auto dir = temp_dir("siamct_loss_csv");
    write_loss_csv(dir / "l.csv", {{1, 0.5, 0.01}, {2, 0.25, 0.03}});
    std::ifstream in(dir / "l.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "epoch,mean_loss,lr");
    EXPECT_EQ(first, "1,0.5,0.01");
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace siamct::training
