// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "siamct/datasets.hpp"
#include "siamct/head.hpp"
#include "siamct/pipeline.hpp"

namespace siamct::training {

inline constexpr double kProbabilityClamp = 1e-7;

/// -[y ln p + (1 - y) ln(1 - p)] with p clamped to [1e-7, 1 - 1e-7].
double bce_loss(double probability, int label);

inline constexpr int kSgdWarmupEpochs = 5;
inline constexpr double kSgdWarmupRate = 0.01;
inline constexpr double kSgdStartRate = 0.03;
inline constexpr double kSgdEndRate = 5e-4;

/// Epochs 1-5: 0.01. Epochs 6..5+t_total: log-linear from 0.03 down to 5e-4.
double sgd_lr(int epoch, int t_total);

inline constexpr double kAdamBaseRate = 1e-4;

/// Epochs 1-3 warm up by 1/4, 2/4, 3/4; 4-10 at 1e-4; then x0.2 every two epochs.
double adam_lr(int epoch);

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

class Optimizer {
public:
    virtual ~Optimizer() = default;
    /// Applies one update from the accumulated gradients.
    virtual void step(nn::ParameterSet& params, double lr) = 0;
};

/// v = momentum * v + g; w -= lr * v. No weight decay.
class SgdMomentum final : public Optimizer {
public:
    explicit SgdMomentum(double momentum = 0.9) : momentum_(momentum) {}
    void step(nn::ParameterSet& params, double lr) override;

private:
    double momentum_;
    std::vector<std::vector<double>> velocity_;
};

class Adam final : public Optimizer {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.98, double eps = 1e-9) : beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(nn::ParameterSet& params, double lr) override;

private:
    double beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind);

/// Learning rate for a 1-based epoch of a stage with `epochs` epochs.
double learning_rate(OptimizerKind kind, int epoch, int epochs);

struct TrainConfig {
    model::HeadKind head = model::HeadKind::dfg;
    OptimizerKind optimizer = OptimizerKind::sgd;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    /// Multiplies every scheduled rate; 1 reproduces the schedules exactly.
    double lr_scale = 1.0;
    /// Stored verbatim in every checkpoint (e.g. how features were encoded).
    nlohmann::json run_info = nlohmann::json::object();

    /// SGD with batch 128 for the DFG heads, Adam with batch 64 for CA.
    static TrainConfig defaults(model::HeadKind head);
};

struct Stage {
    std::string name;  // "pretrain_coco", "finetune", ...
    const datasets::SequenceManifest* manifest = nullptr;
    const pipeline::SampleEncoder* encoder = nullptr;
    int epochs = 1;
    std::size_t samples_per_epoch = 2048;
    int frame_window = 100;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
};

struct StageHistory {
    std::string name;
    std::vector<EpochRecord> epochs;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

model::HeadInput make_input(const pipeline::EncodedSample& sample);

/// Score in (0, 1) without recording a graph or using dropout.
double predict(const model::Head& head, const pipeline::EncodedSample& sample);
model::HeadOutput predict_full(const model::Head& head, const pipeline::EncodedSample& sample);

/// Forward/backward over one batch (loss averaged over the batch) followed
/// by an optimizer step. Returns the mean loss before the step.
double train_step(model::Head& head, Optimizer& optimizer, std::span<const pipeline::EncodedSample> batch,
                  double lr, std::mt19937_64& rng);

/// Runs the stages in order; every stage restarts its schedule and its
/// optimizer state. With a nonempty `out_dir`, writes loss_<stage>.csv and
/// a checkpoint per epoch (checkpoint_<stage>_eNN.bin plus checkpoint.bin).
std::vector<StageHistory> train(model::Head& head, const TrainConfig& config, std::span<const Stage> stages,
                                const std::filesystem::path& out_dir = {});

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& epochs);

/// Parameters, head kind and config, seed, stage and epoch in one container.
void save_checkpoint(const std::filesystem::path& path, const model::Head& head, std::uint64_t seed,
                     const std::string& stage, int epoch, const nlohmann::json& run_info = nlohmann::json::object());

struct Checkpoint {
    std::unique_ptr<model::Head> head;
    std::uint64_t seed = 0;
    std::string stage;
    int epoch = 0;
    nlohmann::json run_info;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies parameter values by name; every parameter of `head` must be present
/// with the same shape.
void load_parameters(model::Head& head, const std::filesystem::path& path);

}  // namespace siamct::training
