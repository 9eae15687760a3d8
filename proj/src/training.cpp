// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "siamct/container.hpp"
#include "siamct/csv.hpp"
#include "siamct/errors.hpp"

namespace siamct::training {

double bce_loss(double probability, int label)
{
    const double p = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double sgd_lr(int epoch, int t_total)
{
    if (epoch < 1) {
        throw ValidationError(fmt::format("epochs are 1-based, got {}", epoch));
    }
    if (t_total < 1) {
        throw ValidationError(fmt::format("log schedule length must be >= 1, got {}", t_total));
    }
    if (epoch <= kSgdWarmupEpochs) {
        return kSgdWarmupRate;
    }
    const int k = epoch - kSgdWarmupEpochs - 1;
    if (k >= t_total) {
        throw ValidationError(fmt::format("epoch {} is past the schedule's last epoch {}", epoch,
                                          kSgdWarmupEpochs + t_total));
    }
    if (k == 0) {
        return kSgdStartRate;
    }
    if (k == t_total - 1) {
        return kSgdEndRate;
    }
    const double frac = static_cast<double>(k) / static_cast<double>(t_total - 1);
    return std::exp(std::log(kSgdStartRate) + frac * (std::log(kSgdEndRate) - std::log(kSgdStartRate)));
}

double adam_lr(int epoch)
{
    if (epoch < 1) {
        throw ValidationError(fmt::format("epochs are 1-based, got {}", epoch));
    }
    if (epoch <= 3) {
        return kAdamBaseRate * epoch / 4.0;
    }
    if (epoch <= 10) {
        return kAdamBaseRate;
    }
    return kAdamBaseRate * std::pow(0.2, (epoch - 10) / 2);
}

OptimizerKind parse_optimizer(const std::string& name)
{
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    throw ValidationError(fmt::format("unknown optimizer '{}' (expected sgd or adam)", name));
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

void SgdMomentum::step(nn::ParameterSet& params, double lr)
{
    auto& entries = params.entries();
    velocity_.resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& p = entries[i].second;
        if (!p.requires_grad() || p.grad().empty()) {
            continue;
        }
        auto& v = velocity_[i];
        v.resize(p.size(), 0.0);
        auto& w = p.mutable_value().data;
        const auto g = p.grad();
        for (std::size_t k = 0; k < w.size(); ++k) {
            v[k] = momentum_ * v[k] + g[k];
            w[k] -= lr * v[k];
        }
    }
}

void Adam::step(nn::ParameterSet& params, double lr)
{
    auto& entries = params.entries();
    m_.resize(entries.size());
    v_.resize(entries.size());
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto& p = entries[i].second;
        if (!p.requires_grad() || p.grad().empty()) {
            continue;
        }
        auto& m = m_[i];
        auto& v = v_[i];
        m.resize(p.size(), 0.0);
        v.resize(p.size(), 0.0);
        auto& w = p.mutable_value().data;
        const auto g = p.grad();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        }
    }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind)
{
    if (kind == OptimizerKind::sgd) {
        return std::make_unique<SgdMomentum>();
    }
    return std::make_unique<Adam>();
}

double learning_rate(OptimizerKind kind, int epoch, int epochs)
{
    if (kind == OptimizerKind::adam) {
        return adam_lr(epoch);
    }
    return sgd_lr(epoch, std::max(1, epochs - kSgdWarmupEpochs));
}

TrainConfig TrainConfig::defaults(model::HeadKind head)
{
    TrainConfig c;
    c.head = head;
    if (model::is_dfg(head)) {
        c.optimizer = OptimizerKind::sgd;
        c.batch_size = 128;
    } else {
        c.optimizer = OptimizerKind::adam;
        c.batch_size = 64;
    }
    return c;
}

model::HeadInput make_input(const pipeline::EncodedSample& sample)
{
    return {ag::Var::constant(sample.features), ag::Var::constant(sample.sentence.values), sample.sentence.valid_length};
}

model::HeadOutput predict_full(const model::Head& head, const pipeline::EncodedSample& sample)
{
    ag::NoGradGuard guard;
    return head.forward(make_input(sample), false, nullptr);
}

double predict(const model::Head& head, const pipeline::EncodedSample& sample)
{
    return predict_full(head, sample).score.item();
}

double train_step(model::Head& head, Optimizer& optimizer, std::span<const pipeline::EncodedSample> batch,
                  double lr, std::mt19937_64& rng)
{
    if (batch.empty()) {
        throw ValidationError("empty training batch");
    }
    head.params().zero_grad();
    const double inv = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const auto& sample : batch) {
        const auto out = head.forward(make_input(sample), true, &rng);
        const ag::Var loss = ops::bce(out.score, sample.label, kProbabilityClamp);
        if (!std::isfinite(loss.item())) {
            throw TrainingDiverged(fmt::format("non-finite loss on {} frame {}", sample.sequence_id,
                                               sample.frame_index));
        }
        total += loss.item();
        ops::scale(loss, inv).backward();
    }
    optimizer.step(head.params(), lr);
    return total * inv;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& epochs)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
    out << "epoch,mean_loss,lr\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << csv::number(e.mean_loss) << ',' << csv::number(e.lr) << '\n';
    }
}

std::vector<StageHistory> train(model::Head& head, const TrainConfig& config, std::span<const Stage> stages,
                                const std::filesystem::path& out_dir)
{
    if (config.batch_size == 0) {
        throw ValidationError("batch size must be positive");
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
    }
    std::vector<StageHistory> history;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto& stage = stages[s];
        if (stage.manifest == nullptr || stage.encoder == nullptr || stage.epochs < 1) {
            throw ValidationError(fmt::format("stage '{}' needs a manifest, an encoder and >= 1 epoch", stage.name));
        }
        auto optimizer = make_optimizer(config.optimizer);
        StageHistory h{stage.name, {}};
        for (int epoch = 1; epoch <= stage.epochs; ++epoch) {
            const std::uint64_t epoch_seed = datasets::mix_seed(config.seed, s * 100000 + static_cast<std::size_t>(epoch));
            const double lr = config.lr_scale * learning_rate(config.optimizer, epoch, stage.epochs);
            const auto samples =
                datasets::sample_epoch(*stage.manifest, stage.samples_per_epoch, stage.frame_window, epoch_seed);
            std::mt19937_64 rng(datasets::mix_seed(epoch_seed, 1));
            double total = 0.0;
            std::vector<pipeline::EncodedSample> batch;
            for (std::size_t i = 0; i < samples.size(); i += config.batch_size) {
                batch.clear();
                const std::size_t end = std::min(samples.size(), i + config.batch_size);
                for (std::size_t k = i; k < end; ++k) {
                    batch.push_back(stage.encoder->encode(samples[k]));
                }
                total += train_step(head, *optimizer, batch, lr, rng) * static_cast<double>(batch.size());
            }
            h.epochs.push_back({epoch, total / static_cast<double>(samples.size()), lr});
            if (!out_dir.empty()) {
                write_loss_csv(out_dir / fmt::format("loss_{}.csv", stage.name), h.epochs);
                save_checkpoint(out_dir / fmt::format("checkpoint_{}_e{:02d}.bin", stage.name, epoch), head,
                                config.seed, stage.name, epoch, config.run_info);
                save_checkpoint(out_dir / "checkpoint.bin", head, config.seed, stage.name, epoch, config.run_info);
            }
        }
        history.push_back(std::move(h));
    }
    return history;
}

void save_checkpoint(const std::filesystem::path& path, const model::Head& head, std::uint64_t seed,
                     const std::string& stage, int epoch, const nlohmann::json& run_info)
{
    io::Container c;
    c.meta["kind"] = "checkpoint";
    c.meta["head"] = model::to_string(head.kind());
    c.meta["config"] = head.config_json();
    c.meta["seed"] = seed;
    c.meta["stage"] = stage;
    c.meta["epoch"] = epoch;
    c.meta["run"] = run_info;
    for (const auto& [name, v] : head.params().entries()) {
        c.add(name, v.value());
    }
    io::write_container(path, c);
}

namespace {

void copy_parameters(model::Head& head, const io::Container& c, const std::filesystem::path& path)
{
    for (auto& [name, v] : head.params().entries()) {
        const Tensor* t = c.find(name);
        if (t == nullptr) {
            throw FormatError(fmt::format("'{}' lacks parameter '{}'", path.string(), name));
        }
        if (t->shape != v.shape()) {
            throw FormatError(fmt::format("'{}': parameter '{}' has shape {}, expected {}", path.string(), name,
                                          shape_str(t->shape), shape_str(v.shape())));
        }
        v.mutable_value() = *t;
    }
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    const auto c = io::read_container(path);
    if (c.meta.value("kind", "") != "checkpoint") {
        throw FormatError(fmt::format("'{}' is not a checkpoint", path.string()));
    }
    Checkpoint ck;
    ck.head = model::make_head(model::parse_head_kind(c.meta.at("head").get<std::string>()), c.meta.at("config"));
    copy_parameters(*ck.head, c, path);
    ck.seed = c.meta.value("seed", std::uint64_t{0});
    ck.stage = c.meta.value("stage", "");
    ck.epoch = c.meta.value("epoch", 0);
    ck.run_info = c.meta.value("run", nlohmann::json::object());
    return ck;
}

void load_parameters(model::Head& head, const std::filesystem::path& path)
{
    copy_parameters(head, io::read_container(path), path);
}

}  // namespace siamct::training
