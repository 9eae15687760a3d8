// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/backbone.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "siamct/container.hpp"
#include "siamct/errors.hpp"

namespace siamct::backbone {

std::size_t ToyBackboneConfig::output_size() const
{
    std::size_t s = input_size;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (s < 3) {
            throw ValidationError(fmt::format("input size {} too small for {} stride-2 blocks", input_size,
                                              widths.size()));
        }
        s = (s - 3) / 2 + 1;
    }
    return s;
}

ToyBackboneConfig ToyBackboneConfig::full() { return {}; }

ToyBackboneConfig ToyBackboneConfig::desk()
{
    ToyBackboneConfig c;
    c.input_size = 95;
    c.widths = {8, 16, 16};
    c.out_channels = 24;
    return c;
}

ToyBackbone::ToyBackbone(const ToyBackboneConfig& config) : config_(config)
{
    config_.output_size();  // validates
    std::mt19937_64 rng(config_.seed);
    std::size_t in = 3;
    auto he = [&](const std::string& name, std::size_t out, const ops::ConvSpec& spec) {
        const double fan_in = static_cast<double>(in * spec.kernel_h * spec.kernel_w);
        nn::Conv2d conv;
        conv.spec = spec;
        conv.weight = params_.add(name + ".weight", nn::normal({out, in, spec.kernel_h, spec.kernel_w},
                                                               std::sqrt(2.0 / fan_in), rng));
        conv.bias = params_.add(name + ".bias", Tensor({out}));
        layers_.push_back(conv);
        in = out;
    };
    for (std::size_t i = 0; i < config_.widths.size(); ++i) {
        he(fmt::format("backbone.block{}", i), config_.widths[i], {3, 3, 2, 2, 0, 0, 1});
    }
    he("backbone.project", config_.out_channels, {3, 3, 1, 1, 1, 1, 1});
}

Shape ToyBackbone::output_shape() const
{
    const std::size_t s = config_.output_size();
    return {config_.out_channels, s, s};
}

ag::Var ToyBackbone::forward(const ag::Var& crop) const
{
    expect_shape(crop.value(), {3, config_.input_size, config_.input_size}, "backbone input");
    ag::Var x = crop;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i](x);
        if (i + 1 < layers_.size()) {
            x = ops::relu(x);
        }
    }
    return x;
}

Tensor ToyBackbone::extract(const Tensor& crop) const
{
    ag::NoGradGuard guard;
    return forward(ag::Var::constant(crop)).value();
}

std::string FeatureStore::key(const std::string& sequence_id, int frame_index)
{
    return fmt::format("{}/{}", sequence_id, frame_index);
}

FeatureStore FeatureStore::load(const std::filesystem::path& path)
{
    auto c = io::read_container(path);
    FeatureStore store;
    for (auto& [name, t] : c.arrays) {
        if (store.shape_.empty()) {
            store.shape_ = t.shape;
        } else if (t.shape != store.shape_) {
            throw FormatError(fmt::format("feature '{}' has shape {}, expected {}", name, shape_str(t.shape),
                                          shape_str(store.shape_)));
        }
        store.maps_.emplace(name, std::move(t));
    }
    return store;
}

void FeatureStore::save(const std::filesystem::path& path) const
{
    io::Container c;
    c.meta["kind"] = "features";
    for (const auto& [k, t] : maps_) {
        c.add(k, t);
    }
    io::write_container(path, c, io::DType::f32);
}

void FeatureStore::add(const std::string& sequence_id, int frame_index, Tensor features)
{
    if (features.rank() != 3) {
        throw ShapeError(fmt::format("feature map must be {{C, H, W}}, got {}", shape_str(features.shape)));
    }
    if (shape_.empty()) {
        shape_ = features.shape;
    } else {
        expect_shape(features, shape_, "feature map");
    }
    maps_[key(sequence_id, frame_index)] = std::move(features);
}

bool FeatureStore::contains(const std::string& sequence_id, int frame_index) const
{
    return maps_.contains(key(sequence_id, frame_index));
}

const Tensor& FeatureStore::get(const std::string& sequence_id, int frame_index) const
{
    const auto it = maps_.find(key(sequence_id, frame_index));
    if (it == maps_.end()) {
        throw ValidationError(fmt::format("no features for {}", key(sequence_id, frame_index)));
    }
    return it->second;
}

}  // namespace siamct::backbone
