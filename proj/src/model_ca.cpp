// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/model_ca.hpp"

#include <cmath>

#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct::model {

CaConfig CaConfig::plain() { return {}; }

CaConfig CaConfig::ppm()
{
    CaConfig c;
    c.hidden = 1024;
    c.heads = 8;
    c.use_ppm = true;
    return c;
}

std::size_t CaConfig::reducer_channels() const
{
    return input_channels + (use_ppm ? ppm_scales.size() * ppm_width : 0);
}

std::size_t CaConfig::stage1_size() const
{
    if (spatial < 3) {
        throw ValidationError(fmt::format("feature maps of size {} are too small to reduce", spatial));
    }
    return (spatial - 3) / 2 + 1;
}

std::size_t CaConfig::image_positions() const
{
    const std::size_t n = stage1_size() * stage1_size();
    if (n < 3) {
        throw ValidationError(fmt::format("{} stage-1 positions are too few to pool", n));
    }
    return (n - 3) / 3 + 1;
}

void CaConfig::validate() const
{
    if (hidden != heads * head_dim) {
        throw ValidationError(fmt::format("hidden size {} must equal heads ({}) x head size ({})", hidden, heads,
                                          head_dim));
    }
    if (layers == 0 || heads == 0 || feed_forward == 0 || reduction_hidden == 0 || reduction_output == 0) {
        throw ValidationError("co-attention dimensions must be positive");
    }
    if (groups == 0 || hidden % groups != 0) {
        throw ValidationError(fmt::format("{} groups do not divide hidden size {}", groups, hidden));
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ValidationError("dropout must lie in [0, 1)");
    }
    if (use_ppm) {
        if (ppm_scales.empty() || ppm_width == 0) {
            throw ValidationError("pyramid pooling needs at least one scale and a positive width");
        }
        for (auto s : ppm_scales) {
            if (s == 0 || s > spatial) {
                throw ValidationError(fmt::format("pyramid scale {} is outside 1..{}", s, spatial));
            }
        }
    }
    image_positions();
}

nlohmann::json CaConfig::to_json() const
{
    return {{"input_channels", input_channels},
            {"spatial", spatial},
            {"sentence_length", sentence_length},
            {"embed_dim", embed_dim},
            {"layers", layers},
            {"hidden", hidden},
            {"heads", heads},
            {"head_dim", head_dim},
            {"dropout", dropout},
            {"feed_forward", feed_forward},
            {"reduction_hidden", reduction_hidden},
            {"reduction_output", reduction_output},
            {"groups", groups},
            {"use_ppm", use_ppm},
            {"ppm_scales", ppm_scales},
            {"ppm_width", ppm_width},
            {"mask_padding", mask_padding},
            {"seed", seed}};
}

CaConfig CaConfig::from_json(const nlohmann::json& j)
{
    CaConfig c = j.value("use_ppm", false) ? ppm() : plain();
    c.input_channels = j.value("input_channels", c.input_channels);
    c.spatial = j.value("spatial", c.spatial);
    c.sentence_length = j.value("sentence_length", c.sentence_length);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.layers = j.value("layers", c.layers);
    c.hidden = j.value("hidden", c.hidden);
    c.heads = j.value("heads", c.heads);
    c.head_dim = j.value("head_dim", c.head_dim);
    c.dropout = j.value("dropout", c.dropout);
    c.feed_forward = j.value("feed_forward", c.feed_forward);
    c.reduction_hidden = j.value("reduction_hidden", c.reduction_hidden);
    c.reduction_output = j.value("reduction_output", c.reduction_output);
    c.groups = j.value("groups", c.groups);
    c.ppm_scales = j.value("ppm_scales", c.ppm_scales);
    c.ppm_width = j.value("ppm_width", c.ppm_width);
    c.mask_padding = j.value("mask_padding", c.mask_padding);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

CaHead::Attention CaHead::make_attention(const std::string& name, std::mt19937_64& rng)
{
    const std::size_t d = config_.hidden;
    return {nn::make_linear(params_, name + ".q", d, d, rng), nn::make_linear(params_, name + ".k", d, d, rng),
            nn::make_linear(params_, name + ".v", d, d, rng), nn::make_linear(params_, name + ".merge", d, d, rng)};
}

CaHead::FeedForward CaHead::make_ffn(const std::string& name, std::mt19937_64& rng)
{
    return {nn::make_linear(params_, name + ".fc1", config_.hidden, config_.feed_forward, rng),
            nn::make_linear(params_, name + ".fc2", config_.feed_forward, config_.hidden, rng)};
}

CaHead::Flatten CaHead::make_flatten(const std::string& name, std::mt19937_64& rng)
{
    return {nn::make_linear(params_, name + ".fc1", config_.hidden, config_.reduction_hidden, rng),
            nn::make_linear(params_, name + ".fc2", config_.reduction_hidden, 1, rng),
            nn::make_linear(params_, name + ".merge", config_.hidden, config_.reduction_output, rng)};
}

CaHead::CaHead(const CaConfig& config) : config_(config)
{
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const std::size_t d = config_.hidden;

    sentence_proj_ = nn::make_linear(params_, "sentence.proj", config_.embed_dim, d, rng);
    if (config_.use_ppm) {
        for (auto s : config_.ppm_scales) {
            Pyramid p;
            p.scale = s;
            p.project = nn::make_conv2d(params_, fmt::format("ppm.scale{}", s), config_.input_channels,
                                        config_.ppm_width, {1, 1, 1, 1, 0, 0, 1}, rng);
            p.pool = ops::adaptive_pool_matrix(config_.spatial, s);
            p.upsample = ops::bilinear_matrix(s, config_.spatial);
            pyramid_.push_back(std::move(p));
        }
    }
    reduce_conv2d_ = nn::make_conv2d(params_, "image.conv2d", config_.reducer_channels(), d, {3, 3, 1, 1, 1, 1, 1}, rng);
    reduce_conv1d_ = nn::make_conv1d(params_, "image.conv1d", d, d, 3, 1, config_.groups, rng);

    for (std::size_t l = 0; l < config_.layers; ++l) {
        const auto name = fmt::format("encoder{}", l + 1);
        encoder_.push_back({make_attention(name + ".att", rng), make_ffn(name + ".ffn", rng),
                            nn::make_layer_norm(params_, name + ".norm1", d),
                            nn::make_layer_norm(params_, name + ".norm2", d)});
    }
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const auto name = fmt::format("decoder{}", l + 1);
        decoder_.push_back({make_attention(name + ".self", rng), make_attention(name + ".guided", rng),
                            make_ffn(name + ".ffn", rng), nn::make_layer_norm(params_, name + ".norm1", d),
                            nn::make_layer_norm(params_, name + ".norm2", d),
                            nn::make_layer_norm(params_, name + ".norm3", d)});
    }
    flat_words_ = make_flatten("reduce.words", rng);
    flat_image_ = make_flatten("reduce.image", rng);
    readout_ = nn::make_linear(params_, "readout", config_.reduction_output, 1, rng);
}

Var CaHead::drop(const Var& x, bool training, std::mt19937_64* rng) const
{
    if (!training || config_.dropout == 0.0) {
        return x;
    }
    if (rng == nullptr) {
        throw ValidationError("training with dropout needs a random generator");
    }
    return ops::dropout(x, config_.dropout, *rng);
}

std::vector<std::uint8_t> CaHead::word_mask(std::size_t valid_length) const
{
    if (!config_.mask_padding || valid_length == 0) {
        return {};
    }
    std::vector<std::uint8_t> keep(config_.sentence_length, 0);
    for (std::size_t i = 0; i < std::min(valid_length, keep.size()); ++i) {
        keep[i] = 1;
    }
    return keep;
}

Var CaHead::preprocess_sentence(const Var& sentence) const
{
    expect_shape(sentence.value(), {config_.sentence_length, config_.embed_dim}, "sentence matrix");
    return ops::relu(sentence_proj_(sentence));
}

Var CaHead::pyramid_pool(const Var& features) const
{
    if (!config_.use_ppm) {
        throw ValidationError("this head was built without pyramid pooling");
    }
    expect_shape(features.value(), {config_.input_channels, config_.spatial, config_.spatial}, "feature map");
    std::vector<Var> parts{features};
    for (const auto& p : pyramid_) {
        const Var pooled = ops::resample_spatial(features, p.pool, p.pool);
        const Var projected = ops::relu(p.project(pooled));
        parts.push_back(ops::resample_spatial(projected, p.upsample, p.upsample));
    }
    return ops::concat_leading(parts);
}

Var CaHead::reduce_stage1(const Var& features) const
{
    expect_shape(features.value(), {config_.reducer_channels(), config_.spatial, config_.spatial},
                 "reducer input");
    return ops::max_pool2d(ops::relu(reduce_conv2d_(features)), 3, 3, 2, 2);
}

Var CaHead::reduce_image(const Var& features) const
{
    const Var stage1 = reduce_stage1(features);
    const std::size_t s1 = config_.stage1_size();
    Var x = ops::reshape(stage1, {config_.hidden, s1 * s1});
    x = ops::max_pool1d(ops::relu(reduce_conv1d_(x)), 3, 3);
    return ops::transpose(x);
}

Var CaHead::attend(const Attention& a, const Var& queries, const Var& keys, std::span<const std::uint8_t> keep,
                   const char* block, std::size_t layer, bool training, std::mt19937_64* rng,
                   std::vector<AttentionMap>* maps) const
{
    const Var q = a.q(queries);
    const Var k = a.k(keys);
    const Var v = a.v(keys);
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.head_dim));
    std::vector<Var> heads;
    heads.reserve(config_.heads);
    for (std::size_t h = 0; h < config_.heads; ++h) {
        const std::size_t begin = h * config_.head_dim;
        const Var qh = ops::slice_cols(q, begin, config_.head_dim);
        const Var kh = ops::slice_cols(k, begin, config_.head_dim);
        const Var vh = ops::slice_cols(v, begin, config_.head_dim);
        const Var weights = ops::softmax_rows(ops::scale(ops::matmul(qh, ops::transpose(kh)), scale), keep);
        if (maps != nullptr) {
            maps->push_back({block, layer, h + 1, weights.value()});
        }
        heads.push_back(ops::matmul(drop(weights, training, rng), vh));
    }
    return a.merge(ops::concat_cols(heads));
}

Var CaHead::feed_forward(const FeedForward& f, const Var& x, bool training, std::mt19937_64* rng) const
{
    return f.fc2(drop(ops::relu(f.fc1(x)), training, rng));
}

CaHead::Fused CaHead::mcan_forward(const Var& words, const Var& image, std::size_t valid_length, bool training,
                                   std::mt19937_64* rng) const
{
    expect_shape(words.value(), {config_.sentence_length, config_.hidden}, "word features");
    expect_shape(image.value(), {config_.image_positions(), config_.hidden}, "image features");
    const auto keep = word_mask(valid_length);
    Fused out;
    Var x = words;
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
        const auto& layer = encoder_[l];
        x = layer.norm1(ops::add(x, drop(attend(layer.att, x, x, keep, "sa", l + 1, training, rng, &out.attention),
                                         training, rng)));
        x = layer.norm2(ops::add(x, drop(feed_forward(layer.ffn, x, training, rng), training, rng)));
    }
    Var y = image;
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
        const auto& layer = decoder_[l];
        y = layer.norm1(ops::add(
            y, drop(attend(layer.self_att, y, y, {}, "sga_self", l + 1, training, rng, &out.attention), training,
                    rng)));
        y = layer.norm2(ops::add(
            y, drop(attend(layer.guided, y, x, keep, "sga_guided", l + 1, training, rng, &out.attention), training,
                    rng)));
        y = layer.norm3(ops::add(y, drop(feed_forward(layer.ffn, y, training, rng), training, rng)));
    }
    out.words = x;
    out.image = y;
    return out;
}

Var CaHead::flatten(const Flatten& f, const Var& x, std::span<const std::uint8_t> keep, bool training,
                    std::mt19937_64* rng) const
{
    const Var logits = ops::transpose(f.fc2(drop(ops::relu(f.fc1(x)), training, rng)));
    const Var weights = ops::softmax_rows(logits, keep);
    return f.merge(ops::matmul(weights, x));
}

Var CaHead::attentional_reduce(const Var& words, const Var& image, std::size_t valid_length, bool training,
                               std::mt19937_64* rng) const
{
    const auto keep = word_mask(valid_length);
    return ops::add(flatten(flat_words_, words, keep, training, rng), flatten(flat_image_, image, {}, training, rng));
}

HeadOutput CaHead::forward(const HeadInput& input, bool training, std::mt19937_64* rng) const
{
    expect_shape(input.features.value(), {config_.input_channels, config_.spatial, config_.spatial}, "feature map");
    const Var words = preprocess_sentence(input.sentence);
    const Var augmented = config_.use_ppm ? pyramid_pool(input.features) : input.features;
    const Var image = reduce_image(augmented);
    Fused fused = mcan_forward(words, image, input.valid_length, training, rng);
    const Var reduced = attentional_reduce(fused.words, fused.image, input.valid_length, training, rng);
    HeadOutput out;
    out.score = ops::sigmoid(readout_(reduced));
    out.attention = std::move(fused.attention);
    return out;
}

}  // namespace siamct::model
