// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "fixtures.hpp"

#include <random>

namespace siamct::testing {

model::DfgConfig mini_dfg(bool attention)
{
    model::DfgConfig c;
    c.channels = 8;
    c.spatial = 5;
    c.sentence_length = 4;
    c.embed_dim = 12;
    c.attention_hidden = 8;
    c.use_attention = attention;
    c.seed = 11;
    return c;
}

model::CaConfig mini_ca(bool ppm)
{
    model::CaConfig c = ppm ? model::CaConfig::ppm() : model::CaConfig::plain();
    c.input_channels = 8;
    c.spatial = 7;
    c.sentence_length = 4;
    c.embed_dim = 12;
    c.layers = 2;
    c.head_dim = 4;
    c.dropout = 0.0;
    c.feed_forward = 8;
    c.reduction_hidden = 8;
    c.reduction_output = 8;
    c.groups = 2;
    if (ppm) {
        c.ppm_scales = {1, 2, 3, 6};
        c.ppm_width = 2;
        c.hidden = 16;
        c.heads = 4;
    } else {
        c.hidden = 8;
        c.heads = 2;
    }
    c.seed = 13;
    return c;
}

backbone::ToyBackboneConfig mini_backbone(std::size_t spatial)
{
    backbone::ToyBackboneConfig c;
    c.input_size = ((spatial * 2 + 1) * 2 + 1) * 2 + 1;
    c.widths = {4, 4, 4};
    c.out_channels = 8;
    c.seed = 5;
    return c;
}

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    Tensor t(std::move(shape));
    for (double& v : t.data) {
        v = dist(rng);
    }
    return t;
}

std::vector<pipeline::EncodedSample> synthetic_batch(std::size_t per_class, std::uint64_t seed)
{
    synthetic::SyntheticConfig sc;
    sc.videos = 8;
    sc.seed = seed;
    const auto data = synthetic::SyntheticDataset::generate(sc);
    auto bb = backbone::ToyBackboneConfig::desk();
    bb.seed = seed;
    const backbone::ToyBackbone backbone(bb);
    const text::HashEmbeddingProvider words(seed, 32);
    const pipeline::SyntheticFrames frames(data);
    const pipeline::ImageEncoder encoder(frames, backbone, words);

    std::vector<pipeline::EncodedSample> batch;
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (const auto& s : pipeline::evaluation_samples(data.manifest())) {
        std::size_t& count = s.label == 1 ? pos : neg;
        if (count >= per_class || (s.search_frame % 5) != 1) {
            continue;
        }
        ++count;
        batch.push_back(encoder.encode(s));
        if (pos == per_class && neg == per_class) {
            break;
        }
    }
    return batch;
}

GradCase grad_case(model::HeadKind kind, std::uint64_t seed)
{
    GradCase g;
    std::size_t spatial = 0;
    if (model::is_dfg(kind)) {
        auto c = mini_dfg(kind == model::HeadKind::dfg);
        c.seed = seed;
        spatial = c.spatial;
        g.head = std::make_unique<model::DfgHead>(c);
    } else {
        auto c = mini_ca(kind == model::HeadKind::ca_ppm);
        c.seed = seed;
        spatial = c.spatial;
        g.head = std::make_unique<model::CaHead>(c);
    }
    auto bc = mini_backbone(spatial);
    bc.seed = seed;
    g.backbone = std::make_unique<backbone::ToyBackbone>(bc);
    g.crop = random_tensor({3, bc.input_size, bc.input_size}, 100 + seed);
    g.features = g.backbone->extract(g.crop);
    g.sentence = random_tensor({4, 12}, 200 + seed);
    for (std::size_t c = 0; c < 12; ++c) {
        g.sentence.at(3, c) = 0.0;
    }
    g.valid_length = 3;
    g.label = static_cast<double>(seed % 2);
    return g;
}

ag::Var GradCase::head_loss() const
{
    model::HeadInput in{ag::Var::constant(features), ag::Var::constant(sentence), valid_length};
    return ops::bce(head->forward(in, false, nullptr).score, label);
}

ag::Var GradCase::full_loss() const
{
    model::HeadInput in{backbone->forward(ag::Var::constant(crop)), ag::Var::constant(sentence), valid_length};
    return ops::bce(head->forward(in, false, nullptr).score, label);
}

}  // namespace siamct::testing
