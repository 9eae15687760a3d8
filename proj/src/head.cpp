// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/head.hpp"

#include <fmt/format.h>

#include "siamct/errors.hpp"
#include "siamct/model_ca.hpp"
#include "siamct/model_dfg.hpp"

namespace siamct::model {

HeadKind parse_head_kind(std::string_view name)
{
    if (name == "dfg") return HeadKind::dfg;
    if (name == "dfg_no_att") return HeadKind::dfg_no_att;
    if (name == "ca") return HeadKind::ca;
    if (name == "ca_ppm") return HeadKind::ca_ppm;
    throw ValidationError(fmt::format("unknown head '{}' (expected dfg, dfg_no_att, ca or ca_ppm)", name));
}

std::string to_string(HeadKind kind)
{
    switch (kind) {
    case HeadKind::dfg: return "dfg";
    case HeadKind::dfg_no_att: return "dfg_no_att";
    case HeadKind::ca: return "ca";
    case HeadKind::ca_ppm: return "ca_ppm";
    }
    return "?";
}

bool is_dfg(HeadKind kind) { return kind == HeadKind::dfg || kind == HeadKind::dfg_no_att; }

std::unique_ptr<Head> make_head(HeadKind kind, const nlohmann::json& config)
{
    if (is_dfg(kind)) {
        auto c = DfgConfig::from_json(config);
        c.use_attention = kind == HeadKind::dfg;
        return std::make_unique<DfgHead>(c);
    }
    auto c = CaConfig::from_json(config);
    if (c.use_ppm != (kind == HeadKind::ca_ppm)) {
        throw ValidationError(fmt::format("config use_ppm={} contradicts head {}", c.use_ppm, to_string(kind)));
    }
    return std::make_unique<CaHead>(c);
}

nlohmann::json full_config(HeadKind kind)
{
    switch (kind) {
    case HeadKind::dfg: return DfgConfig{}.to_json();
    case HeadKind::dfg_no_att: {
        DfgConfig c;
        c.use_attention = false;
        return c.to_json();
    }
    case HeadKind::ca: return CaConfig::plain().to_json();
    case HeadKind::ca_ppm: return CaConfig::ppm().to_json();
    }
    return {};
}

nlohmann::json desk_config(HeadKind kind)
{
    if (is_dfg(kind)) {
        DfgConfig c;
        c.channels = 24;
        c.spatial = 11;
        c.embed_dim = 32;
        c.attention_hidden = 32;
        c.use_attention = kind == HeadKind::dfg;
        return c.to_json();
    }
    CaConfig c = kind == HeadKind::ca_ppm ? CaConfig::ppm() : CaConfig::plain();
    c.input_channels = 24;
    c.spatial = 11;
    c.embed_dim = 32;
    c.feed_forward = 64;
    c.reduction_hidden = 64;
    c.reduction_output = 64;
    c.head_dim = 8;
    if (c.use_ppm) {
        c.ppm_width = 2;  // 24 + 4 x 2 = 32 channels
        c.hidden = 32;
        c.heads = 4;
    } else {
        c.hidden = 24;
        c.heads = 3;
    }
    return c.to_json();
}

}  // namespace siamct::model
