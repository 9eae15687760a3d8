// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "siamct/backbone.hpp"
#include "siamct/head.hpp"
#include "siamct/pipeline.hpp"
#include "siamct/text_encoding.hpp"

namespace siamct::cli {

/// How samples become head inputs; stored in checkpoints so evaluation
/// encodes exactly as training did.
struct EncoderSettings {
    std::string scale = "desk";  // "desk" or "full"
    std::uint64_t backbone_seed = 0;
    std::string words;  // empty: hash provider sized to the head
    std::size_t sentence_length = text::kSentenceLength;
    std::string frames_root;
    std::string features;  // feature store; replaces the backbone when set

    nlohmann::json to_json() const;
    static EncoderSettings from_json(const nlohmann::json& j);
};

/// Owns everything an encoder refers to.
struct EncoderBundle {
    std::unique_ptr<backbone::ToyBackbone> backbone;
    std::unique_ptr<backbone::FeatureStore> store;
    std::unique_ptr<text::EmbeddingProvider> words;
    std::unique_ptr<pipeline::FrameProvider> frames;
    std::unique_ptr<pipeline::SampleEncoder> encoder;
};

EncoderBundle make_encoder(const EncoderSettings& settings, const model::Head& head);

nlohmann::json head_config(model::HeadKind kind, const std::string& scale, const std::string& config_file);

/// --frames-root, else $SIAMCT_DATA_ROOT, else an error naming both.
std::filesystem::path data_root(const std::string& flag);

/// Inserts "--key=value" for every line of the flat config file named by
/// --config unless the command line already sets that key.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace siamct::cli
