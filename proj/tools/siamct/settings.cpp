// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "settings.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "siamct/errors.hpp"
#include "siamct/model_ca.hpp"
#include "siamct/model_dfg.hpp"

namespace siamct::cli {

nlohmann::json EncoderSettings::to_json() const
{
    return {{"scale", scale},
            {"backbone_seed", backbone_seed},
            {"words", words},
            {"sentence_length", sentence_length},
            {"features", features}};
}

EncoderSettings EncoderSettings::from_json(const nlohmann::json& j)
{
    EncoderSettings s;
    s.scale = j.value("scale", s.scale);
    s.backbone_seed = j.value("backbone_seed", s.backbone_seed);
    s.words = j.value("words", s.words);
    s.sentence_length = j.value("sentence_length", s.sentence_length);
    s.features = j.value("features", s.features);
    return s;
}

namespace {

std::size_t head_embed_dim(const model::Head& head)
{
    return head.config_json().at("embed_dim").get<std::size_t>();
}

backbone::ToyBackboneConfig backbone_config(const std::string& scale)
{
    if (scale == "desk") {
        return backbone::ToyBackboneConfig::desk();
    }
    if (scale == "full") {
        return backbone::ToyBackboneConfig::full();
    }
    throw ValidationError(fmt::format("unknown scale '{}' (desk or full)", scale));
}

}  // namespace

std::filesystem::path data_root(const std::string& flag)
{
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("SIAMCT_DATA_ROOT"); env != nullptr && *env != '\0') {
        return env;
    }
    throw ValidationError("no data root: pass --frames-root or set SIAMCT_DATA_ROOT");
}

EncoderBundle make_encoder(const EncoderSettings& settings, const model::Head& head)
{
    EncoderBundle b;
    const std::size_t dim = head_embed_dim(head);
    const std::string words = settings.words.empty() ? fmt::format("hash:0:{}", dim) : settings.words;
    b.words = text::make_provider(words);
    if (b.words->dimension() != dim) {
        throw ValidationError(
            fmt::format("word vectors have {} dimensions, the head expects {}", b.words->dimension(), dim));
    }
    if (!settings.features.empty()) {
        b.store = std::make_unique<backbone::FeatureStore>(backbone::FeatureStore::load(settings.features));
        b.encoder = std::make_unique<pipeline::StoredFeatureEncoder>(*b.store, *b.words, settings.sentence_length);
        return b;
    }
    auto bc = backbone_config(settings.scale);
    bc.seed = settings.backbone_seed;
    b.backbone = std::make_unique<backbone::ToyBackbone>(bc);
    b.frames = std::make_unique<pipeline::DiskFrames>(data_root(settings.frames_root));
    b.encoder =
        std::make_unique<pipeline::ImageEncoder>(*b.frames, *b.backbone, *b.words, settings.sentence_length);
    return b;
}

nlohmann::json head_config(model::HeadKind kind, const std::string& scale, const std::string& config_file)
{
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) {
            throw FormatError(fmt::format("cannot open '{}'", config_file));
        }
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(fmt::format("'{}': {}", config_file, e.what()));
        }
    }
    if (scale == "desk") {
        return model::desk_config(kind);
    }
    if (scale == "full") {
        return model::full_config(kind);
    }
    throw ValidationError(fmt::format("unknown scale '{}' (desk or full)", scale));
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool sets_key(const std::vector<std::string>& args, const std::string& key)
{
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args)
{
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) {
        return args;
    }
    std::ifstream in(path);
    if (!in) {
        throw FormatError(fmt::format("cannot open config '{}'", path));
    }
    std::vector<std::string> extra;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError(fmt::format("{}:{}: expected key=value", path, line_no));
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.empty() || key == "config") {
            throw FormatError(fmt::format("{}:{}: bad key", path, line_no));
        }
        if (!sets_key(args, key)) {
            extra.push_back(fmt::format("--{}={}", key, value));
        }
    }
    // Config entries go right after the subcommand so they parse in its scope.
    std::vector<std::string> out;
    bool inserted = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
        out.push_back(args[i]);
        if (!inserted && i > 0 && args[i].rfind("-", 0) != 0) {
            out.insert(out.end(), extra.begin(), extra.end());
            inserted = true;
        }
    }
    return out;
}

}  // namespace siamct::cli
