// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "siamct/datasets.hpp"

namespace siamct::synthetic {

using geometry::BoundingBox;

/// Desk-scale stand-in corpus: a gray target block wanders through a small
/// canvas while colored blocks orbit it. A sequence names one color; a
/// frame is positive when a block of that color overlaps the target under
/// the usual overlap rule. Runs end to end without any downloaded data.
struct SyntheticConfig {
    int videos = 16;
    int frames = 24;
    int canvas = 160;
    int blocks = 3;  // colored blocks per video
    double threshold = geometry::kDefaultThreshold;
    std::uint64_t seed = 0;
};

struct Block {
    std::string color;
    std::vector<BoundingBox> boxes;  // one per frame
};

struct SyntheticVideo {
    std::string video_id;
    std::vector<BoundingBox> target;  // one per frame
    std::vector<Block> blocks;
};

const std::array<std::string_view, 6>& colors();

class SyntheticDataset {
public:
    static SyntheticDataset generate(const SyntheticConfig& config);

    const datasets::SequenceManifest& manifest() const { return manifest_; }
    const SyntheticConfig& config() const { return config_; }
    const SyntheticVideo& video(const std::string& video_id) const;

    /// Frame `frame_index` (1-based) of a video as a BGR image.
    cv::Mat render(const std::string& video_id, int frame_index) const;

private:
    SyntheticConfig config_;
    std::map<std::string, SyntheticVideo> videos_;
    datasets::SequenceManifest manifest_;
};

}  // namespace siamct::synthetic
