// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "siamct/errors.hpp"

namespace siamct::synthetic {

namespace {

cv::Scalar bgr(std::string_view color)
{
    if (color == "red") return {40, 40, 220};
    if (color == "green") return {40, 200, 40};
    if (color == "blue") return {220, 60, 40};
    if (color == "yellow") return {40, 220, 230};
    if (color == "cyan") return {220, 220, 40};
    return {220, 40, 220};  // magenta
}

}  // namespace

const std::array<std::string_view, 6>& colors()
{
    static const std::array<std::string_view, 6> names{"red", "green", "blue", "yellow", "cyan", "magenta"};
    return names;
}

SyntheticDataset SyntheticDataset::generate(const SyntheticConfig& config)
{
    if (config.videos < 1 || config.frames < 1 || config.blocks < 1 || config.blocks > 6 || config.canvas < 64) {
        throw ValidationError("synthetic config needs videos, frames >= 1, 1..6 blocks and a canvas >= 64");
    }
    geometry::validate_threshold(config.threshold);

    SyntheticDataset ds;
    ds.config_ = config;
    const double canvas = config.canvas;
    for (int v = 0; v < config.videos; ++v) {
        std::mt19937_64 rng(datasets::mix_seed(config.seed, static_cast<std::uint64_t>(v)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        SyntheticVideo video;
        video.video_id = fmt::format("synth{}_{:03d}", config.seed, v);

        const double tw = 28.0 + 10.0 * unit(rng);
        const double th = 28.0 + 10.0 * unit(rng);
        const double x0 = canvas * (0.3 + 0.4 * unit(rng));
        const double y0 = canvas * (0.3 + 0.4 * unit(rng));
        const double drift_phase = 2.0 * std::numbers::pi * unit(rng);
        std::vector<std::pair<double, double>> centers;
        for (int f = 0; f < config.frames; ++f) {
            const double cx = x0 + 10.0 * std::cos(0.2 * f + drift_phase);
            const double cy = y0 + 10.0 * std::sin(0.15 * f + drift_phase);
            centers.emplace_back(cx, cy);
            video.target.push_back({cx - tw / 2.0, cy - th / 2.0, tw, th});
        }

        std::vector<std::string_view> palette(colors().begin(), colors().end());
        std::shuffle(palette.begin(), palette.end(), rng);
        for (int b = 0; b < config.blocks; ++b) {
            Block block;
            block.color = std::string(palette[static_cast<std::size_t>(b)]);
            const double side = 10.0 + 6.0 * unit(rng);
            const double radius = 8.0 + 40.0 * unit(rng);
            const double omega = 0.15 + 0.3 * unit(rng);
            const double phase = 2.0 * std::numbers::pi * unit(rng);
            for (int f = 0; f < config.frames; ++f) {
                const auto [cx, cy] = centers[static_cast<std::size_t>(f)];
                const double r = radius * std::abs(std::cos(omega * f + phase));
                const double bx = cx + r * std::cos(0.5 * phase + 0.1 * f);
                const double by = cy + r * std::sin(0.5 * phase + 0.1 * f);
                block.boxes.push_back({bx - side / 2.0, by - side / 2.0, side, side});
            }
            video.blocks.push_back(std::move(block));
        }

        // One sequence per color: present colors can be satisfied, absent
        // colors never are.
        for (auto color : colors()) {
            datasets::ConstraintSequence seq;
            seq.sequence_id = fmt::format("{}:{}", video.video_id, color);
            seq.source = "synthetic";
            seq.video_id = video.video_id;
            seq.category = std::string(color);
            seq.target_id = 0;
            seq.sentence = fmt::format("close to a {} block", color);
            const auto constraint = geometry::ObjectDescription::from_sentence(fmt::format("{} block", color));
            int id = 1;
            for (const auto& block : video.blocks) {
                if (block.color == color) {
                    seq.constraint_id = id;
                }
                ++id;
            }
            for (int f = 0; f < config.frames; ++f) {
                std::vector<geometry::DescribedBox> present;
                for (const auto& block : video.blocks) {
                    present.push_back({block.boxes[static_cast<std::size_t>(f)],
                                       geometry::ObjectDescription::from_sentence(block.color + " block")});
                }
                datasets::FrameLabel fl;
                fl.frame_index = f + 1;
                fl.target_box = video.target[static_cast<std::size_t>(f)];
                if (seq.constraint_id > 0) {
                    fl.constraint_box = video.blocks[static_cast<std::size_t>(seq.constraint_id - 1)]
                                            .boxes[static_cast<std::size_t>(f)];
                }
                fl.label = geometry::satisfied_by_superset(*fl.target_box, constraint, present, config.threshold);
                seq.frames.push_back(fl);
            }
            ds.manifest_.sequences.push_back(std::move(seq));
        }
        ds.videos_.emplace(video.video_id, std::move(video));
    }
    return ds;
}

const SyntheticVideo& SyntheticDataset::video(const std::string& video_id) const
{
    const auto it = videos_.find(video_id);
    if (it == videos_.end()) {
        throw ValidationError(fmt::format("unknown synthetic video '{}'", video_id));
    }
    return it->second;
}

cv::Mat SyntheticDataset::render(const std::string& video_id, int frame_index) const
{
    const auto& v = video(video_id);
    if (frame_index < 1 || frame_index > config_.frames) {
        throw ValidationError(fmt::format("frame {} outside 1..{}", frame_index, config_.frames));
    }
    const auto f = static_cast<std::size_t>(frame_index - 1);
    cv::Mat img(config_.canvas, config_.canvas, CV_8UC3, cv::Scalar(30, 30, 30));
    auto rect = [](const BoundingBox& b) {
        return cv::Rect(static_cast<int>(std::lround(b.left)), static_cast<int>(std::lround(b.top)),
                        static_cast<int>(std::lround(b.width)), static_cast<int>(std::lround(b.height)));
    };
    cv::rectangle(img, rect(v.target[f]), cv::Scalar(150, 150, 150), cv::FILLED);
    for (const auto& block : v.blocks) {
        cv::rectangle(img, rect(block.boxes[f]), bgr(block.color), cv::FILLED);
    }
    return img;
}

}  // namespace siamct::synthetic
