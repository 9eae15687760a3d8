// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "siamct/backbone.hpp"
#include "siamct/datasets.hpp"
#include "siamct/synthetic.hpp"
#include "siamct/text_encoding.hpp"

namespace siamct::pipeline {

/// What a head consumes for one sample.
struct EncodedSample {
    Tensor features;  // {C, H, W}
    text::SentenceMatrix sentence;
    int label = 0;
    std::string sequence_id;
    int frame_index = 0;
    std::string raw_sentence;
};

class SampleEncoder {
public:
    virtual ~SampleEncoder() = default;
    virtual EncodedSample encode(const datasets::ConstraintSample& sample) const = 0;
};

class FrameProvider {
public:
    virtual ~FrameProvider() = default;
    virtual cv::Mat frame(const datasets::ConstraintSample& sample, int frame_index) const = 0;
};

/// Frames from disk laid out per images::frame_path.
class DiskFrames final : public FrameProvider {
public:
    explicit DiskFrames(std::filesystem::path root) : root_(std::move(root)) {}
    cv::Mat frame(const datasets::ConstraintSample& sample, int frame_index) const override;

private:
    std::filesystem::path root_;
};

class SyntheticFrames final : public FrameProvider {
public:
    explicit SyntheticFrames(const synthetic::SyntheticDataset& data) : data_(data) {}
    cv::Mat frame(const datasets::ConstraintSample& sample, int frame_index) const override;

private:
    const synthetic::SyntheticDataset& data_;
};

/// Search crop around the target box -> backbone -> feature map, plus the
/// sentence matrix. Samples with an augment seed get a jittered crop.
class ImageEncoder final : public SampleEncoder {
public:
    ImageEncoder(const FrameProvider& frames, const backbone::FeatureExtractor& backbone,
                 const text::EmbeddingProvider& words, std::size_t sentence_length = text::kSentenceLength);
    EncodedSample encode(const datasets::ConstraintSample& sample) const override;

private:
    const FrameProvider& frames_;
    const backbone::FeatureExtractor& backbone_;
    const text::EmbeddingProvider& words_;
    std::size_t sentence_length_;
};

/// Features looked up from a precomputed store by (sequence id, search frame).
class StoredFeatureEncoder final : public SampleEncoder {
public:
    StoredFeatureEncoder(const backbone::FeatureStore& store, const text::EmbeddingProvider& words,
                         std::size_t sentence_length = text::kSentenceLength);
    EncodedSample encode(const datasets::ConstraintSample& sample) const override;

private:
    const backbone::FeatureStore& store_;
    const text::EmbeddingProvider& words_;
    std::size_t sentence_length_;
};

/// Every frame of every sequence as an evaluation sample: the first
/// annotated frame is the reference, no augmentation.
std::vector<datasets::ConstraintSample> evaluation_samples(const datasets::SequenceManifest& manifest);

}  // namespace siamct::pipeline
