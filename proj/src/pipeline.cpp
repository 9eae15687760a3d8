// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/pipeline.hpp"

#include <fmt/format.h>

#include "siamct/errors.hpp"
#include "siamct/images.hpp"

namespace siamct::pipeline {

namespace {

EncodedSample base(const datasets::ConstraintSample& sample, const text::EmbeddingProvider& words,
                   std::size_t sentence_length)
{
    EncodedSample e;
    e.sentence = text::encode_sentence(sample.sentence, words, sentence_length);
    e.label = sample.label;
    e.sequence_id = sample.sequence_id;
    e.frame_index = sample.search_frame;
    e.raw_sentence = sample.sentence;
    return e;
}

}  // namespace

cv::Mat DiskFrames::frame(const datasets::ConstraintSample& sample, int frame_index) const
{
    return images::read_image(
        images::frame_path(root_, sample.source, sample.video_id, sample.category, frame_index));
}

cv::Mat SyntheticFrames::frame(const datasets::ConstraintSample& sample, int frame_index) const
{
    return data_.render(sample.video_id, frame_index);
}

ImageEncoder::ImageEncoder(const FrameProvider& frames, const backbone::FeatureExtractor& backbone,
                           const text::EmbeddingProvider& words, std::size_t sentence_length)
    : frames_(frames), backbone_(backbone), words_(words), sentence_length_(sentence_length)
{
}

EncodedSample ImageEncoder::encode(const datasets::ConstraintSample& sample) const
{
    if (!sample.search_box) {
        throw ValidationError(fmt::format("{} frame {}: no target box to crop around", sample.sequence_id,
                                          sample.search_frame));
    }
    const cv::Mat image = frames_.frame(sample, sample.search_frame);
    const auto size = static_cast<int>(backbone_.input_size());
    cv::Mat crop;
    if (sample.augment_seed != 0) {
        const auto aug = images::Augmentation::draw(sample.augment_seed);
        crop = images::search_crop(image, *sample.search_box, size, &aug);
    } else {
        crop = images::search_crop(image, *sample.search_box, size);
    }
    EncodedSample e = base(sample, words_, sentence_length_);
    e.features = backbone_.extract(images::to_tensor(crop));
    return e;
}

StoredFeatureEncoder::StoredFeatureEncoder(const backbone::FeatureStore& store, const text::EmbeddingProvider& words,
                                           std::size_t sentence_length)
    : store_(store), words_(words), sentence_length_(sentence_length)
{
}

EncodedSample StoredFeatureEncoder::encode(const datasets::ConstraintSample& sample) const
{
    EncodedSample e = base(sample, words_, sentence_length_);
    e.features = store_.get(sample.sequence_id, sample.search_frame);
    return e;
}

std::vector<datasets::ConstraintSample> evaluation_samples(const datasets::SequenceManifest& manifest)
{
    std::vector<datasets::ConstraintSample> out;
    for (const auto& seq : manifest.sequences) {
        const datasets::FrameLabel* reference = nullptr;
        for (const auto& f : seq.frames) {
            if (f.target_box) {
                reference = &f;
                break;
            }
        }
        for (const auto& f : seq.frames) {
            datasets::ConstraintSample s;
            s.sequence_id = seq.sequence_id;
            s.source = seq.source;
            s.video_id = seq.video_id;
            s.category = seq.category;
            if (reference != nullptr) {
                s.reference_frame = reference->frame_index;
                s.reference_box = reference->target_box;
            }
            s.search_frame = f.frame_index;
            s.search_box = f.target_box;
            s.sentence = seq.sentence;
            s.label = f.label;
            s.target_id = seq.target_id;
            s.constraint_id = seq.constraint_id;
            s.constraint_box = f.constraint_box;
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace siamct::pipeline
