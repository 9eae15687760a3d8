// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "siamct/errors.hpp"
#include "siamct/geometry.hpp"

namespace siamct::datasets {

using geometry::BoundingBox;

// ---------------------------------------------------------------------------
// Sequence manifests

struct FrameLabel {
    int frame_index = 0;
    std::optional<BoundingBox> target_box;      // absent when the target is not annotated
    std::optional<BoundingBox> constraint_box;  // MOT/COCO only
    int label = 0;
};

/// One (video, target, constraint) unit with a label per target frame.
struct ConstraintSequence {
    std::string sequence_id;
    std::string source;  // "cmot", "clasot", "coco", "synthetic"
    std::string video_id;
    std::string category;
    int target_id = -1;
    int constraint_id = -1;
    std::string sentence;
    bool augment_search = false;
    std::vector<FrameLabel> frames;  // strictly increasing frame_index
};

struct SequenceManifest {
    std::vector<ConstraintSequence> sequences;

    std::size_t frame_count() const;
    std::size_t positive_count() const;
    double positive_rate() const;
};

/// One record per frame: sequence fields plus the frame's boxes and label.
void write_manifest_jsonl(std::ostream& out, const SequenceManifest& manifest);
SequenceManifest read_manifest_jsonl(std::istream& in);
void save_manifest(const std::filesystem::path& path, const SequenceManifest& manifest);
SequenceManifest load_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// MOT groundtruth and c-MOT16 synthesis

struct TrackFrame {
    int frame_index = 0;
    int track_id = 0;
    BoundingBox box;
    std::optional<double> visibility;
};

struct MotVideo {
    std::string video_id;
    std::vector<TrackFrame> tracks;
};

/// Lines "frame,id,left,top,width,height[,conf,class,visibility]".
std::vector<TrackFrame> parse_mot_groundtruth(std::istream& in, std::string_view source_name = "gt");
std::vector<TrackFrame> load_mot_groundtruth(const std::filesystem::path& path);

/// video id -> track id -> description.
using DescriptionTable = std::map<std::string, std::map<int, geometry::ObjectDescription>>;

/// Lines "video_id,track_id,sentence"; the sentence may be quoted. A header
/// line starting with "video_id" is skipped.
DescriptionTable parse_descriptions(std::istream& in);
DescriptionTable load_descriptions(const std::filesystem::path& path);

class MissingDescriptionError : public ValidationError {
public:
    explicit MissingDescriptionError(std::vector<std::string> missing);
    const std::vector<std::string>& missing() const { return missing_; }

private:
    std::vector<std::string> missing_;
};

/// Every ordered pair (A, B) whose constraint is satisfied in at least one
/// frame becomes a sequence over all frames where A is annotated. Labels
/// follow geometry::constraint_satisfied including the superset rule; the
/// target itself never counts as a superset candidate.
SequenceManifest build_cmot(std::span<const MotVideo> videos, const DescriptionTable& descriptions,
                            double threshold = geometry::kDefaultThreshold);

// ---------------------------------------------------------------------------
// c-LaSOT

struct ConstraintTrackAnnotation {
    std::string constraint_track;
    std::string sequence_id;
    std::string category;
    int constraint_from = 0;
    int constraint_till = 0;
    std::string sentence;
};

/// Columns constraint_track,sequence_id,category,constraint_from,
/// constraint_till,sentence with an optional header row.
std::vector<ConstraintTrackAnnotation> parse_clasot_annotations(std::istream& in);
std::vector<ConstraintTrackAnnotation> load_clasot_annotations(const std::filesystem::path& path);

struct LasotSequenceInfo {
    int frame_count = 0;
    std::vector<std::optional<BoundingBox>> target_boxes;  // empty, or one per frame
};

/// LaSOT groundtruth.txt: "x,y,w,h" per frame; empty boxes become nullopt.
std::vector<std::optional<BoundingBox>> parse_lasot_groundtruth(std::istream& in);

SequenceManifest load_clasot(std::span<const ConstraintTrackAnnotation> rows,
                             const std::map<std::string, LasotSequenceInfo>& sequences);

struct ClassCount {
    std::string_view name;
    int sequences;
};

/// The six constraint classes of the released c-LaSOT annotations with the
/// number of sequences each appears in.
const std::array<ClassCount, 6>& clasot_class_inventory();

/// Distinct annotated sequences per constraint class, where a row's class is
/// the first constraint-class word occurring in its sentence.
std::map<std::string, int> count_constraint_classes(std::span<const ConstraintTrackAnnotation> rows);

// ---------------------------------------------------------------------------
// COCO pre-training samples

struct CocoObject {
    int annotation_id = 0;
    BoundingBox box;
    std::string category;
};

struct CocoImage {
    int image_id = 0;
    std::string file_name;
    std::vector<CocoObject> objects;
};

/// Standard instances JSON (images, annotations, categories). Crowd and
/// zero-size annotations are dropped.
std::vector<CocoImage> parse_coco_instances(const nlohmann::json& doc);
std::vector<CocoImage> load_coco_instances(const std::filesystem::path& path);

const std::array<std::string_view, 6>& constraint_classes();
const std::array<std::string_view, 6>& sentence_templates();
std::string apply_template(std::size_t template_index, std::string_view object);

// ---------------------------------------------------------------------------
// Samples

struct ConstraintSample {
    std::string sequence_id;
    std::string source;
    std::string video_id;
    std::string category;
    int reference_frame = 0;
    std::optional<BoundingBox> reference_box;
    int search_frame = 0;
    std::optional<BoundingBox> search_box;
    std::string sentence;
    int label = 0;
    int target_id = -1;
    int constraint_id = -1;
    std::optional<BoundingBox> constraint_box;
    std::uint64_t augment_seed = 0;  // 0 = no augmentation of the search crop

    bool operator==(const ConstraintSample&) const = default;
};

/// One target per image with >= 2 objects; every allowed-class object in its
/// vicinity yields a positive, and each positive is paired with a negative
/// naming an allowed class absent from the vicinity (when one exists).
std::vector<ConstraintSample> generate_coco_samples(std::span<const CocoImage> images,
                                                    const std::set<std::string>& allowed_classes,
                                                    double threshold, std::uint64_t seed);

/// Wraps each sample as a single-frame sequence flagged for augmentation.
SequenceManifest manifest_from_samples(std::span<const ConstraintSample> samples);

/// n samples: sequence uniform, reference frame uniform within it, search
/// frame uniform over the sequence's frames within +-frame_window of the
/// reference. Sample i depends only on (seed, i).
std::vector<ConstraintSample> sample_epoch(const SequenceManifest& manifest, std::size_t n, int frame_window,
                                           std::uint64_t seed);

/// The samples with index = worker (mod workers) from the same stream.
std::vector<ConstraintSample> sample_epoch_worker(const SequenceManifest& manifest, std::size_t n,
                                                  int frame_window, std::uint64_t seed, std::size_t worker,
                                                  std::size_t workers);

nlohmann::json to_json(const ConstraintSample& sample);
ConstraintSample sample_from_json(const nlohmann::json& j);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace siamct::datasets
