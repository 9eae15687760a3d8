// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "siamct/evaluation.hpp"

namespace siamct::clips {

struct Clip {
    int start_frame = 0;
    int end_frame = 0;  // inclusive

    bool operator==(const Clip&) const = default;
};

struct ClipManifest {
    std::string sequence_id;
    std::vector<Clip> clips;  // disjoint, sorted
    double threshold = 0.5;
    std::string model_id;
};

/// Frames with score >= threshold, grouped into clips. Two positive frames
/// share a clip when at most `merge_gap` frame indices lie between them.
/// Records must come from one sequence with strictly increasing frames.
ClipManifest extract_clips(std::span<const eval::PredictionRecord> records, double threshold, int merge_gap = 0);

/// Groups records by sequence (keeping input order within each) and extracts
/// clips for every sequence, ordered by sequence id.
std::vector<ClipManifest> extract_all(std::span<const eval::PredictionRecord> records, double threshold,
                                      int merge_gap = 0);

nlohmann::json to_json(const ClipManifest& m);
void write_clips_jsonl(std::ostream& out, std::span<const ClipManifest> manifests);

}  // namespace siamct::clips
