// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/clips.hpp"

#include <map>
#include <ostream>

#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct::clips {

ClipManifest extract_clips(std::span<const eval::PredictionRecord> records, double threshold, int merge_gap)
{
    if (merge_gap < 0) {
        throw ValidationError(fmt::format("merge gap {} is negative", merge_gap));
    }
    ClipManifest m;
    m.threshold = threshold;
    if (records.empty()) {
        return m;
    }
    m.sequence_id = records.front().sequence_id;
    m.model_id = records.front().model_id;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.sequence_id != m.sequence_id) {
            throw ValidationError(fmt::format("records mix sequences '{}' and '{}'", m.sequence_id, r.sequence_id));
        }
        if (i > 0 && r.frame_index <= records[i - 1].frame_index) {
            throw ValidationError(fmt::format("sequence '{}': frames are not sorted ({} after {})", m.sequence_id,
                                              r.frame_index, records[i - 1].frame_index));
        }
        if (r.score < threshold) {
            continue;
        }
        if (!m.clips.empty() && r.frame_index - m.clips.back().end_frame - 1 <= merge_gap) {
            m.clips.back().end_frame = r.frame_index;
        } else {
            m.clips.push_back({r.frame_index, r.frame_index});
        }
    }
    return m;
}

std::vector<ClipManifest> extract_all(std::span<const eval::PredictionRecord> records, double threshold, int merge_gap)
{
    std::map<std::string, std::vector<eval::PredictionRecord>> by_sequence;
    for (const auto& r : records) {
        by_sequence[r.sequence_id].push_back(r);
    }
    std::vector<ClipManifest> out;
    for (const auto& [id, recs] : by_sequence) {
        out.push_back(extract_clips(recs, threshold, merge_gap));
    }
    return out;
}

nlohmann::json to_json(const ClipManifest& m)
{
    nlohmann::json clips = nlohmann::json::array();
    for (const auto& c : m.clips) {
        clips.push_back({c.start_frame, c.end_frame});
    }
    return {{"sequence_id", m.sequence_id}, {"model_id", m.model_id}, {"threshold", m.threshold}, {"clips", clips}};
}

void write_clips_jsonl(std::ostream& out, std::span<const ClipManifest> manifests)
{
    for (const auto& m : manifests) {
        out << to_json(m).dump() << '\n';
    }
}

}  // namespace siamct::clips
