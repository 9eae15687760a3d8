// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace siamct::geometry {

inline constexpr double kDefaultThreshold = 0.5;

/// Axis-aligned box in pixel coordinates.
struct BoundingBox {
    double left = 0.0;
    double top = 0.0;
    double width = 0.0;
    double height = 0.0;

    double right() const { return left + width; }
    double bottom() const { return top + height; }
    double area() const { return width * height; }
    double center_x() const { return left + width / 2.0; }
    double center_y() const { return top + height / 2.0; }

    bool operator==(const BoundingBox&) const = default;
};

/// Throws ValidationError unless width and height are finite and positive.
/// Left/top may be negative: tracking groundtruth boxes routinely extend past
/// the frame edge.
void validate(const BoundingBox& box);

/// Lowercase, drop punctuation, split on whitespace.
std::vector<std::string> normalize_tokens(std::string_view sentence);

/// Normalized tokens joined by single spaces; idempotent.
std::string normalize(std::string_view sentence);

struct ObjectDescription {
    std::string raw_sentence;
    std::vector<std::string> tokens;

    static ObjectDescription from_sentence(std::string sentence);
    bool empty() const { return tokens.empty(); }
};

struct DescribedBox {
    BoundingBox box;
    ObjectDescription description;
};

/// |target ∩ constraint| / |constraint|. Asymmetric: normalized by the
/// constraint's area, so it is 1 exactly when the constraint box lies inside
/// the target box.
double compute_overlap(const BoundingBox& target, const BoundingBox& constraint);

/// True iff the token multiset of `b` is contained in that of `c`. An empty
/// `b` is never a subset: it identifies nothing.
bool description_subset(const ObjectDescription& b, const ObjectDescription& c);

/// 1 iff the constraint object, or any other object whose description is a
/// superset of the constraint's description, overlaps the target by at
/// least `threshold`. `others` must not contain the target itself.
int constraint_satisfied(const BoundingBox& target, const DescribedBox& constraint,
                         std::span<const DescribedBox> others, double threshold = kDefaultThreshold);

/// Superset branch on its own, for frames where the constraint object is
/// not visible.
int satisfied_by_superset(const BoundingBox& target, const ObjectDescription& constraint,
                          std::span<const DescribedBox> others, double threshold = kDefaultThreshold);

void validate_threshold(double threshold);

}  // namespace siamct::geometry
