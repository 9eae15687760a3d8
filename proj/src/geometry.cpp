// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct::geometry {

void validate(const BoundingBox& box)
{
    if (!std::isfinite(box.left) || !std::isfinite(box.top) || !std::isfinite(box.width) ||
        !std::isfinite(box.height)) {
        throw ValidationError("bounding box has non-finite coordinates");
    }
    if (box.width <= 0.0 || box.height <= 0.0) {
        throw ValidationError(fmt::format("bounding box must have positive size, got {}x{}", box.width, box.height));
    }
}

void validate_threshold(double threshold)
{
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ValidationError(fmt::format("overlap threshold must lie in (0, 1], got {}", threshold));
    }
}

std::vector<std::string> normalize_tokens(std::string_view sentence)
{
    std::string cleaned;
    cleaned.reserve(sentence.size());
    for (char ch : sentence) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::ispunct(u)) {
            continue;
        }
        cleaned.push_back(static_cast<char>(std::tolower(u)));
    }
    std::vector<std::string> tokens;
    std::istringstream in(cleaned);
    for (std::string tok; in >> tok;) {
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::string normalize(std::string_view sentence)
{
    const auto tokens = normalize_tokens(sentence);
    return fmt::format("{}", fmt::join(tokens, " "));
}

ObjectDescription ObjectDescription::from_sentence(std::string sentence)
{
    ObjectDescription d;
    d.tokens = normalize_tokens(sentence);
    d.raw_sentence = std::move(sentence);
    return d;
}

double compute_overlap(const BoundingBox& target, const BoundingBox& constraint)
{
    validate(target);
    validate(constraint);
    const double w = std::min(target.right(), constraint.right()) - std::max(target.left, constraint.left);
    const double h = std::min(target.bottom(), constraint.bottom()) - std::max(target.top, constraint.top);
    if (w <= 0.0 || h <= 0.0) {
        return 0.0;
    }
    return std::min(1.0, (w * h) / constraint.area());
}

bool description_subset(const ObjectDescription& b, const ObjectDescription& c)
{
    if (b.tokens.empty()) {
        return false;
    }
    std::map<std::string_view, int> counts;
    for (const auto& t : c.tokens) {
        ++counts[t];
    }
    for (const auto& t : b.tokens) {
        auto it = counts.find(t);
        if (it == counts.end() || it->second == 0) {
            return false;
        }
        --it->second;
    }
    return true;
}

int satisfied_by_superset(const BoundingBox& target, const ObjectDescription& constraint,
                          std::span<const DescribedBox> others, double threshold)
{
    validate_threshold(threshold);
    for (const auto& other : others) {
        if (description_subset(constraint, other.description) && compute_overlap(target, other.box) >= threshold) {
            return 1;
        }
    }
    return 0;
}

int constraint_satisfied(const BoundingBox& target, const DescribedBox& constraint,
                         std::span<const DescribedBox> others, double threshold)
{
    validate_threshold(threshold);
    if (compute_overlap(target, constraint.box) >= threshold) {
        return 1;
    }
    return satisfied_by_superset(target, constraint.description, others, threshold);
}

}  // namespace siamct::geometry
