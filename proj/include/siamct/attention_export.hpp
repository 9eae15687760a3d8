// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "siamct/head.hpp"
#include "siamct/tensor.hpp"

namespace siamct::attention {

struct ExportOptions {
    bool image_maps = true;  // per (layer, head) maps; CA heads only
    bool word_weights = true;
    int cell_pixels = 8;
    std::vector<std::string> words;  // labels for word rows, optional
};

/// Divides by the maximum entry so the strongest weight maps to 1; an
/// all-zero matrix is returned unchanged.
Tensor max_normalized(const Tensor& weights);

/// Writes <block>_l<layer>_h<head>.csv and .png for every attention map of a
/// CA head, and word_weights.csv for a DFG head with attention. Returns the
/// files written. Image maps requested from a DFG head, or word weights from
/// a head that has none, raise UnsupportedError.
std::vector<std::filesystem::path> export_attention(model::HeadKind kind, const model::HeadOutput& output,
                                                    const std::filesystem::path& dir,
                                                    const ExportOptions& options = {});

}  // namespace siamct::attention
