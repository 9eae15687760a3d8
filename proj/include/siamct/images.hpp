// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <opencv2/core.hpp>

#include "siamct/geometry.hpp"
#include "siamct/tensor.hpp"

namespace siamct::images {

using geometry::BoundingBox;

/// BGR 8-bit image -> {3, H, W} RGB in [0, 1].
Tensor to_tensor(const cv::Mat& bgr);

cv::Mat read_image(const std::filesystem::path& path);

/// Random photometric/geometric jitter applied to a search crop.
struct Augmentation {
    double shift_x = 0.0;  // fraction of the crop side
    double shift_y = 0.0;
    double scale = 1.0;
    double brightness = 0.0;  // relative

    static Augmentation draw(std::uint64_t seed);
    static constexpr double kMaxShift = 0.12;
    static constexpr double kMinScale = 0.95;
    static constexpr double kMaxScale = 1.05;
    static constexpr double kMaxBrightness = 0.10;
};

/// Side of the square context region around a box: sqrt((w+p)(h+p)) with
/// p = context * (w + h).
double exemplar_side(const BoundingBox& box, double context = 0.5);

/// Square region of `side` pixels centered on (cx, cy) resampled to
/// out_size x out_size. Pixels outside the image take the image's mean color.
cv::Mat crop_square(const cv::Mat& image, double cx, double cy, double side, int out_size);

/// Reference crop: the exemplar region resized to out_size (127 by default).
cv::Mat reference_crop(const cv::Mat& image, const BoundingBox& box, int out_size = 127);

/// Search crop: the exemplar region enlarged by 255/127, resized to out_size.
cv::Mat search_crop(const cv::Mat& image, const BoundingBox& box, int out_size = 255,
                    const Augmentation* augmentation = nullptr);

/// Frame locations for the supported corpora, rooted at `root`:
///   cmot   <root>/<video>/img1/<frame:06>.jpg
///   clasot <root>/<category>/<video>/img/<frame:08>.jpg
///   coco   <root>/<video>  (video id is the image file name)
///   synthetic <root>/<video>/<frame:06>.png
std::filesystem::path frame_path(const std::filesystem::path& root, const std::string& source,
                                 const std::string& video_id, const std::string& category, int frame_index);

/// Gray-scale rendering of a matrix with values in [0, 1], upscaled by
/// nearest neighbour, as an 8-bit color-mapped image.
cv::Mat heatmap(const Tensor& matrix, int cell_pixels = 8);

}  // namespace siamct::images
