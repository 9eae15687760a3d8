// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/images.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "siamct/errors.hpp"

namespace siamct::images {

Tensor to_tensor(const cv::Mat& bgr)
{
    if (bgr.type() != CV_8UC3) {
        throw ValidationError("expected an 8-bit 3-channel image");
    }
    const auto h = static_cast<std::size_t>(bgr.rows);
    const auto w = static_cast<std::size_t>(bgr.cols);
    Tensor t({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(static_cast<int>(y));
        for (std::size_t x = 0; x < w; ++x) {
            t.at(0, y, x) = row[x][2] / 255.0;
            t.at(1, y, x) = row[x][1] / 255.0;
            t.at(2, y, x) = row[x][0] / 255.0;
        }
    }
    return t;
}

cv::Mat read_image(const std::filesystem::path& path)
{
    cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (img.empty()) {
        throw FormatError(fmt::format("cannot read image '{}'", path.string()));
    }
    return img;
}

Augmentation Augmentation::draw(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> shift(-kMaxShift, kMaxShift);
    std::uniform_real_distribution<double> scale(kMinScale, kMaxScale);
    std::uniform_real_distribution<double> bright(-kMaxBrightness, kMaxBrightness);
    Augmentation a;
    a.shift_x = shift(rng);
    a.shift_y = shift(rng);
    a.scale = scale(rng);
    a.brightness = bright(rng);
    return a;
}

double exemplar_side(const BoundingBox& box, double context)
{
    geometry::validate(box);
    const double p = context * (box.width + box.height);
    return std::sqrt((box.width + p) * (box.height + p));
}

cv::Mat crop_square(const cv::Mat& image, double cx, double cy, double side, int out_size)
{
    if (image.empty() || out_size <= 0 || !(side > 0.0)) {
        throw ValidationError("crop needs a nonempty image, positive side and output size");
    }
    const double s = out_size / side;
    // maps the region's top-left corner to (0, 0); pixel centers stay aligned
    cv::Matx23d m(s, 0.0, -(cx - side / 2.0) * s + 0.5 * s - 0.5,  //
                  0.0, s, -(cy - side / 2.0) * s + 0.5 * s - 0.5);
    cv::Mat out;
    cv::warpAffine(image, out, m, cv::Size(out_size, out_size), cv::INTER_LINEAR, cv::BORDER_CONSTANT,
                   cv::mean(image));
    return out;
}

cv::Mat reference_crop(const cv::Mat& image, const BoundingBox& box, int out_size)
{
    return crop_square(image, box.center_x(), box.center_y(), exemplar_side(box), out_size);
}

cv::Mat search_crop(const cv::Mat& image, const BoundingBox& box, int out_size, const Augmentation* augmentation)
{
    double side = exemplar_side(box) * 255.0 / 127.0;
    double cx = box.center_x();
    double cy = box.center_y();
    if (augmentation != nullptr) {
        cx += augmentation->shift_x * side;
        cy += augmentation->shift_y * side;
        side /= augmentation->scale;
    }
    cv::Mat crop = crop_square(image, cx, cy, side, out_size);
    if (augmentation != nullptr && augmentation->brightness != 0.0) {
        crop.convertTo(crop, -1, 1.0 + augmentation->brightness, 0.0);
    }
    return crop;
}

std::filesystem::path frame_path(const std::filesystem::path& root, const std::string& source,
                                 const std::string& video_id, const std::string& category, int frame_index)
{
    if (source == "cmot") {
        return root / video_id / "img1" / fmt::format("{:06d}.jpg", frame_index);
    }
    if (source == "clasot") {
        return root / category / video_id / "img" / fmt::format("{:08d}.jpg", frame_index);
    }
    if (source == "coco") {
        return root / video_id;
    }
    if (source == "synthetic") {
        return root / video_id / fmt::format("{:06d}.png", frame_index);
    }
    throw ValidationError(fmt::format("no frame layout for source '{}'", source));
}

cv::Mat heatmap(const Tensor& matrix, int cell_pixels)
{
    if (matrix.rank() != 2) {
        throw ShapeError("heatmap needs a matrix");
    }
    const int rows = static_cast<int>(matrix.shape[0]);
    const int cols = static_cast<int>(matrix.shape[1]);
    cv::Mat gray(rows, cols, CV_8UC1);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = std::clamp(matrix.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)), 0.0, 1.0);
            gray.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    cv::Mat big;
    cv::resize(gray, big, cv::Size(cols * cell_pixels, rows * cell_pixels), 0, 0, cv::INTER_NEAREST);
    cv::Mat color;
    cv::applyColorMap(big, color, cv::COLORMAP_VIRIDIS);
    return color;
}

}  // namespace siamct::images
