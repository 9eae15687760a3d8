// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/attention_export.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>

#include "siamct/csv.hpp"
#include "siamct/errors.hpp"
#include "siamct/images.hpp"

namespace siamct::attention {

Tensor max_normalized(const Tensor& weights)
{
    Tensor out = weights;
    const double peak = out.data.empty() ? 0.0 : *std::max_element(out.data.begin(), out.data.end());
    if (peak > 0.0) {
        for (double& v : out.data) {
            v /= peak;
        }
    }
    return out;
}

namespace {

std::ofstream open_file(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
    return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Tensor& m)
{
    auto out = open_file(path);
    const std::size_t rows = m.shape.at(0), cols = m.shape.at(1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out << (c == 0 ? "" : ",") << csv::number(m.at(r, c));
        }
        out << '\n';
    }
}

}  // namespace

std::vector<std::filesystem::path> export_attention(model::HeadKind kind, const model::HeadOutput& output,
                                                    const std::filesystem::path& dir, const ExportOptions& options)
{
    const bool dfg = model::is_dfg(kind);
    if (dfg && options.image_maps) {
        throw UnsupportedError(fmt::format("{} heads have no image attention maps", model::to_string(kind)));
    }
    if (options.word_weights && output.word_weights.data.empty()) {
        throw UnsupportedError(fmt::format("{} heads have no word attention", model::to_string(kind)));
    }
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    if (options.image_maps) {
        for (const auto& map : output.attention) {
            const std::string stem = fmt::format("{}_l{}_h{}", map.block, map.layer, map.head);
            write_matrix_csv(dir / (stem + ".csv"), map.weights);
            written.push_back(dir / (stem + ".csv"));
            const cv::Mat img = images::heatmap(max_normalized(map.weights), options.cell_pixels);
            const auto png = dir / (stem + ".png");
            if (!cv::imwrite(png.string(), img)) {
                throw FormatError(fmt::format("cannot write '{}'", png.string()));
            }
            written.push_back(png);
        }
    }
    if (options.word_weights) {
        const auto path = dir / "word_weights.csv";
        auto out = open_file(path);
        out << "index,words,weight\n";
        const Tensor& w = output.word_weights;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            // Each row of the processed sentence covers two consecutive words.
            std::string label;
            for (std::size_t k = 2 * i; k < 2 * i + 2 && k < options.words.size(); ++k) {
                label += (label.empty() ? "" : " ") + options.words[k];
            }
            out << i << ',' << csv::escape(label) << ',' << csv::number(w.data[i]) << '\n';
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace siamct::attention
