// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace siamct {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. Matrices are {rows, cols}, feature maps
/// are {channels, height, width}, scalars are {1}.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);
    Tensor(Shape s, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t axis) const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
    double& at(std::size_t c, std::size_t h, std::size_t w)
    {
        return data[(c * shape[1] + h) * shape[2] + w];
    }
    double at(std::size_t c, std::size_t h, std::size_t w) const
    {
        return data[(c * shape[1] + h) * shape[2] + w];
    }

    std::span<double> values() { return data; }
    std::span<const double> values() const { return data; }

    bool all_finite() const;
};

/// Throws ShapeError unless `t` has exactly `expected` shape.
void expect_shape(const Tensor& t, const Shape& expected, const char* what);

}  // namespace siamct
