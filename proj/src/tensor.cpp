// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct {

std::size_t numel(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape)
{
    return fmt::format("[{}]", fmt::join(shape, "x"));
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values))
{
    if (data.size() != numel(shape)) {
        throw ShapeError(fmt::format("tensor of shape {} given {} values", shape_str(shape), data.size()));
    }
}

std::size_t Tensor::dim(std::size_t axis) const
{
    if (axis >= shape.size()) {
        throw ShapeError(fmt::format("axis {} out of range for shape {}", axis, shape_str(shape)));
    }
    return shape[axis];
}

bool Tensor::all_finite() const
{
    for (double v : data) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void expect_shape(const Tensor& t, const Shape& expected, const char* what)
{
    if (t.shape != expected) {
        throw ShapeError(fmt::format("{}: expected shape {}, got {}", what, shape_str(expected), shape_str(t.shape)));
    }
}

}  // namespace siamct
