// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "siamct/tensor.hpp"

namespace siamct::io {

enum class DType { f64, f32 };

/// Named arrays plus a JSON metadata object. On disk: the 8-byte magic
/// "SIAMCTC1", a little-endian u64 header length, the JSON header and then
/// the raw little-endian array payloads in header order.
struct Container {
    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, Tensor>> arrays;

    void add(std::string name, Tensor t);
    const Tensor* find(std::string_view name) const;
    const Tensor& at(std::string_view name) const;
};

void write_container(const std::filesystem::path& path, const Container& c, DType dtype = DType::f64);
Container read_container(const std::filesystem::path& path);

}  // namespace siamct::io
