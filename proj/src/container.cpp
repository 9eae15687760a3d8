// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#include "siamct/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "siamct/errors.hpp"

namespace siamct::io {

static_assert(std::endian::native == std::endian::little, "container IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'I', 'A', 'M', 'C', 'T', 'C', '1'};

}  // namespace

void Container::add(std::string name, Tensor t)
{
    if (find(name) != nullptr) {
        throw ValidationError(fmt::format("container already holds '{}'", name));
    }
    arrays.emplace_back(std::move(name), std::move(t));
}

const Tensor* Container::find(std::string_view name) const
{
    for (const auto& [n, t] : arrays) {
        if (n == name) {
            return &t;
        }
    }
    return nullptr;
}

const Tensor& Container::at(std::string_view name) const
{
    const Tensor* t = find(name);
    if (t == nullptr) {
        throw FormatError(fmt::format("container has no array '{}'", name));
    }
    return *t;
}

void write_container(const std::filesystem::path& path, const Container& c, DType dtype)
{
    const std::size_t width = dtype == DType::f64 ? 8 : 4;
    nlohmann::json header;
    header["meta"] = c.meta;
    header["arrays"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : c.arrays) {
        header["arrays"].push_back({{"name", name},
                                    {"shape", t.shape},
                                    {"offset", offset},
                                    {"dtype", dtype == DType::f64 ? "f64" : "f32"}});
        offset += t.size() * width;
    }
    const std::string text = header.dump();
    const std::uint64_t length = text.size();

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError(fmt::format("cannot write '{}'", path.string()));
    }
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&length), sizeof length);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : c.arrays) {
        if (dtype == DType::f64) {
            out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.size() * 8));
        } else {
            std::vector<float> f(t.data.begin(), t.data.end());
            out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * 4));
        }
    }
    if (!out) {
        throw FormatError(fmt::format("write to '{}' failed", path.string()));
    }
}

Container read_container(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(fmt::format("cannot open '{}'", path.string()));
    }
    char magic[8];
    std::uint64_t length = 0;
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw FormatError(fmt::format("'{}' is not a siamct container", path.string()));
    }
    if (!in.read(reinterpret_cast<char*>(&length), sizeof length) || length > (1ULL << 32)) {
        throw FormatError(fmt::format("'{}': bad header length", path.string()));
    }
    std::string text(length, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
        throw FormatError(fmt::format("'{}': truncated header", path.string()));
    }
    const auto data_start = in.tellg();

    Container c;
    try {
        const auto header = nlohmann::json::parse(text);
        c.meta = header.at("meta");
        for (const auto& entry : header.at("arrays")) {
            const Shape shape = entry.at("shape").get<Shape>();
            const auto offset = entry.at("offset").get<std::uint64_t>();
            const std::string dtype = entry.at("dtype").get<std::string>();
            Tensor t(shape);
            in.seekg(data_start + static_cast<std::streamoff>(offset));
            if (dtype == "f64") {
                in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.size() * 8));
            } else if (dtype == "f32") {
                std::vector<float> f(t.size());
                in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(f.size() * 4));
                std::copy(f.begin(), f.end(), t.data.begin());
            } else {
                throw FormatError(fmt::format("unknown dtype '{}'", dtype));
            }
            if (!in) {
                throw FormatError(fmt::format("'{}': truncated array '{}'", path.string(),
                                              entry.at("name").get<std::string>()));
            }
            c.arrays.emplace_back(entry.at("name").get<std::string>(), std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(fmt::format("'{}': bad header: {}", path.string(), e.what()));
    }
    return c;
}

}  // namespace siamct::io
