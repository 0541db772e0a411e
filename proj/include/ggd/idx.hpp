// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ggd/data.hpp"

namespace ggd {

// IDX container (the MNIST distribution format): big-endian magic, then
// big-endian 32-bit dimension sizes, then the raw unsigned bytes.
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803; // ubyte, 3 dims
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801; // ubyte, 1 dim

namespace detail {

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    if (off + 4 > b.size()) throw FormatError("idx: truncated header");
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) |
           static_cast<std::uint32_t>(b[off + 3]);
}

inline void write_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 24));
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

} // namespace detail

/// Parses an IDX image payload. Pixel bytes are scaled to [0,1] by
/// division by 255. The declared dimensions must match the payload length
/// exactly.
inline Tensor parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    const std::uint32_t magic = detail::read_be32(bytes, 0);
    if (magic != kIdxImagesMagic)
        throw FormatError("idx: bad image magic 0x" + std::to_string(magic));
    const std::size_t n = detail::read_be32(bytes, 4);
    const std::size_t h = detail::read_be32(bytes, 8);
    const std::size_t w = detail::read_be32(bytes, 12);
    const std::size_t want = 16 + n * h * w;
    if (bytes.size() < want)
        throw FormatError("idx: truncated image payload, declared " + std::to_string(n) +
                          " images but holds " + std::to_string(bytes.size() - 16) + " bytes");
    if (bytes.size() > want) throw FormatError("idx: trailing bytes after image payload");
    Tensor images({n, 1, h, w});
    for (std::size_t i = 0; i < n * h * w; ++i)
        images.data[i] = static_cast<double>(bytes[16 + i]) / 255.0;
    return images;
}

/// Parses an IDX label payload into class indices.
inline std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    const std::uint32_t magic = detail::read_be32(bytes, 0);
    if (magic != kIdxLabelsMagic)
        throw FormatError("idx: bad label magic 0x" + std::to_string(magic));
    const std::size_t n = detail::read_be32(bytes, 4);
    if (bytes.size() < 8 + n) throw FormatError("idx: truncated label payload");
    if (bytes.size() > 8 + n) throw FormatError("idx: trailing bytes after label payload");
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(bytes[8 + i]);
    return labels;
}

inline std::vector<std::uint8_t> encode_idx_images(const Tensor& images) {
    if (images.rank() != 4 || images.dim(1) != 1)
        throw ContractError("encode_idx_images: expected (N,1,H,W), got " + images.shape_str());
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.size());
    detail::write_be32(out, kIdxImagesMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(images.dim(0)));
    detail::write_be32(out, static_cast<std::uint32_t>(images.dim(2)));
    detail::write_be32(out, static_cast<std::uint32_t>(images.dim(3)));
    for (double v : images.data) {
        double scaled = v * 255.0 + 0.5;
        if (scaled < 0.0) scaled = 0.0;
        if (scaled > 255.0) scaled = 255.0;
        out.push_back(static_cast<std::uint8_t>(scaled));
    }
    return out;
}

inline std::vector<std::uint8_t> encode_idx_labels(const std::vector<int>& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    detail::write_be32(out, kIdxLabelsMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        if (l < 0 || l > 255) throw ContractError("encode_idx_labels: label out of byte range");
        out.push_back(static_cast<std::uint8_t>(l));
    }
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                     std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("short write to " + path);
}

/// Loads a paired IDX image/label file set into a RawDataset.
inline RawDataset read_idx(const std::string& images_path, const std::string& labels_path) {
    RawDataset d;
    d.images = parse_idx_images(read_file_bytes(images_path));
    d.labels = parse_idx_labels(read_file_bytes(labels_path));
    if (d.images.dim(0) != d.labels.size())
        throw FormatError("idx: image count " + std::to_string(d.images.dim(0)) +
                          " does not match label count " + std::to_string(d.labels.size()));
    d.validate();
    return d;
}

} // namespace ggd
