// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "ggd/data.hpp"

namespace ggd {

// Dataset container: "GGDD" magic, little-endian fixed-width header,
// then raw 64-bit float images and 32-bit labels/bias indices. Loading
// what was written reproduces every field bit for bit.
inline constexpr char kDatasetMagic[4] = {'G', 'G', 'D', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v, const char* what) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError(std::string("dataset container: truncated reading ") + what);
}

} // namespace detail

inline void save_dataset(const std::string& path, const BiasedDataset& d) {
    d.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    os.write(kDatasetMagic, 4);
    detail::write_pod(os, kDatasetVersion);
    const std::uint32_t dims[5] = {
        static_cast<std::uint32_t>(d.images.dim(0)), static_cast<std::uint32_t>(d.images.dim(1)),
        static_cast<std::uint32_t>(d.images.dim(2)), static_cast<std::uint32_t>(d.images.dim(3)),
        static_cast<std::uint32_t>(d.num_classes)};
    for (std::uint32_t v : dims) detail::write_pod(os, v);
    detail::write_pod(os, d.rho);
    detail::write_pod(os, d.seed);
    os.write(reinterpret_cast<const char*>(d.images.data.data()),
             static_cast<std::streamsize>(d.images.data.size() * sizeof(double)));
    for (int v : d.labels) detail::write_pod(os, static_cast<std::int32_t>(v));
    for (int v : d.bias_attr) detail::write_pod(os, static_cast<std::int32_t>(v));
    if (!os) throw FormatError("short write to " + path);
}

inline BiasedDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw FormatError("dataset container: bad magic in " + path);
    std::uint32_t version;
    detail::read_pod(is, version, "version");
    if (version != kDatasetVersion)
        throw FormatError("dataset container: unsupported version " + std::to_string(version));
    std::uint32_t n, c, h, w, classes;
    detail::read_pod(is, n, "dims");
    detail::read_pod(is, c, "dims");
    detail::read_pod(is, h, "dims");
    detail::read_pod(is, w, "dims");
    detail::read_pod(is, classes, "dims");
    BiasedDataset d;
    detail::read_pod(is, d.rho, "rho");
    detail::read_pod(is, d.seed, "seed");
    d.num_classes = static_cast<int>(classes);
    d.images = Tensor({n, c, h, w});
    is.read(reinterpret_cast<char*>(d.images.data.data()),
            static_cast<std::streamsize>(d.images.data.size() * sizeof(double)));
    if (!is) throw FormatError("dataset container: truncated image payload in " + path);
    d.labels.resize(n);
    d.bias_attr.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::int32_t v;
        detail::read_pod(is, v, "labels");
        d.labels[i] = v;
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        std::int32_t v;
        detail::read_pod(is, v, "bias_attr");
        d.bias_attr[i] = v;
    }
    is.peek();
    if (!is.eof()) throw FormatError("dataset container: trailing bytes in " + path);
    d.validate();
    return d;
}

} // namespace ggd
