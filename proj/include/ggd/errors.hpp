// Copyright (c) 2026 ggd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ggd {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or axis disagreement between tensors or layer signatures.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// A caller violated a documented precondition.
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// Non-finite values where a finite result is required.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Malformed or truncated serialized payloads.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Dataset-level problems (missing samples, impossible class counts).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Training produced a non-finite or exploding loss.
struct DivergenceError : Error {
    explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

/// Bad command line or run configuration.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace ggd
