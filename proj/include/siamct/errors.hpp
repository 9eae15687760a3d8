// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 siamct contributors

#pragma once

#include <stdexcept>
#include <string>

namespace siamct {

/// Input violates a documented precondition (bad box, bad threshold, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tensor shapes disagree with an operation's contract.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed file or record while reading an external format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested operation is not available for this model or input.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace siamct
