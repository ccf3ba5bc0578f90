// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evb {

enum class ErrorKind {
    InvalidArgument,
    BudgetNonPositive,
    DimensionMismatch,
    EmptyInput,
    InvalidGeometry,
    SampleTooLarge,
    BudgetTooSmall,
    DuplicateFrame,
    MissingFrame,
    ScaleMismatch,
    InvalidTemplate,
    InvalidSpec,
    ShapeMismatch,
    IoFailure,
    ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace evb
