// Copyright 2026 The evbudget Authors
// SPDX-License-Identifier: Apache-2.0

#include "evb/error.hpp"

namespace evb {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::BudgetNonPositive: return "BudgetNonPositive";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::InvalidGeometry: return "InvalidGeometry";
        case ErrorKind::SampleTooLarge: return "SampleTooLarge";
        case ErrorKind::BudgetTooSmall: return "BudgetTooSmall";
        case ErrorKind::DuplicateFrame: return "DuplicateFrame";
        case ErrorKind::MissingFrame: return "MissingFrame";
        case ErrorKind::ScaleMismatch: return "ScaleMismatch";
        case ErrorKind::InvalidTemplate: return "InvalidTemplate";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

}  // namespace evb
