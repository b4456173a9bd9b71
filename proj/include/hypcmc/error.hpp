// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hypcmc {

/// Failure categories shared by every module. The numeric values are part of
/// the C API (see hypcmc_c.h) and must not be reordered.
enum class ErrorCode : int {
    InvalidArgument = 1,
    OutOfDomain = 2,
    OutOfRange = 3,
    NonImmersion = 4,
    DegenerateDerivative = 5,
    DomainMismatch = 6,
    SizeMismatch = 7,
    NotPositive = 8,
    SolverFailure = 9,
    MeshPairingFailure = 10,
    NewtonDiverged = 11,
    SingularLinearization = 12,
    ContinuationStalled = 13,
    NonConstantH = 14,
    Io = 15,
    Config = 16,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace hypcmc
