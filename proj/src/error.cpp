// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/error.hpp"

namespace hypcmc {

const char* error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NonImmersion: return "NonImmersion";
    case ErrorCode::DegenerateDerivative: return "DegenerateDerivative";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::MeshPairingFailure: return "MeshPairingFailure";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::SingularLinearization: return "SingularLinearization";
    case ErrorCode::ContinuationStalled: return "ContinuationStalled";
    case ErrorCode::NonConstantH: return "NonConstantH";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

} // namespace hypcmc
