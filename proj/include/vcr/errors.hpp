#pragma once

#include <stdexcept>
#include <string>

namespace vcr {

// Base for every model/solver failure; the CLI maps these to exit code 3.
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutOfRange : ModelError { using ModelError::ModelError; };
struct NonPhysical : ModelError { using ModelError::ModelError; };
struct NoConvergence : ModelError { using ModelError::ModelError; };
struct Infeasible : ModelError { using ModelError::ModelError; };
// Condenser superheated section would need an inlet hotter than the property range.
struct DischargeOverflow : Infeasible { using Infeasible::Infeasible; };
struct InfeasibleDemand : ModelError { using ModelError::ModelError; };
struct DomainError : ModelError { using ModelError::ModelError; };
struct SingularMatrix : ModelError { using ModelError::ModelError; };
struct SingularConfiguration : ModelError { using ModelError::ModelError; };
struct DegenerateDirection : ModelError { using ModelError::ModelError; };
struct QpInfeasible : ModelError { using ModelError::ModelError; };
struct QpMaxIter : ModelError { using ModelError::ModelError; };
struct PoorFit : ModelError { using ModelError::ModelError; };
struct RiccatiDivergence : ModelError { using ModelError::ModelError; };
struct SchemaMismatch : ModelError { using ModelError::ModelError; };

// Bad user input (files, keys, values); exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vcr
