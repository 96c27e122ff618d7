#pragma once

#include <stdexcept>
#include <string>

namespace nlsx {

// Two failure families, mapped to process exit codes by the CLI:
// configuration problems (exit 2) and numerical failures (exit 3).

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// groundstate
struct NoConvergence : NumericalError {
  using NumericalError::NumericalError;
};
struct SubcriticalityViolated : ConfigError {
  using ConfigError::ConfigError;
};
struct DomainTooSmall : ConfigError {
  using ConfigError::ConfigError;
};
struct RelStepOutOfRange : ConfigError {
  using ConfigError::ConfigError;
};

// geometry
struct BandTooNarrow : ConfigError {
  using ConfigError::ConfigError;
};
struct UnsortedVelocities : ConfigError {
  using ConfigError::ConfigError;
};
struct DuplicateVelocity : ConfigError {
  using ConfigError::ConfigError;
};

// ansatz / modulation
struct GroundStateResolve : NumericalError {
  using NumericalError::NumericalError;
};
struct NewtonDiverged : NumericalError {
  using NumericalError::NumericalError;
};
struct OutsideModulationRadius : NumericalError {
  using NumericalError::NumericalError;
};

// evolver
struct InnerSolveDiverged : NumericalError {
  using NumericalError::NumericalError;
};
struct BoxContamination : NumericalError {
  using NumericalError::NumericalError;
};

// functionals
struct SingularConstraints : NumericalError {
  using NumericalError::NumericalError;
};
struct EigSolveFailed : NumericalError {
  using NumericalError::NumericalError;
};
struct MOutOfBox : ConfigError {
  using ConfigError::ConfigError;
};

// experiments
struct ConfigRejected : ConfigError {
  using ConfigError::ConfigError;
};
struct DegenerateFit : NumericalError {
  using NumericalError::NumericalError;
};
struct OutputCollision : ConfigError {
  using ConfigError::ConfigError;
};

}  // namespace nlsx
