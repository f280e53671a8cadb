#pragma once

#include <stdexcept>
#include <string>

namespace imsynth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are not conformal.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (e.g. rho <= 0, mu >= L).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine failed to converge or lost accuracy.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The exosystem violates the unit-modulus / diagonalizability requirements.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// Harmonic closure did not stabilize within the element cap.
class ClosureOverflow : public Error {
 public:
  using Error::Error;
};

/// Multiplier coefficients fall outside the admissible set.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

/// An algorithm lacks the internal-model structure required for the harmonics.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Bisection found no certifiable rate inside the bracket.
class NoAlgorithmFound : public Error {
 public:
  using Error::Error;
};

/// The LMI solver could not decide feasibility at the requested accuracy.
class SolverInconclusive : public Error {
 public:
  using Error::Error;
};

/// Controller reconstruction from a synthesis certificate failed.
class ReconstructionError : public Error {
 public:
  using Error::Error;
};

/// A document (algorithm file, config file) is malformed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace imsynth
