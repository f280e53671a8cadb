#pragma once

// Internal-model plant H(z) = z^{n-1} / prod (z - w), the generalized plant
// P used for controller synthesis, and the algorithm realization (A, B, C).

#include <map>
#include <string>
#include <vector>

#include "imsynth/exo.hpp"
#include "imsynth/numkit.hpp"

namespace imsynth::plant {

using numkit::Complex;
using numkit::Matrix;
using numkit::StateSpace;

/// Controllable canonical realization (A_p, B_p, C_p) of H.
struct PlantRealization {
  Matrix A;
  Matrix B;
  Matrix C;
  exo::HarmonicSet harmonics;
  numkit::Polynomial denominator;  // prod (z - w), monic

  int n() const { return static_cast<int>(A.rows()); }
  StateSpace state_space() const;
};

/// Throws DomainError when the harmonic set is empty or does not contain 1.
PlantRealization build_H(const exo::HarmonicSet& harmonics);

/// Two-port plant with inputs (w, u) and outputs (z, y):
///   x+ = A_p x + B_p w,  z = u,  y = C_p x.
struct GeneralizedPlant {
  StateSpace sys;
};

GeneralizedPlant build_generalized_plant(const PlantRealization& plant);

struct AlgorithmInfo {
  double mu = 0.0;
  double L = 0.0;
  double rho = 0.0;
  std::vector<Complex> harmonics;
  std::map<std::string, std::string> provenance;
};

/// First-order method x+ = A x + B w, z = C x applied coordinatewise.
class Algorithm {
 public:
  /// Validates shapes (A n x n, B n x 1, C 1 x n) and the fixed-point
  /// requirement: an eigenvalue at 1 whose eigenvector is seen by C.
  Algorithm(Matrix a, Matrix b, Matrix c, AlgorithmInfo info = {});

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const AlgorithmInfo& info() const { return info_; }
  AlgorithmInfo& info() { return info_; }
  int order() const { return static_cast<int>(a_.rows()); }

  StateSpace state_space() const;

 private:
  Matrix a_, b_, c_;
  AlgorithmInfo info_;
};

struct HarmonicCheck {
  Complex harmonic;
  double eigen_distance = 0.0;   // min |eig(A) - w|
  double resonance_margin = 0.0; // sigma_min [[A - wI, B], [C, 0]]
  bool has_eigenvalue = false;
  bool non_resonant = false;

  bool passed() const { return has_eigenvalue && non_resonant; }
};

struct StructureReport {
  std::vector<HarmonicCheck> checks;
  double tol = 0.0;

  bool passed() const;
  std::string summary() const;
};

/// Per harmonic w: an eigenvalue of A within tol of w, and
/// sigma_min([[A - wI, B], [C, 0]]) >= tol.
StructureReport verify_internal_model_structure(const Algorithm& alg,
                                                const exo::HarmonicSet& harmonics,
                                                double tol = 1e-6);

}  // namespace imsynth::plant
