#pragma once

// Exosystem theta_{k+1} = S theta_k and the harmonic set it induces.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imsynth/numkit.hpp"

namespace imsynth::exo {

using numkit::Complex;
using numkit::Matrix;
using numkit::Vector;

/// Validated exosystem: unit-modulus, diagonalizable state matrix.
struct Exosystem {
  Matrix S;
  std::vector<Complex> spectrum;

  int p() const { return static_cast<int>(S.rows()); }
};

/// Throws AssumptionViolation naming the offending eigenvalue when some
/// |lambda| is outside [1 - 1e-8, 1 + 1e-8], or when the eigenvector matrix
/// has condition number above 1e8.
Exosystem validate_exosystem(const Matrix& s);

/// theta -> S theta.
Vector step_exosystem(const Exosystem& exo, const Vector& theta);

/// How many products of exosystem eigenvalues enter the internal model.
struct HarmonicPolicy {
  enum class Kind { Closure, Degree };
  Kind kind = Kind::Closure;
  int degree = 1;
  int cap = 64;

  static HarmonicPolicy closure(int cap = 64) { return {Kind::Closure, 0, cap}; }
  static HarmonicPolicy max_degree(int d) { return {Kind::Degree, d, 64}; }

  /// "closure", "degree:2" or "2".
  static HarmonicPolicy parse(std::string_view text);
  std::string to_string() const;
};

struct HarmonicSet {
  /// Ordered: 1 first, then conjugate pairs by increasing angle, -1 last.
  std::vector<Complex> values;
  std::vector<Complex> source;
  HarmonicPolicy policy;

  std::size_t size() const { return values.size(); }
  bool contains(Complex w, double angle_tol = 1e-9) const;
  /// Human-readable angles, e.g. "{0, +-pi/3, +-2pi/3, pi}" style in radians.
  std::string describe() const;
};

/// Omega_lambda = {lambda^alpha}. In closure mode products are added until the
/// set stops growing (ClosureOverflow beyond policy.cap elements); in degree
/// mode only |alpha| <= d. A closure that terminates is the group of m-th
/// roots of unity and is returned with exact polar values.
HarmonicSet harmonic_closure(std::span<const Complex> lambda, HarmonicPolicy policy);

/// A frequency given as text: "0", "pi", "pi/3", "2*pi/5", "2pi/5" or a decimal
/// radian value. Rational multiples of pi are kept exactly.
struct Frequency {
  double radians = 0.0;
  std::optional<std::pair<long, long>> pi_fraction;  // numerator, denominator
  std::string text;

  static Frequency parse(std::string_view text);
  static Frequency from_radians(double r);
};

/// Eigenvalue tuple for one frequency in [0, pi]: (e^{j th}, e^{-j th}) for
/// 0 < th < pi, (1) for th = 0 and (-1) for th = pi.
std::vector<Complex> eigenvalues_for(const Frequency& f);
std::vector<Complex> eigenvalues_for(std::span<const Frequency> fs);

/// Block-diagonal S realizing the listed frequencies: planar rotation blocks
/// first (in the given order), then the +1 / -1 scalar blocks.
Matrix exosystem_matrix(std::span<const Frequency> fs);

}  // namespace imsynth::exo
