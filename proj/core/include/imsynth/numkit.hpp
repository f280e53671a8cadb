#pragma once

// Dense linear algebra, polynomials and discrete-time LTI realizations.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace imsynth::numkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Largest absolute entry, 0 for an empty matrix.
double max_abs(const Matrix& m);

/// |M - M^T|_max <= rel_tol * (1 + |M|_max).
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

/// Orthonormal basis for the null space of m (columns). Singular values below
/// rel_tol * sigma_max count as zero. Returns an n x 0 matrix for full column rank.
Matrix kernel_basis(const Matrix& m, double rel_tol = 1e-10);

/// Solves A X + X B = C for X by Kronecker vectorization (small problems only).
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c);

/// Real polynomial with coefficients stored in ascending degree order.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> ascending);

  static Polynomial constant(double c);
  static Polynomial monomial(int degree, double c = 1.0);

  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  const std::vector<double>& coefficients() const { return c_; }
  double coefficient(int i) const;
  double leading() const;

  Complex operator()(Complex z) const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double s) const;

  /// Drops leading coefficients with |c| <= tol * max|c|.
  Polynomial trimmed(double rel_tol) const;
  /// Rounds coefficients lying within tol of an integer.
  Polynomial snapped(double tol) const;

  /// Roots via companion-matrix eigenvalues.
  std::vector<Complex> roots() const;

 private:
  void trim_exact_zeros();
  std::vector<double> c_;
};

struct PolynomialDivision {
  Polynomial quotient;
  Polynomial remainder;
};

/// Long division num = q * den + r with deg r < deg den.
PolynomialDivision divide(const Polynomial& num, const Polynomial& den);

/// Monic real polynomial prod (z - r). The root multiset must be closed under
/// conjugation (pairs matched within tol * (1 + |r|)); throws DomainError otherwise.
Polynomial poly_from_roots(std::span<const Complex> roots, double tol = 1e-9);

/// Characteristic polynomial det(zI - M) from the spectrum.
Polynomial characteristic_polynomial(const Matrix& m);

class TransferFunction {
 public:
  TransferFunction(Polynomial num, Polynomial den);

  const Polynomial& numerator() const { return num_; }
  const Polynomial& denominator() const { return den_; }
  bool proper() const { return num_.degree() <= den_.degree(); }
  bool strictly_proper() const { return num_.degree() < den_.degree(); }
  Complex operator()(Complex z) const { return num_(z) / den_(z); }

 private:
  Polynomial num_;
  Polynomial den_;
};

/// Discrete-time realization x+ = A x + B u, y = C x + D u.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

  /// Static gain (zero states).
  static StateSpace gain(double d);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const Matrix& D() const { return d_; }

  int states() const { return static_cast<int>(a_.rows()); }
  int inputs() const { return static_cast<int>(b_.cols()); }
  int outputs() const { return static_cast<int>(c_.rows()); }
  bool siso() const { return inputs() == 1 && outputs() == 1; }

  /// C (zI - A)^{-1} B + D.
  CMatrix response(Complex z) const;
  /// Scalar response; throws DimensionError unless SISO.
  Complex operator()(Complex z) const;

 private:
  Matrix a_ = Matrix(0, 0);
  Matrix b_ = Matrix(0, 1);
  Matrix c_ = Matrix(1, 0);
  Matrix d_ = Matrix::Zero(1, 1);
};

struct EigenDecomposition {
  std::vector<Complex> values;
  CMatrix vectors;  // columns
};

/// All eigenvalues with multiplicity. Throws DimensionError for non-square
/// input and NumericalError when the QR iteration does not converge.
std::vector<Complex> eig(const Matrix& m);

/// Eigenvalues and eigenvectors; residuals are checked against 1e-8 * |M|.
EigenDecomposition eig_with_vectors(const Matrix& m);

/// SISO transfer function of a realization (numerator by the rank-one
/// determinant identity, denominator from the spectrum of A).
TransferFunction to_transfer_function(const StateSpace& sys);

/// Controllable canonical realization of a proper transfer function.
StateSpace realize(const TransferFunction& tf);

/// Cascade u -> H -> K. Requires H.outputs() == K.inputs().
StateSpace series_connect(const StateSpace& k, const StateSpace& h);

/// Ho-Kalman reduction on the 4n x 4n block Hankel matrix: singular values
/// below tol * sigma_max are discarded. The input is returned unchanged when
/// nothing can be removed.
StateSpace minimal_realization(const StateSpace& g, double tol = 1e-7);

/// Singular values of the finite 4n x 4n block Hankel matrix.
Vector hankel_singular_values(const StateSpace& g);

/// Largest relative response mismatch at `samples` random points with
/// modulus in [1.05, 1.6].
double response_mismatch(const StateSpace& a, const StateSpace& b, int samples = 20,
                         std::uint64_t seed = 7);

}  // namespace imsynth::numkit
