#include "imsynth/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "imsynth/errors.hpp"

namespace imsynth::numkit {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  return max_abs(m - m.transpose()) <= rel_tol * (1.0 + max_abs(m));
}

Matrix kernel_basis(const Matrix& m, double rel_tol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0 || n == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (smax > 0.0 && s(i) > rel_tol * smax) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
  const Eigen::Index n = a.rows(), m = b.rows();
  if (a.cols() != n || b.cols() != m || c.rows() != n || c.cols() != m) {
    throw DimensionError("solve_sylvester: nonconformal operands");
  }
  Matrix k = Matrix::Zero(n * m, n * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    k.block(j * n, j * n, n, n) += a;
    for (Eigen::Index i = 0; i < m; ++i) {
      k.block(j * n, i * n, n, n) += b(i, j) * Matrix::Identity(n, n);
    }
  }
  Eigen::FullPivLU<Matrix> lu(k);
  if (!lu.isInvertible()) throw NumericalError("solve_sylvester: singular Sylvester operator");
  Vector x = lu.solve(Eigen::Map<const Vector>(c.data(), c.size()));
  return Eigen::Map<Matrix>(x.data(), n, m);
}

// ---------------------------------------------------------------- Polynomial

Polynomial::Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) {
  trim_exact_zeros();
}

Polynomial Polynomial::constant(double c) { return Polynomial({c}); }

Polynomial Polynomial::monomial(int degree, double c) {
  std::vector<double> v(static_cast<std::size_t>(degree) + 1, 0.0);
  v.back() = c;
  return Polynomial(std::move(v));
}

void Polynomial::trim_exact_zeros() {
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

double Polynomial::coefficient(int i) const {
  return (i >= 0 && i < static_cast<int>(c_.size())) ? c_[static_cast<std::size_t>(i)] : 0.0;
}

double Polynomial::leading() const { return c_.empty() ? 0.0 : c_.back(); }

Complex Polynomial::operator()(Complex z) const {
  Complex acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
  return acc;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  std::vector<double> v(std::max(c_.size(), o.c_.size()), 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) v[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) v[i] += o.c_[i];
  return Polynomial(std::move(v));
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (is_zero() || o.is_zero()) return {};
  std::vector<double> v(c_.size() + o.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    for (std::size_t j = 0; j < o.c_.size(); ++j) v[i + j] += c_[i] * o.c_[j];
  }
  return Polynomial(std::move(v));
}

Polynomial Polynomial::operator*(double s) const {
  std::vector<double> v = c_;
  for (double& x : v) x *= s;
  return Polynomial(std::move(v));
}

Polynomial Polynomial::trimmed(double rel_tol) const {
  double scale = 0.0;
  for (double x : c_) scale = std::max(scale, std::abs(x));
  std::vector<double> v = c_;
  while (!v.empty() && std::abs(v.back()) <= rel_tol * scale) v.pop_back();
  return Polynomial(std::move(v));
}

Polynomial Polynomial::snapped(double tol) const {
  std::vector<double> v = c_;
  for (double& x : v) {
    const double r = std::round(x);
    if (std::abs(x - r) <= tol) x = r;
  }
  return Polynomial(std::move(v));
}

std::vector<Complex> Polynomial::roots() const {
  const int n = degree();
  if (n < 1) return {};
  Matrix comp = Matrix::Zero(n, n);
  comp.block(0, 1, n - 1, n - 1).setIdentity();
  for (int i = 0; i < n; ++i) comp(n - 1, i) = -c_[static_cast<std::size_t>(i)] / leading();
  return eig(comp);
}

PolynomialDivision divide(const Polynomial& num, const Polynomial& den) {
  if (den.is_zero()) throw DomainError("divide: zero divisor");
  std::vector<double> r = num.coefficients();
  const int dn = den.degree();
  if (num.degree() < dn) return {Polynomial{}, num};
  std::vector<double> q(static_cast<std::size_t>(num.degree() - dn) + 1, 0.0);
  for (int k = num.degree() - dn; k >= 0; --k) {
    const double coef = r[static_cast<std::size_t>(k + dn)] / den.leading();
    q[static_cast<std::size_t>(k)] = coef;
    for (int j = 0; j <= dn; ++j) r[static_cast<std::size_t>(k + j)] -= coef * den.coefficient(j);
  }
  r.resize(static_cast<std::size_t>(dn));
  return {Polynomial(std::move(q)), Polynomial(std::move(r))};
}

Polynomial poly_from_roots(std::span<const Complex> roots, double tol) {
  std::vector<bool> used(roots.size(), false);
  Polynomial p = Polynomial::constant(1.0);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const Complex r = roots[i];
    const double slack = tol * (1.0 + std::abs(r));
    if (std::abs(r.imag()) <= slack) {
      p = p * Polynomial({-r.real(), 1.0});
      continue;
    }
    std::size_t best = roots.size();
    double best_dist = 0.0;
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(roots[j] - std::conj(r));
      if (best == roots.size() || d < best_dist) {
        best = j;
        best_dist = d;
      }
    }
    if (best == roots.size() || best_dist > slack) {
      std::ostringstream os;
      os << "poly_from_roots: root " << r << " has no conjugate partner";
      throw DomainError(os.str());
    }
    used[best] = true;
    const Complex avg = 0.5 * (r + std::conj(roots[best]));
    p = p * Polynomial({std::norm(avg), -2.0 * avg.real(), 1.0});
  }
  return p;
}

Polynomial characteristic_polynomial(const Matrix& m) {
  const auto spectrum = eig(m);
  return poly_from_roots(spectrum, 1e-8);
}

// ---------------------------------------------------------- TransferFunction

TransferFunction::TransferFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw DomainError("TransferFunction: zero denominator");
}

// ---------------------------------------------------------------- StateSpace

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  const auto n = a_.rows();
  if (a_.cols() != n || b_.rows() != n || c_.cols() != n || d_.rows() != c_.rows() ||
      d_.cols() != b_.cols()) {
    std::ostringstream os;
    os << "StateSpace: nonconformal blocks A " << a_.rows() << 'x' << a_.cols() << ", B "
       << b_.rows() << 'x' << b_.cols() << ", C " << c_.rows() << 'x' << c_.cols() << ", D "
       << d_.rows() << 'x' << d_.cols();
    throw DimensionError(os.str());
  }
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite() || !d_.allFinite()) {
    throw DomainError("StateSpace: non-finite entry");
  }
}

StateSpace StateSpace::gain(double d) {
  return StateSpace(Matrix(0, 0), Matrix(0, 1), Matrix(1, 0), Matrix::Constant(1, 1, d));
}

CMatrix StateSpace::response(Complex z) const {
  const auto n = states();
  CMatrix result = d_.cast<Complex>();
  if (n == 0) return result;
  CMatrix resolvent = z * CMatrix::Identity(n, n) - a_.cast<Complex>();
  CMatrix x = resolvent.partialPivLu().solve(b_.cast<Complex>());
  result += c_.cast<Complex>() * x;
  return result;
}

Complex StateSpace::operator()(Complex z) const {
  if (!siso()) throw DimensionError("StateSpace: scalar response requires a SISO system");
  return response(z)(0, 0);
}

// ------------------------------------------------------------------- spectra

std::vector<Complex> eig(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("eig: matrix is not square");
  if (m.size() == 0) return {};
  if (!m.allFinite()) throw DomainError("eig: non-finite entry");
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("eig: QR iteration did not converge");
  const CVector& v = es.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

EigenDecomposition eig_with_vectors(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("eig: matrix is not square");
  if (m.size() == 0) return {{}, CMatrix(0, 0)};
  Eigen::EigenSolver<Matrix> es(m, true);
  if (es.info() != Eigen::Success) throw NumericalError("eig: QR iteration did not converge");
  EigenDecomposition out;
  const CVector& v = es.eigenvalues();
  out.values.assign(v.data(), v.data() + v.size());
  out.vectors = es.eigenvectors();
  const double scale = std::max(1.0, m.norm());
  const CMatrix mc = m.cast<Complex>();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const CVector col = out.vectors.col(i);
    const double res = (mc * col - v(i) * col).norm();
    if (res > 1e-8 * scale * std::max(1.0, col.norm())) {
      std::ostringstream os;
      os << "eig: eigenpair residual " << res << " exceeds tolerance for eigenvalue " << v(i);
      throw NumericalError(os.str());
    }
  }
  return out;
}

TransferFunction to_transfer_function(const StateSpace& sys) {
  if (!sys.siso()) throw DimensionError("to_transfer_function: SISO systems only");
  const double d = sys.D()(0, 0);
  if (sys.states() == 0) return {Polynomial::constant(d), Polynomial::constant(1.0)};
  const Polynomial den = characteristic_polynomial(sys.A());
  const Polynomial closed = characteristic_polynomial(sys.A() - sys.B() * sys.C());
  // C adj(zI - A) B = det(zI - A + BC) - det(zI - A)
  Polynomial num = (closed - den) + den * d;
  return {num.trimmed(1e-13), den};
}

StateSpace realize(const TransferFunction& tf) {
  if (!tf.proper()) throw DomainError("realize: transfer function is not proper");
  const Polynomial& den = tf.denominator();
  const int n = den.degree();
  const double lead = den.leading();
  if (n == 0) return StateSpace::gain(tf.numerator().coefficient(0) / lead);
  const double d = tf.numerator().coefficient(n) / lead;
  const Polynomial rest = tf.numerator() * (1.0 / lead) - den * (d / lead);
  Matrix a = Matrix::Zero(n, n);
  a.block(0, 1, n - 1, n - 1).setIdentity();
  for (int i = 0; i < n; ++i) a(n - 1, i) = -den.coefficient(i) / lead;
  Matrix b = Matrix::Zero(n, 1);
  b(n - 1, 0) = 1.0;
  Matrix c(1, n);
  for (int i = 0; i < n; ++i) c(0, i) = rest.coefficient(i);
  return StateSpace(a, b, c, Matrix::Constant(1, 1, d));
}

StateSpace series_connect(const StateSpace& k, const StateSpace& h) {
  if (h.outputs() != k.inputs()) {
    throw DimensionError("series_connect: output dimension of H differs from input dimension of K");
  }
  const int nh = h.states(), nk = k.states();
  Matrix a = Matrix::Zero(nh + nk, nh + nk);
  a.topLeftCorner(nh, nh) = h.A();
  a.bottomLeftCorner(nk, nh) = k.B() * h.C();
  a.bottomRightCorner(nk, nk) = k.A();
  Matrix b(nh + nk, h.inputs());
  b << h.B(), k.B() * h.D();
  Matrix c(k.outputs(), nh + nk);
  c << k.D() * h.C(), k.C();
  return StateSpace(a, b, c, k.D() * h.D());
}

namespace {

struct HankelPair {
  Matrix hankel;
  Matrix shifted;
};

HankelPair block_hankel(const StateSpace& g) {
  const int n = g.states(), m = g.inputs(), q = g.outputs();
  std::vector<Matrix> markov;
  const int depth = 4 * n;
  markov.reserve(static_cast<std::size_t>(2 * depth));
  Matrix ak_b = g.B();
  for (int k = 0; k < 2 * depth; ++k) {
    markov.push_back(g.C() * ak_b);
    ak_b = g.A() * ak_b;
  }
  HankelPair out{Matrix(depth * q, depth * m), Matrix(depth * q, depth * m)};
  for (int i = 0; i < depth; ++i) {
    for (int j = 0; j < depth; ++j) {
      out.hankel.block(i * q, j * m, q, m) = markov[static_cast<std::size_t>(i + j)];
      out.shifted.block(i * q, j * m, q, m) = markov[static_cast<std::size_t>(i + j + 1)];
    }
  }
  return out;
}

}  // namespace

Vector hankel_singular_values(const StateSpace& g) {
  if (g.states() == 0) return Vector(0);
  const auto h = block_hankel(g);
  return Eigen::JacobiSVD<Matrix>(h.hankel).singularValues();
}

StateSpace minimal_realization(const StateSpace& g, double tol) {
  if (!(tol > 0.0)) throw DomainError("minimal_realization: tolerance must be positive");
  const int n = g.states(), m = g.inputs(), q = g.outputs();
  if (n == 0) return g;
  const auto h = block_hankel(g);
  Eigen::JacobiSVD<Matrix> svd(h.hankel, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s(0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (smax > 0.0 && s(i) > tol * smax) ++r;
  }
  r = std::min(r, n);
  if (r == n) return g;
  if (r == 0) return StateSpace(Matrix(0, 0), Matrix(0, m), Matrix(q, 0), g.D());
  const Vector sqrt_s = s.head(r).cwiseSqrt();
  const Vector inv_sqrt_s = sqrt_s.cwiseInverse();
  const Matrix ur = svd.matrixU().leftCols(r);
  const Matrix vr = svd.matrixV().leftCols(r);
  const Matrix observ = ur * sqrt_s.asDiagonal();
  const Matrix control = sqrt_s.asDiagonal() * vr.transpose();
  Matrix a = inv_sqrt_s.asDiagonal() * ur.transpose() * h.shifted * vr * inv_sqrt_s.asDiagonal();
  return StateSpace(a, control.leftCols(m), observ.topRows(q), g.D());
}

double response_mismatch(const StateSpace& a, const StateSpace& b, int samples, std::uint64_t seed) {
  if (a.inputs() != b.inputs() || a.outputs() != b.outputs()) {
    throw DimensionError("response_mismatch: systems have different port counts");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(1.05, 1.6);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Complex z = std::polar(radius(rng), angle(rng));
    const CMatrix ra = a.response(z), rb = b.response(z);
    const double denom = std::max({ra.norm(), rb.norm(), 1e-300});
    worst = std::max(worst, (ra - rb).norm() / denom);
  }
  return worst;
}

}  // namespace imsynth::numkit
