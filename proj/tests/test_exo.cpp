#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "imsynth/errors.hpp"
#include "imsynth/exo.hpp"

using namespace imsynth;
using namespace imsynth::exo;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix rotation(double th) {
  Matrix r(2, 2);
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return r;
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
  Matrix m = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

bool angle_close(Complex a, Complex b, double tol) { return std::abs(std::arg(a / b)) < tol; }

/// Brute-force fixpoint of products, independent of harmonic_closure.
std::vector<Complex> brute_closure(const std::vector<Complex>& lambda) {
  std::vector<Complex> set{1.0};
  for (bool grown = true; grown;) {
    grown = false;
    const auto snapshot = set;
    for (Complex s : snapshot) {
      for (Complex l : lambda) {
        const Complex p = s * l;
        bool found = false;
        for (Complex t : set) found = found || angle_close(p, t, 1e-9);
        if (!found) {
          set.push_back(p);
          grown = true;
        }
      }
    }
  }
  return set;
}

bool same_set(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.size() != b.size()) return false;
  for (Complex x : a) {
    bool found = false;
    for (Complex y : b) found = found || angle_close(x, y, 1e-9);
    if (!found) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("validate_exosystem accepts a rotation") {
  const auto e = validate_exosystem(rotation(kPi / 3));
  CHECK(e.p() == 2);
  REQUIRE(e.spectrum.size() == 2);
  bool plus = false, minus = false;
  for (Complex w : e.spectrum) {
    plus = plus || std::abs(w - std::polar(1.0, kPi / 3)) < 1e-12;
    minus = minus || std::abs(w - std::polar(1.0, -kPi / 3)) < 1e-12;
  }
  CHECK(plus);
  CHECK(minus);
}

TEST_CASE("validate_exosystem rejects a contraction") {
  CHECK_THROWS_AS(validate_exosystem(0.9 * Matrix::Identity(2, 2)), AssumptionViolation);
}

TEST_CASE("validate_exosystem rejects a Jordan block") {
  Matrix j(2, 2);
  j << 1, 1, 0, 1;
  CHECK_THROWS_AS(validate_exosystem(j), AssumptionViolation);
}

TEST_CASE("validate_exosystem on stacked rotations") {
  const auto e = validate_exosystem(block_diag(rotation(kPi / 3), rotation(kPi / 2)));
  CHECK(e.spectrum.size() == 4);
  for (Complex w : e.spectrum) CHECK(std::abs(std::abs(w) - 1.0) < 1e-12);
}

TEST_CASE("closure of e^{+-j pi/3} is the sixth roots of unity") {
  const std::vector<Complex> lambda{std::polar(1.0, kPi / 3), std::polar(1.0, -kPi / 3)};
  const auto h = harmonic_closure(lambda, HarmonicPolicy::closure());
  REQUIRE(h.size() == 6);
  for (int k = 0; k < 6; ++k) CHECK(h.contains(std::polar(1.0, k * kPi / 3)));
  CHECK(h.values.front() == Complex(1.0, 0.0));
  CHECK(h.values.back() == Complex(-1.0, 0.0));
  for (Complex w : h.values) CHECK(std::abs(std::pow(w, 6) - 1.0) < 1e-14);
}

TEST_CASE("closure of (1) is {1}") {
  const std::vector<Complex> lambda{1.0};
  const auto h = harmonic_closure(lambda, HarmonicPolicy::closure());
  REQUIRE(h.size() == 1);
  CHECK(h.values[0] == Complex(1.0, 0.0));
}

TEST_CASE("closure of (j, -j) matches brute-force enumeration") {
  const std::vector<Complex> lambda{Complex(0, 1), Complex(0, -1)};
  const auto h = harmonic_closure(lambda, HarmonicPolicy::closure());
  CHECK(h.size() == 4);
  CHECK(same_set(h.values, brute_closure(lambda)));
}

TEST_CASE("closure of an irrational rotation overflows") {
  const std::vector<Complex> lambda{std::polar(1.0, 1.0), std::polar(1.0, -1.0)};
  CHECK_THROWS_AS(harmonic_closure(lambda, HarmonicPolicy::closure(64)), ClosureOverflow);
}

TEST_CASE("closure output is a fixpoint") {
  for (int m : {3, 5, 8, 12}) {
    const std::vector<Complex> lambda{std::polar(1.0, 2 * kPi / m), std::polar(1.0, -2 * kPi / m)};
    const auto h = harmonic_closure(lambda, HarmonicPolicy::closure());
    CHECK(static_cast<int>(h.size()) == m);
    for (Complex a : h.values) {
      CHECK(h.contains(std::conj(a)));
      for (Complex b : h.values) CHECK(h.contains(a * b));
    }
  }
}

TEST_CASE("degree-limited sets are nested and conjugate closed") {
  const std::vector<Complex> lambda{std::polar(1.0, 0.7), std::polar(1.0, -0.7)};
  const auto d1 = harmonic_closure(lambda, HarmonicPolicy::max_degree(1));
  const auto d2 = harmonic_closure(lambda, HarmonicPolicy::max_degree(2));
  CHECK(d1.size() == 3);
  CHECK(d2.size() == 5);
  for (Complex w : d1.values) CHECK(d2.contains(w));
  for (Complex w : d2.values) {
    CHECK(d2.contains(std::conj(w)));
    CHECK(std::abs(std::abs(w) - 1.0) < 1e-9);
  }
  CHECK(d2.contains(1.0));
}

TEST_CASE("step_exosystem") {
  const auto id = validate_exosystem(Matrix::Identity(3, 3));
  Vector t(3);
  t << 1.0, -2.0, 0.5;
  CHECK(step_exosystem(id, t) == t);

  const auto quarter = validate_exosystem(rotation(kPi / 2));
  Vector e1(2);
  e1 << 1.0, 0.0;
  const Vector s = step_exosystem(quarter, e1);
  CHECK(std::abs(s(0)) < 1e-15);
  CHECK(s(1) == doctest::Approx(1.0));

  const auto sixth = validate_exosystem(rotation(kPi / 3));
  Vector x = e1;
  for (int k = 0; k < 6; ++k) x = step_exosystem(sixth, x);
  CHECK((x - e1).norm() < 1e-14);

  CHECK_THROWS_AS(step_exosystem(sixth, t), DimensionError);
}

TEST_CASE("orbit norm is constant for orthogonal S") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  const auto e = validate_exosystem(block_diag(rotation(0.3), rotation(2.1)));
  Vector t(4);
  for (int i = 0; i < 4; ++i) t(i) = g(rng);
  const double n0 = t.norm();
  for (int k = 0; k < 500; ++k) t = step_exosystem(e, t);
  CHECK(t.norm() == doctest::Approx(n0).epsilon(1e-12));
}

TEST_CASE("frequency parsing") {
  const auto a = Frequency::parse("pi/3");
  REQUIRE(a.pi_fraction.has_value());
  CHECK(a.pi_fraction->first == 1);
  CHECK(a.pi_fraction->second == 3);
  CHECK(a.radians == doctest::Approx(kPi / 3));
  CHECK(Frequency::parse("0").radians == 0.0);
  CHECK(Frequency::parse("pi").radians == doctest::Approx(kPi));
  CHECK(Frequency::parse("2*pi/5").radians == doctest::Approx(2 * kPi / 5));
  CHECK(Frequency::parse("2pi/5").radians == doctest::Approx(2 * kPi / 5));
  CHECK(Frequency::parse("0.7853981634").radians == doctest::Approx(kPi / 4).epsilon(1e-10));
  CHECK_THROWS_AS(Frequency::parse("banana"), DomainError);
}

TEST_CASE("eigenvalues_for a frequency") {
  CHECK(eigenvalues_for(Frequency::parse("0")) == std::vector<Complex>{1.0});
  CHECK(eigenvalues_for(Frequency::parse("pi")) == std::vector<Complex>{-1.0});
  const auto p3 = eigenvalues_for(Frequency::parse("pi/3"));
  REQUIRE(p3.size() == 2);
  CHECK(std::abs(p3[0] - std::polar(1.0, kPi / 3)) < 1e-15);
  CHECK(std::abs(p3[1] - std::conj(p3[0])) < 1e-15);
}

TEST_CASE("exosystem_matrix orders rotations before scalar blocks") {
  const std::vector<Frequency> fs{Frequency::parse("0"), Frequency::parse("pi/3")};
  const Matrix s = exosystem_matrix(fs);
  REQUIRE(s.rows() == 3);
  CHECK((s.topLeftCorner(2, 2) - rotation(kPi / 3)).norm() < 1e-15);
  CHECK(s(2, 2) == 1.0);
  CHECK(validate_exosystem(s).p() == 3);
}

TEST_CASE("harmonic policy parsing") {
  CHECK(HarmonicPolicy::parse("closure").kind == HarmonicPolicy::Kind::Closure);
  const auto d = HarmonicPolicy::parse("degree:2");
  CHECK(d.kind == HarmonicPolicy::Kind::Degree);
  CHECK(d.degree == 2);
  CHECK(HarmonicPolicy::parse("3").degree == 3);
  CHECK_THROWS_AS(HarmonicPolicy::parse("sometimes"), DomainError);
}
