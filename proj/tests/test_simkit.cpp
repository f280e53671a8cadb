#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "imsynth/errors.hpp"
#include "imsynth/exo.hpp"
#include "imsynth/simkit.hpp"

using namespace imsynth;
using namespace imsynth::simkit;

namespace {

double logistic_value(const Objective& obj, double z, double t) {
  return 0.5 * (z - t) * (z - t) + obj.a * std::log1p(std::exp(obj.b * z));
}

double quadratic_value(const Objective& obj, const Vector& z, const Vector& t) {
  return z.dot(obj.Q * z) + t.dot(z);
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Trace trace_of(std::vector<double> grad, std::vector<double> rel = {}) {
  Trace t;
  t.grad_norm = std::move(grad);
  t.relative_error = rel.empty() ? std::vector<double>(t.grad_norm.size(), 0.0) : std::move(rel);
  return t;
}

}  // namespace

TEST_CASE("logistic gradient matches central differences") {
  const auto obj = paper_logistic_instance();
  CHECK(obj.mu == 1.0);
  CHECK(obj.L == 10.0);
  const Vector theta = vec({0.7, -0.3, 1.0});
  for (double z : {-2.0, -0.4, 0.0, 0.3, 1.7}) {
    const double h = 1e-6;
    const double fd = (logistic_value(obj, z + h, theta(0)) - logistic_value(obj, z - h, theta(0))) / (2 * h);
    CHECK(gradient(obj, vec({z}), theta)(0) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("quadratic gradient matches central differences") {
  Matrix q(2, 2);
  q << 2.0, 0.5, 0.5, 1.0;
  const auto obj = quadratic_objective(q, Matrix::Identity(2, 2), vec({1.0, -1.0}));
  const Vector z = vec({0.3, -0.8}), t = vec({1.0, 2.0});
  const Vector g = gradient(obj, z, t);
  for (int i = 0; i < 2; ++i) {
    Vector e = Vector::Zero(2);
    e(i) = 1e-6;
    const double fd = (quadratic_value(obj, z + e, t) - quadratic_value(obj, z - e, t)) / 2e-6;
    CHECK(g(i) == doctest::Approx(fd).epsilon(1e-7));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  CHECK(obj.mu == doctest::Approx(2 * es.eigenvalues()(0)));
  CHECK(obj.L == doctest::Approx(2 * es.eigenvalues()(1)));
}

TEST_CASE("objective construction errors") {
  CHECK_THROWS_AS(quadratic_objective(-Matrix::Identity(1, 1), scalar(1.0), vec({0.0})), DomainError);
  CHECK_THROWS_AS(quadratic_objective(Matrix::Identity(2, 2), scalar(1.0), vec({0.0})), DimensionError);
  CHECK_THROWS_AS(logistic_objective(-1.0, 1.0, scalar(1.0), vec({0.0})), DomainError);
  CHECK_THROWS_AS(logistic_objective(1.0, 1.0, scalar(1.0), vec({0.0, 1.0})), DimensionError);
}

TEST_CASE("logistic optimizer agrees with plain bisection") {
  const auto obj = paper_logistic_instance();
  for (double t : {1.0, -0.5, 0.0, 2.5}) {
    double lo = -20.0, hi = 20.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (mid - t + obj.a * obj.b / (1.0 + std::exp(-obj.b * mid)) > 0.0 ? hi : lo) = mid;
    }
    const Vector theta = vec({t, 0.0, 1.0});
    const Vector z = track_optimizer(obj, theta);
    CHECK(z(0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
    CHECK(std::abs(gradient(obj, z, theta)(0)) <= 1e-12);
  }
}

TEST_CASE("quadratic optimizer solves 2 Q z = -theta") {
  Matrix q(2, 2);
  q << 3.0, 1.0, 1.0, 2.0;
  const auto obj = quadratic_objective(q, Matrix::Identity(2, 2), vec({1.0, 1.0}));
  const Vector t = vec({0.4, -2.0});
  const Vector z = track_optimizer(obj, t);
  CHECK((2.0 * q * z + t).norm() < 1e-12);
}

TEST_CASE("gradient descent contracts by 9/11 on a static quadratic") {
  const auto gd = baseline_method(Baseline::GradientDescent, 1.0, 10.0);
  const auto obj = quadratic_objective(scalar(0.5), scalar(1.0), vec({2.0}));
  const auto tr = run_method(gd, obj, 30);
  REQUIRE(tr.size() == 30);
  for (int k = 0; k + 1 < 25; ++k) {
    CHECK(tr.grad_norm[k + 1] / tr.grad_norm[k] == doctest::Approx(9.0 / 11.0).epsilon(1e-9));
  }
  CHECK(tr.z_star[5](0) == doctest::Approx(-2.0));
}

TEST_CASE("zero data gives a zero trace") {
  const auto tm = baseline_method(Baseline::TripleMomentum, 1.0, 10.0);
  const auto obj = quadratic_objective(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Vector::Zero(2));
  const auto tr = run_method(tm, obj, 20);
  for (int k = 0; k < tr.size(); ++k) {
    CHECK(tr.grad_norm[k] == 0.0);
    CHECK(tr.tracking_error[k] == 0.0);
  }
}

TEST_CASE("coordinates evolve independently for decoupled problems") {
  const auto tm = baseline_method(Baseline::TripleMomentum, 1.0, 10.0);
  const Vector q = vec({0.5, 2.0, 4.5});
  const Vector s = vec({1.0, -1.0, 1.0});
  const Vector t0 = vec({1.0, 0.5, -2.0});
  const auto joint = run_method(tm, quadratic_objective(Matrix(q.asDiagonal()), Matrix(s.asDiagonal()), t0), 40);
  for (int j = 0; j < 3; ++j) {
    const auto single = run_method(tm, quadratic_objective(scalar(q(j)), scalar(s(j)), vec({t0(j)})), 40);
    for (int k = 0; k < 40; ++k) {
      CHECK(joint.z[k](j) == doctest::Approx(single.z[k](0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("run_method initial state and divergence") {
  const auto gd = baseline_method(Baseline::GradientDescent, 1.0, 10.0);
  const auto obj = quadratic_objective(scalar(0.5), scalar(1.0), vec({0.0}));
  const auto tr = run_method(gd, obj, 3, vec({4.0}));
  CHECK(tr.z[0](0) == 4.0);
  CHECK_THROWS_AS(run_method(gd, obj, 3, vec({4.0, 1.0})), DimensionError);
  const plant::Algorithm blowup(Matrix::Ones(1, 1), scalar(-5.0), Matrix::Ones(1, 1));
  CHECK_THROWS_AS(run_method(blowup, quadratic_objective(scalar(5.0), scalar(1.0), vec({1.0})), 400),
                  NumericalError);
}

TEST_CASE("baseline parameters") {
  const auto gd = baseline_method(Baseline::GradientDescent, 1.0, 10.0);
  CHECK(gd.info().rho == doctest::Approx(9.0 / 11.0));
  const auto tm = baseline_method(Baseline::TripleMomentum, 1.0, 10.0);
  CHECK(tm.info().rho == doctest::Approx(1.0 - std::sqrt(0.1)));
  CHECK(parse_baseline("gd") == Baseline::GradientDescent);
  CHECK(parse_baseline(to_string(Baseline::TripleMomentum)) == Baseline::TripleMomentum);
  CHECK_THROWS_AS(parse_baseline("newton"), DomainError);
}

TEST_CASE("asymptotic relative error averages the tail") {
  const auto t = trace_of({1, 1, 1, 1}, {1.0, 2.0, 3.0, 4.0});
  CHECK(asymptotic_relative_error(t, 2) == doctest::Approx(3.5));
  CHECK(asymptotic_relative_error(t, 4) == doctest::Approx(2.5));
  CHECK_THROWS_AS(asymptotic_relative_error(t, 0), DomainError);
  CHECK_THROWS_AS(asymptotic_relative_error(t, 5), DomainError);
}

TEST_CASE("envelope fit and violations") {
  std::vector<double> g;
  for (int k = 0; k < 60; ++k) g.push_back(std::pow(0.5, k));
  const auto ok = fit_envelope(trace_of(g), 0.6, 20);
  CHECK(ok.holds());
  CHECK(ok.c == doctest::Approx(1.0));

  auto bumped = g;
  bumped[40] = 1e-3;
  const auto bad = fit_envelope(trace_of(bumped), 0.6, 20);
  CHECK_FALSE(bad.holds());
  CHECK(bad.first_violation == 40);

  auto floored = g;
  floored[50] = 1e-13;
  for (int k = 51; k < 60; ++k) floored[k] = 1e-13;
  CHECK(fit_envelope(trace_of(floored), 0.6, 20, 1e-12).holds());
  CHECK_THROWS_AS(fit_envelope(trace_of(g), 1.0, 20), DomainError);
}

TEST_CASE("theta grid") {
  const auto grid = theta_grid(25);
  REQUIRE(grid.size() == 25);
  CHECK(grid.front().radians == 0.0);
  CHECK(grid.back().radians == doctest::Approx(M_PI));
  CHECK(grid[12].radians == doctest::Approx(M_PI / 2));
  REQUIRE(grid[1].pi_fraction.has_value());
  CHECK(grid[1].pi_fraction->second == 24);
  CHECK_THROWS_AS(theta_grid(1), DomainError);
}

TEST_CASE("figure-1 exosystem") {
  const Matrix s = figure1_exosystem(5);
  CHECK((s.transpose() * s - Matrix::Identity(5, 5)).norm() < 1e-14);
  CHECK(s(4, 4) == 1.0);
  const Matrix s6 = figure1_exosystem(6);
  CHECK(s6(4, 4) == doctest::Approx(std::cos(3 * M_PI / 7)));
  CHECK(figure1_exosystem(2)(0, 0) == doctest::Approx(std::cos(M_PI / 7)));
  CHECK(figure1_exosystem(1)(0, 0) == 1.0);
}

TEST_CASE("figure-1 output is deterministic across worker counts") {
  Figure1Config cfg;
  cfg.orders = {1, 4};
  cfg.seeds = 3;
  cfg.steps = 200;
  cfg.window = 50;
  std::ostringstream a, b;
  write_figure1_csv(a, run_figure1(cfg));
  cfg.workers = 3;
  write_figure1_csv(b, run_figure1(cfg));
  CHECK(a.str() == b.str());
  CHECK(a.str().find("gradient") != std::string::npos);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
}
