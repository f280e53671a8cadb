#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "imsynth/errors.hpp"
#include "imsynth/exo.hpp"
#include "imsynth/lmi_systems.hpp"
#include "imsynth/simkit.hpp"
#include "imsynth/synth.hpp"

using namespace imsynth;
using numkit::Complex;
using numkit::Matrix;
using numkit::Vector;

namespace {

constexpr double kPi = std::numbers::pi;

plant::PlantRealization plant_for(std::vector<Complex> lambda) {
  return plant::build_H(exo::harmonic_closure(lambda, exo::HarmonicPolicy::closure()));
}

plant::PlantRealization sixth_plant() {
  return plant_for({std::polar(1.0, kPi / 3), std::polar(1.0, -kPi / 3)});
}

bool analysis_feasible(const plant::Algorithm& alg, double rho) {
  const auto pl = plant_for({1.0});
  const auto k = synth::factor_controller(alg, pl);
  return synth::analyze_at(k, pl, 1.0, 10.0, rho, 1).feasible();
}

const lmi::Constraint& named(const lmi::LmiProblem& p, const std::string& name) {
  for (const auto& c : p.constraints()) {
    if (c.name == name) return c;
  }
  throw std::runtime_error("no constraint " + name);
}

void check_affine(const lmi::LmiProblem& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector x(p.num_vars()), y(p.num_vars());
  for (int i = 0; i < p.num_vars(); ++i) {
    x(i) = g(rng);
    y(i) = g(rng);
  }
  const Vector mid = 0.5 * (x + y);
  for (const auto& c : p.constraints()) {
    const Matrix fx = c.f.evaluate(x), fy = c.f.evaluate(y), fm = c.f.evaluate(mid);
    const double scale = 1.0 + std::max(fx.cwiseAbs().maxCoeff(), fy.cwiseAbs().maxCoeff());
    CHECK((fm - 0.5 * (fx + fy)).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

}  // namespace

TEST_CASE("analysis: gradient descent is certified at 0.83 and refused at 0.80") {
  const auto gd = simkit::baseline_method(simkit::Baseline::GradientDescent, 1.0, 10.0);
  CHECK(analysis_feasible(gd, 0.83));
  CHECK_FALSE(analysis_feasible(gd, 0.80));
}

TEST_CASE("analysis: triple momentum is certified at 0.70") {
  const auto tm = simkit::baseline_method(simkit::Baseline::TripleMomentum, 1.0, 10.0);
  CHECK(analysis_feasible(tm, 0.70));
}

TEST_CASE("analysis assembly is affine and the witness re-verifies") {
  const auto gd = simkit::baseline_method(simkit::Baseline::GradientDescent, 1.0, 10.0);
  const auto pl = plant_for({1.0});
  const auto k = synth::factor_controller(gd, pl);
  const auto cl = transform::close_loop_parametric(pl, 1.0, 10.0, 0.85, 2, k);
  auto ap = lmi::assemble_analysis(cl);
  check_affine(ap.problem, 1);
  const auto res = lmi::solve_feasibility(ap.problem);
  REQUIRE(res.feasible());
  const auto v = lmi::verify_point(ap.problem, res.x);
  CHECK(v.ok);
  CHECK(v.worst_residual == doctest::Approx(res.worst_residual).epsilon(1e-6));
  const Vector lambda = ap.lambda_value(res.x);
  CHECK(lambda(0) == doctest::Approx(1.0));
  CHECK_NOTHROW(transform::MultiplierParams::make(lambda, 0.85).validate(1e-9));
}

TEST_CASE("fixed-multiplier synthesis dimensions for six harmonics") {
  const auto pl = sixth_plant();
  const double rho = 0.97;
  const auto params = transform::MultiplierParams::make(Vector::Ones(2).cwiseProduct(Vector::LinSpaced(2, 1.0, -0.02)), rho);
  const auto ph = transform::assemble_transformed_plant(pl, 1.0, 10.0, rho, params);
  const auto fp = lmi::assemble_fixed_multiplier_synthesis(ph, params);
  CHECK(fp.U_hat.cols() == 7);
  CHECK(named(fp.problem, "coupling").size() == 14);
  CHECK(fp.Xhat.rows == 7);
  CHECK(fp.Yhat.rows == 7);
  check_affine(fp.problem, 2);
}

TEST_CASE("fixed-multiplier synthesis is feasible with the convex-synthesis multiplier") {
  const auto pl = plant_for({1.0});
  const double rho = 0.70;
  auto sp = lmi::assemble_convex_synthesis(pl, 1.0, 10.0, rho, 1);
  const auto res = lmi::solve_feasibility(sp.problem);
  REQUIRE(res.feasible());
  const auto cert = lmi::extract_certificate(sp, pl, res);
  const auto ph = transform::assemble_transformed_plant(pl, 1.0, 10.0, rho, cert.lambda);
  auto fp = lmi::assemble_fixed_multiplier_synthesis(ph, cert.lambda);
  CHECK(lmi::solve_feasibility(fp.problem).feasible());
}

TEST_CASE("convex synthesis brackets the paper rate for six harmonics") {
  const auto pl = sixth_plant();
  auto hi = lmi::assemble_convex_synthesis(pl, 1.0, 10.0, 0.97, 1);
  const auto rh = lmi::solve_feasibility(hi.problem);
  REQUIRE(rh.feasible());
  CHECK(lmi::verify_point(hi.problem, rh.x).ok);
  auto lo = lmi::assemble_convex_synthesis(pl, 1.0, 10.0, 0.90, 1);
  CHECK(lmi::solve_feasibility(lo.problem).status == lmi::Status::Infeasible);
  check_affine(hi.problem, 3);
}

TEST_CASE("Sylvester equation for ell = 1 has the closed-form solution") {
  const auto pl = sixth_plant();
  const double mu = 1.0, rho = 0.97;
  auto sp = lmi::assemble_convex_synthesis(pl, mu, 10.0, rho, 1);
  const auto res = lmi::solve_feasibility(sp.problem);
  REQUIRE(res.feasible());
  const auto cert = lmi::extract_certificate(sp, pl, res);
  const double l1 = cert.lambda.lambda(1);
  const Matrix closed = -mu * l1 * pl.A.inverse() * pl.B;
  CHECK((cert.N - closed).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + closed.cwiseAbs().maxCoeff()));
  CHECK(cert.sylvester_residual <= 1e-10 * cert.sylvester_scale);
  CHECK(lmi::sylvester_residual(pl, mu, rho, closed, cert.lambda.lambda) < 1e-12);
}

TEST_CASE("convex synthesis preconditions") {
  const auto pl = sixth_plant();
  CHECK_THROWS_AS(lmi::assemble_convex_synthesis(pl, 10.0, 10.0, 0.9, 1), DomainError);
  CHECK_THROWS_AS(lmi::assemble_convex_synthesis(pl, 1.0, 10.0, 1.0, 1), DomainError);
  CHECK_THROWS_AS(lmi::assemble_convex_synthesis(pl, 1.0, 10.0, 0.9, 0), DomainError);
}

TEST_CASE("convex synthesis feasibility is monotone in rho on a grid") {
  const auto pl = plant_for({1.0});
  bool seen_feasible = false;
  for (double rho = 0.60; rho < 0.8; rho += 0.02) {
    auto sp = lmi::assemble_convex_synthesis(pl, 1.0, 10.0, rho, 1);
    const bool f = lmi::solve_feasibility(sp.problem).feasible();
    if (seen_feasible) CHECK(f);
    seen_feasible = seen_feasible || f;
  }
  CHECK(seen_feasible);
}

TEST_CASE("sparse dump layout") {
  lmi::LmiProblem p;
  const auto x = p.add_symmetric("X", 2);
  Matrix c(2, 2);
  c << 1.0, 0.5, 0.5, 2.0;
  p.add_lmi("X-C", p.expr(x) - lmi::AffineExpr(c), 0.25);
  p.add_equality(lmi::trace(p.expr(x)) - lmi::AffineExpr(Matrix::Constant(1, 1, 3.0)));
  std::ostringstream os;
  p.write_sparse(os);
  const std::string s = os.str();
  CHECK(s.find("# vars 3 lmis 1 equalities 1\n") == 0);
  CHECK(s.find("# lmi 1 X-C size 2 margin 0.25\n") != std::string::npos);
  // constant block: entries of -C on the upper triangle
  CHECK(s.find("1 1 1 1 0 -1\n") != std::string::npos);
  CHECK(s.find("1 1 1 2 0 -0.5\n") != std::string::npos);
  CHECK(s.find("1 1 2 2 0 -2\n") != std::string::npos);
  // X(0,0) is decision variable 1
  CHECK(s.find("1 1 1 1 1 1\n") != std::string::npos);
  // equality row: x1 + x3 = 3
  CHECK(s.find("0 1 1 1 0 3\n") != std::string::npos);
  CHECK(s.find("0 1 1 1 1 1\n") != std::string::npos);
  CHECK(s.find("0 1 1 1 3 1\n") != std::string::npos);
}

TEST_CASE("verify_point is independent of the solver") {
  lmi::LmiProblem p;
  const auto x = p.add_scalar("x");
  p.add_lmi("x>=2", p.expr(x) - lmi::AffineExpr(Matrix::Constant(1, 1, 2.0)));
  Vector v(1);
  v << 1.0;
  const auto bad = lmi::verify_point(p, v);
  CHECK_FALSE(bad.ok);
  CHECK(bad.worst_constraint == "x>=2");
  CHECK(bad.worst_residual == doctest::Approx(-1.0));
  v << 2.5;
  CHECK(lmi::verify_point(p, v).ok);
}
