#include <doctest.h>

#include "imsynth/lmi.hpp"

using namespace imsynth;
using lmi::Matrix;

TEST_CASE("minimize x subject to x I >= I") {
  lmi::LmiProblem p;
  auto x = p.add_scalar("x");
  const Matrix i2 = Matrix::Identity(2, 2);
  p.add_lmi("xI-I", lmi::scalar_times(p.expr(x), i2) - lmi::AffineExpr(i2));
  p.set_objective(p.expr(x));
  auto r = lmi::solve_feasibility(p);
  REQUIRE(r.feasible());
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("diag(x, -x) >= eps I is infeasible") {
  lmi::LmiProblem p;
  auto x = p.add_scalar("x");
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  p.add_lmi("diag", lmi::scalar_times(p.expr(x), d), 1e-3);
  auto r = lmi::solve_feasibility(p);
  CHECK(r.status == lmi::Status::Infeasible);
}

TEST_CASE("scalar Lyapunov inequality for A = 0.5") {
  lmi::LmiProblem p;
  auto x = p.add_scalar("X");
  auto e = p.expr(x);
  p.add_strict("X>0", e);
  p.add_strict("X-AXA>0", e - 0.25 * e);
  auto r = lmi::solve_feasibility(p);
  REQUIRE(r.feasible());
  CHECK(r.x(0) > 0.0);
  // X = 1 is a witness as well
  lmi::Vector one(1);
  one << 1.0;
  CHECK(lmi::verify_point(p, one).ok);
}
