#include "imsynth/transform.hpp"

#include <cmath>
#include <sstream>

#include "imsynth/errors.hpp"

namespace imsynth::transform {

double MultiplierParams::weighted_sum() const {
  double s = 0.0;
  for (int j = 0; j <= ell(); ++j) s += std::pow(rho, -j) * lambda(j);
  return s;
}

void MultiplierParams::validate(double tol) const {
  if (ell() < 1) throw DomainError("multiplier needs ell >= 1 (lambda_0 and at least lambda_1)");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("multiplier rate must lie in (0, 1)");
  for (int j = 1; j <= ell(); ++j) {
    if (lambda(j) > tol) {
      std::ostringstream os;
      os << "multiplier violates lambda_" << j << " <= 0 (lambda_" << j << " = " << lambda(j) << ')';
      throw ConstraintError(os.str());
    }
  }
  const double s = weighted_sum();
  if (s < -tol) {
    std::ostringstream os;
    os << "multiplier violates sum_j rho^-j lambda_j >= 0 (sum = " << s << " at rho = " << rho
       << ')';
    throw ConstraintError(os.str());
  }
}

MultiplierParams MultiplierParams::make(Vector lambda, double rho) {
  MultiplierParams p{std::move(lambda), rho};
  p.validate();
  return p;
}

StateSpace rho_weight(const StateSpace& sys, double rho) {
  if (!(rho > 0.0)) throw DomainError("rho_weight: rho must be positive");
  return StateSpace(sys.A() / rho, sys.B() / rho, sys.C(), sys.D());
}

StateSpace zf_filter(const MultiplierParams& params) {
  params.validate();
  const int ell = params.ell();
  Matrix a = Matrix::Zero(ell, ell);
  if (ell > 1) a.block(0, 1, ell - 1, ell - 1).setIdentity();
  Matrix b = Matrix::Zero(ell, 1);
  b(ell - 1, 0) = 1.0;
  Matrix c(1, ell);
  for (int i = 0; i < ell; ++i) c(0, i) = params.lambda(ell - i);
  return StateSpace(a, b, c, Matrix::Constant(1, 1, params.lambda(0)));
}

namespace detail {

void check_sector(double mu, double L) {
  if (!(mu > 0.0 && mu < L)) {
    std::ostringstream os;
    os << "sector parameters need 0 < mu < L (mu = " << mu << ", L = " << L << ')';
    throw DomainError(os.str());
  }
}

TransformedPlant transformed_plant_unchecked(const plant::PlantRealization& plant, double mu,
                                             double L, double rho, const Vector& lambda) {
  const int ell = static_cast<int>(lambda.size()) - 1;
  const int np = plant.n();
  const int n = ell + np;
  Matrix af = Matrix::Zero(ell, ell);
  if (ell > 1) af.block(0, 1, ell - 1, ell - 1).setIdentity();
  Matrix bf = Matrix::Zero(ell, 1);
  bf(ell - 1, 0) = 1.0;
  Matrix cf(1, ell);
  for (int i = 0; i < ell; ++i) cf(0, i) = lambda(ell - i);
  const double df = lambda(0);

  TransformedPlant t;
  t.ell = ell;
  t.n_p = np;
  t.mu = mu;
  t.L = L;
  t.rho = rho;
  t.A = Matrix::Zero(n, n);
  t.A.topLeftCorner(ell, ell) = af;
  t.A.bottomRightCorner(np, np) = plant.A / rho;
  t.Bw = Matrix(n, 1);
  t.Bw << -bf, plant.B / rho;
  t.B = Matrix(n, 1);
  t.B << (L - mu) * bf, mu * plant.B / rho;
  t.Cz = Matrix::Zero(1, n);
  t.Cz.leftCols(ell) = cf;
  t.Dzw = Matrix::Constant(1, 1, -df);
  t.Dz = Matrix::Constant(1, 1, (L - mu) * df);
  t.C = Matrix::Zero(1, n);
  t.C.rightCols(np) = plant.C;
  return t;
}

}  // namespace detail

TransformedPlant assemble_transformed_plant(const plant::PlantRealization& plant, double mu,
                                            double L, double rho, const MultiplierParams& params) {
  detail::check_sector(mu, L);
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("assemble_transformed_plant: rho must lie in (0, 1)");
  if (std::abs(params.rho - rho) > 1e-12) {
    throw DomainError("assemble_transformed_plant: multiplier was validated at a different rate");
  }
  params.validate();
  return detail::transformed_plant_unchecked(plant, mu, L, rho, params.lambda);
}

ClosedLoop close_loop(const TransformedPlant& phat, const StateSpace& k) {
  if (!k.siso()) throw DimensionError("close_loop: controller must be SISO");
  const StateSpace kw = rho_weight(k, phat.rho);
  const int n = phat.states(), nc = kw.states();
  const double dk = kw.D()(0, 0);
  ClosedLoop cl;
  cl.A = Matrix::Zero(n + nc, n + nc);
  cl.A.topLeftCorner(n, n) = phat.A + phat.B * dk * phat.C;
  cl.A.topRightCorner(n, nc) = phat.B * kw.C();
  cl.A.bottomLeftCorner(nc, n) = kw.B() * phat.C;
  cl.A.bottomRightCorner(nc, nc) = kw.A();
  cl.B = Matrix::Zero(n + nc, 1);
  cl.B.topRows(n) = phat.Bw;
  cl.C = Matrix::Zero(1, n + nc);
  cl.C.leftCols(n) = phat.Cz + phat.Dz * dk * phat.C;
  cl.C.rightCols(nc) = phat.Dz * kw.C();
  cl.D = phat.Dzw;
  return cl;
}

ClosedLoop ParametricClosedLoop::at(const Vector& lambda) const {
  if (lambda.size() != static_cast<Eigen::Index>(C_terms.size())) {
    throw DimensionError("ParametricClosedLoop: wrong number of multiplier coefficients");
  }
  ClosedLoop cl{A, B, Matrix::Zero(1, A.rows()), Matrix::Zero(1, 1)};
  for (std::size_t j = 0; j < C_terms.size(); ++j) {
    cl.C += lambda(static_cast<Eigen::Index>(j)) * C_terms[j];
    cl.D(0, 0) += lambda(static_cast<Eigen::Index>(j)) * D_terms[j];
  }
  return cl;
}

ParametricClosedLoop close_loop_parametric(const plant::PlantRealization& plant, double mu,
                                           double L, double rho, int ell, const StateSpace& k) {
  detail::check_sector(mu, L);
  if (ell < 1) throw DomainError("close_loop_parametric: ell must be at least 1");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("close_loop_parametric: rho must lie in (0, 1)");
  ParametricClosedLoop out;
  out.rho = rho;
  for (int j = 0; j <= ell; ++j) {
    Vector unit = Vector::Zero(ell + 1);
    unit(j) = 1.0;
    const auto cl = close_loop(detail::transformed_plant_unchecked(plant, mu, L, rho, unit), k);
    if (j == 0) {
      out.A = cl.A;
      out.B = cl.B;
    }
    out.C_terms.push_back(cl.C);
    out.D_terms.push_back(cl.D(0, 0));
  }
  return out;
}

}  // namespace imsynth::transform
