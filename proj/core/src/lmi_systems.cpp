#include "imsynth/lmi_systems.hpp"

#include <cmath>
#include <sstream>

#include "imsynth/errors.hpp"

namespace imsynth::lmi {

namespace {

AffineExpr constant(Matrix m) { return AffineExpr(std::move(m)); }

AffineExpr identity(int n) { return constant(Matrix::Identity(n, n)); }

/// lambda_0 = 1, lambda_j <= 0, sum_j rho^-j lambda_j >= 0; returns the entries.
std::vector<AffineExpr> add_multiplier_set(LmiProblem& p, const VarBlock& lam, double rho) {
  const AffineExpr all = p.expr(lam);
  std::vector<AffineExpr> entries;
  for (int j = 0; j < lam.rows; ++j) entries.push_back(all.block(j, 0, 1, 1));
  p.add_equality(entries[0] - constant(Matrix::Ones(1, 1)));
  AffineExpr weighted = AffineExpr::zero(1, 1);
  for (int j = 0; j < lam.rows; ++j) {
    if (j > 0) p.add_lmi("lambda_" + std::to_string(j) + "<=0", -entries[j]);
    weighted += std::pow(rho, -j) * entries[j];
  }
  p.add_lmi("sum rho^-j lambda_j>=0", weighted);
  return entries;
}

void add_trace_bound(LmiProblem& p, const AffineExpr& traces, double bound) {
  p.add_lmi("trace bound", constant(Matrix::Constant(1, 1, bound)) - traces);
}

/// Q = [A B]^T X [A B] - diag(X, 0) + sym([C D]^T e) < 0 and X > 0.
void add_analysis_constraints(LmiProblem& p, const VarBlock& xv, const Matrix& a, const Matrix& b,
                              const AffineExpr& cd, const AssemblyOptions& opt) {
  const int n = static_cast<int>(a.rows());
  Matrix ab(n, n + 1);
  ab << a, b;
  Matrix e1 = Matrix::Zero(n, n + 1);
  e1.leftCols(n).setIdentity();
  Matrix e = Matrix::Zero(1, n + 1);
  e(0, n) = 1.0;
  const AffineExpr x = p.expr(xv);
  const AffineExpr q = congruence(ab, x) - congruence(e1, x) + sym(cd.transpose() * e);
  p.add_strict("analysis", -q);
  p.add_strict("X>0", x);
  add_trace_bound(p, trace(x), opt.trace_bound);
}

Matrix stack_cd(const Matrix& c, double d) {
  Matrix cd(1, c.cols() + 1);
  cd << c, d;
  return cd;
}

Matrix annihilator_rows(const Matrix& m, int expected, const char* what) {
  const Matrix k = numkit::kernel_basis(m);
  if (k.cols() != expected) {
    std::ostringstream os;
    os << what << ": kernel basis has " << k.cols() << " columns, expected " << expected;
    throw NumericalError(os.str());
  }
  return k;
}

/// U-hat = diag(I_ell, C_p^perp, 1).
Matrix u_hat(const Matrix& cp, int ell) {
  const int np = static_cast<int>(cp.cols());
  const Matrix cperp = annihilator_rows(cp, np - 1, "C_p annihilator");
  const int n = ell + np;
  Matrix u = Matrix::Zero(n + 1, n);
  u.topLeftCorner(ell, ell).setIdentity();
  if (np > 1) u.block(ell, ell, np, np - 1) = cperp;
  u(n, n - 1) = 1.0;
  return u;
}

}  // namespace

Vector AnalysisProblem::lambda_value(const Vector& x) const {
  return lambda ? Vector(problem.value(*lambda, x).col(0)) : fixed_lambda;
}

AnalysisProblem assemble_analysis(const transform::ParametricClosedLoop& cl,
                                  const AssemblyOptions& opt) {
  AnalysisProblem ap;
  ap.rho = cl.rho;
  ap.problem.set_margin_rel(opt.margin_rel);
  ap.X = ap.problem.add_symmetric("X", cl.states());
  ap.lambda = ap.problem.add_full("lambda", cl.ell() + 1, 1);
  const auto lam = add_multiplier_set(ap.problem, *ap.lambda, cl.rho);
  AffineExpr cd = AffineExpr::zero(1, cl.states() + 1);
  for (int j = 0; j <= cl.ell(); ++j) cd += lam[j] * stack_cd(cl.C_terms[j], cl.D_terms[j]);
  add_analysis_constraints(ap.problem, ap.X, cl.A, cl.B, cd, opt);
  return ap;
}

AnalysisProblem assemble_analysis(const transform::ParametricClosedLoop& cl,
                                  const transform::MultiplierParams& params,
                                  const AssemblyOptions& opt) {
  if (params.ell() != cl.ell()) throw DimensionError("assemble_analysis: multiplier length mismatch");
  if (std::abs(params.rho - cl.rho) > 1e-12) {
    throw DomainError("assemble_analysis: multiplier and closed loop use different rates");
  }
  params.validate(1e-9);
  const auto fixed = cl.at(params.lambda);
  AnalysisProblem ap = assemble_analysis(fixed, opt);
  ap.rho = cl.rho;
  ap.fixed_lambda = params.lambda;
  return ap;
}

AnalysisProblem assemble_analysis(const transform::ClosedLoop& cl, const AssemblyOptions& opt) {
  const auto n = cl.A.rows();
  if (cl.A.cols() != n || cl.B.rows() != n || cl.B.cols() != 1 || cl.C.rows() != 1 ||
      cl.C.cols() != n || cl.D.rows() != 1 || cl.D.cols() != 1) {
    throw DimensionError("assemble_analysis: inconsistent closed-loop realization");
  }
  AnalysisProblem ap;
  ap.problem.set_margin_rel(opt.margin_rel);
  ap.X = ap.problem.add_symmetric("X", static_cast<int>(n));
  add_analysis_constraints(ap.problem, ap.X, cl.A, cl.B, constant(stack_cd(cl.C, cl.D(0, 0))), opt);
  return ap;
}

FixedSynthesisProblem assemble_fixed_multiplier_synthesis(const transform::TransformedPlant& phat,
                                                          const transform::MultiplierParams& params,
                                                          const AssemblyOptions& opt) {
  if (params.ell() != phat.ell) throw DimensionError("fixed synthesis: multiplier length mismatch");
  params.validate(1e-9);
  if (std::abs(phat.Dzw(0, 0) + params.lambda(0)) > 1e-12 * std::max(1.0, std::abs(params.lambda(0)))) {
    throw DomainError("fixed synthesis: transformed plant was built for a different multiplier");
  }
  const int n = phat.states();
  FixedSynthesisProblem fp;
  auto& p = fp.problem;
  p.set_margin_rel(opt.margin_rel);
  fp.Xhat = p.add_symmetric("Xhat", n);
  fp.Yhat = p.add_symmetric("Yhat", n);
  const AffineExpr x = p.expr(fp.Xhat);
  const AffineExpr y = p.expr(fp.Yhat);

  fp.U_hat = u_hat(phat.C.rightCols(phat.n_p), phat.ell);
  const Matrix u1 = fp.U_hat.topRows(n);
  const Matrix u2 = fp.U_hat.bottomRows(1);
  const Matrix m1 = phat.A * u1 + phat.Bw * u2;
  const Matrix r = phat.Cz * u1 + phat.Dzw * u2;
  const Matrix rsym = r.transpose() * u2 + u2.transpose() * r;
  p.add_strict("primal", -(congruence(m1, x) - congruence(u1, x) + constant(rsym)));

  Matrix m(1, n + 1);
  m << phat.B.transpose(), phat.Dz;
  fp.V_hat = annihilator_rows(m, n, "control annihilator").transpose();
  Matrix wx = Matrix::Zero(n + 1, n);
  wx.topRows(n) = -Matrix::Identity(n, n);
  Matrix wa(n + 1, n);
  wa << phat.A, phat.Cz;
  Matrix w3 = Matrix::Zero(n + 1, 1);
  w3(n, 0) = -1.0;
  Matrix w4(n + 1, 1);
  w4 << phat.Bw, phat.Dzw;
  const AffineExpr dual = congruence(wx.transpose(), y) - congruence(wa.transpose(), y) +
                          constant(w3 * w4.transpose() + w4 * w3.transpose());
  p.add_strict("dual", congruence(fp.V_hat.transpose(), dual));
  p.add_strict("coupling", blocks({{y, identity(n)}, {identity(n), x}}));
  add_trace_bound(p, trace(x) + trace(y), opt.trace_bound);
  return fp;
}

ConvexSynthesisProblem assemble_convex_synthesis(const plant::PlantRealization& plant, double mu,
                                                 double L, double rho, int ell,
                                                 const AssemblyOptions& opt) {
  transform::detail::check_sector(mu, L);
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("convex synthesis: rho must lie in (0, 1)");
  if (ell < 1) throw DomainError("convex synthesis: ell must be at least 1");
  const int np = plant.n();
  const int n = np + ell;
  const Matrix& ap = plant.A;
  const Matrix& bp = plant.B;
  Eigen::FullPivLU<Matrix> lu(ap);
  if (!lu.isInvertible()) throw DomainError("convex synthesis: A_p is singular");
  const Matrix ap_inv = lu.inverse();

  ConvexSynthesisProblem sp;
  sp.mu = mu;
  sp.L = L;
  sp.rho = rho;
  sp.ell = ell;
  auto& p = sp.problem;
  p.set_margin_rel(opt.margin_rel);
  sp.lambda = p.add_full("lambda", ell + 1, 1);
  sp.N = p.add_full("N", np, ell);
  sp.Xhat = p.add_symmetric("Xhat", n);
  sp.Ytilde = p.add_symmetric("Ytilde", np);
  const auto lam = add_multiplier_set(p, sp.lambda, rho);
  const AffineExpr ne = p.expr(sp.N);
  const AffineExpr x = p.expr(sp.Xhat);
  const AffineExpr y = p.expr(sp.Ytilde);

  Matrix af = Matrix::Zero(ell, ell);
  if (ell > 1) af.block(0, 1, ell - 1, ell - 1).setIdentity();
  Matrix bf = Matrix::Zero(ell, 1);
  bf(ell - 1, 0) = 1.0;
  std::vector<AffineExpr> cf_parts;
  for (int i = 0; i < ell; ++i) cf_parts.push_back(lam[ell - i]);
  const AffineExpr cf = hcat(cf_parts);

  p.add_equality(ap * ne - rho * (ne * af) + mu * (bp * cf));

  Matrix ahat = Matrix::Zero(n, n);
  ahat.topLeftCorner(ell, ell) = af;
  ahat.bottomRightCorner(np, np) = ap / rho;
  Matrix bw(n, 1);
  bw << -bf, bp / rho;
  const AffineExpr cz = hcat({cf, AffineExpr::zero(1, np)});
  const AffineExpr dzw = -lam[0];

  const Matrix u = u_hat(plant.C, ell);
  const Matrix u1 = u.topRows(n);
  const Matrix u2 = u.bottomRows(1);
  const Matrix m1 = ahat * u1 + bw * u2;
  const AffineExpr r = cz * u1 + dzw * u2;
  p.add_strict("primal", -(congruence(m1, x) - congruence(u1, x) + sym(r.transpose() * u2)));

  AffineExpr tail = AffineExpr::zero(np, np);
  Matrix power = Matrix::Identity(np, np);
  for (int j = 0; j <= ell; ++j) {
    tail += scalar_times(lam[j], std::pow(rho, j) * power);
    power = power * ap_inv;
  }
  const AffineExpr ttilde = hcat({(1.0 / (L - mu)) * ne, tail});

  Matrix m(1, np + 1);
  m << (mu / rho) * bp.transpose(), L - mu;
  const Matrix v = annihilator_rows(m, np, "control annihilator").transpose();
  Matrix w1 = Matrix::Zero(np + 1, np);
  w1.topRows(np) = -Matrix::Identity(np, np);
  Matrix w2 = Matrix::Zero(np + 1, np);
  w2.topRows(np) = ap;
  Matrix w3 = Matrix::Zero(np + 1, 1);
  w3(np, 0) = -1.0;
  const AffineExpr w4 = vcat({ttilde * bw, dzw});
  const AffineExpr dual = congruence(w1.transpose(), y) -
                          (1.0 / (rho * rho)) * congruence(w2.transpose(), y) +
                          sym(w3 * w4.transpose());
  p.add_strict("dual", congruence(v.transpose(), dual));
  p.add_strict("coupling", blocks({{y, ttilde}, {ttilde.transpose(), x}}));
  add_trace_bound(p, trace(x) + trace(y), opt.trace_bound);
  return sp;
}

double sylvester_residual(const plant::PlantRealization& plant, double mu, double rho,
                          const Matrix& n, const Vector& lambda) {
  const int ell = static_cast<int>(lambda.size()) - 1;
  Matrix af = Matrix::Zero(ell, ell);
  if (ell > 1) af.block(0, 1, ell - 1, ell - 1).setIdentity();
  Matrix cf(1, ell);
  for (int i = 0; i < ell; ++i) cf(0, i) = lambda(ell - i);
  return numkit::max_abs(plant.A * n - rho * n * af + mu * plant.B * cf);
}

SynthesisCertificate extract_certificate(const ConvexSynthesisProblem& sp,
                                         const plant::PlantRealization& plant,
                                         const Feasibility& solution) {
  if (!solution.feasible()) throw DomainError("extract_certificate: solution is not feasible");
  SynthesisCertificate cert;
  cert.Xhat = sp.problem.value(sp.Xhat, solution.x);
  cert.Ytilde = sp.problem.value(sp.Ytilde, solution.x);
  cert.N = sp.problem.value(sp.N, solution.x);
  cert.lambda = {sp.problem.value(sp.lambda, solution.x).col(0), sp.rho};
  cert.sylvester_residual = sylvester_residual(plant, sp.mu, sp.rho, cert.N, cert.lambda.lambda);
  cert.sylvester_scale = std::max({1.0, numkit::max_abs(plant.A) * numkit::max_abs(cert.N),
                                   sp.mu * cert.lambda.lambda.lpNorm<Eigen::Infinity>()});
  cert.worst_residual = solution.worst_residual;
  return cert;
}

}  // namespace imsynth::lmi
