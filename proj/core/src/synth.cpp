#include "imsynth/synth.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "imsynth/errors.hpp"

namespace imsynth::synth {

namespace {

lmi::SolverOptions tightened() {
  lmi::SolverOptions o;
  o.max_outer = 90;
  o.max_newton = 200;
  o.t_growth = 4.0;
  return o;
}

lmi::SolverOptions centred() {
  lmi::SolverOptions o;
  o.stop_at_feasible = false;
  o.margin_gap = 1e-3;
  return o;
}

struct Probe {
  lmi::Feasibility result;
  std::optional<lmi::SynthesisCertificate> cert;
};

Probe probe(const plant::PlantRealization& pl, const RateQuery& q, double rho,
            const lmi::SolverOptions& opt = {}) {
  auto sp = lmi::assemble_convex_synthesis(pl, q.mu, q.L, rho, q.ell);
  Probe p{lmi::solve_feasibility(sp.problem, opt), std::nullopt};
  if (p.result.feasible()) {
    p.cert = lmi::extract_certificate(sp, pl, p.result);
    if (p.cert->sylvester_residual > 1e-10 * p.cert->sylvester_scale) {
      p.result.status = lmi::Status::Inconclusive;
      p.result.diagnostics = "Sylvester residual above tolerance";
      p.cert.reset();
    }
  }
  return p;
}

BisectionStep step_of(double rho, const lmi::Feasibility& f) {
  return {rho, f.status, f.slack, f.newton_steps};
}

}  // namespace

void RateQuery::validate() const {
  std::vector<std::string> problems;
  if (!(mu > 0.0)) problems.push_back("mu must be positive");
  if (!(mu < L)) problems.push_back("mu must be smaller than L");
  if (!(rho_lo > 0.0 && rho_lo < rho_hi && rho_hi < 1.0)) {
    problems.push_back("rate bracket must satisfy 0 < rho_lo < rho_hi < 1");
  }
  if (!(tol > 0.0)) problems.push_back("tol must be positive");
  if (ell < 1) problems.push_back("ell must be at least 1");
  if (harmonics.values.empty()) problems.push_back("harmonic set is empty");
  if (!problems.empty()) {
    std::string msg = "invalid rate query:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw DomainError(msg);
  }
}

RateSearch search_rate(const RateQuery& q) {
  q.validate();
  const auto pl = plant::build_H(q.harmonics);
  RateSearch out;
  auto top = probe(pl, q, q.rho_hi);
  out.trace.push_back(step_of(q.rho_hi, top.result));
  if (!top.cert) {
    top = probe(pl, q, q.rho_hi, tightened());
    out.trace.push_back(step_of(q.rho_hi, top.result));
  }
  if (!top.cert) {
    std::ostringstream os;
    os << "no algorithm found: convex synthesis is " << lmi::to_string(top.result.status)
       << " at the largest rate tried, rho = " << q.rho_hi << " (" << top.result.diagnostics << ')';
    throw NoAlgorithmFound(os.str());
  }
  double hi = q.rho_hi, lo = q.rho_lo;
  lmi::SynthesisCertificate best = *top.cert;
  auto bottom = probe(pl, q, lo);
  out.trace.push_back(step_of(lo, bottom.result));
  if (bottom.cert) {
    out.warnings.push_back("lower end of the bracket is already feasible; rho* may be smaller than rho_lo");
    out.rho_star = lo;
    out.rho_infeasible = lo;
    out.certificate = *bottom.cert;
    return out;
  }
  while (hi - lo > q.tol) {
    const double mid = 0.5 * (lo + hi);
    auto p = probe(pl, q, mid);
    out.trace.push_back(step_of(mid, p.result));
    if (p.cert) {
      hi = mid;
      best = *p.cert;
    } else {
      if (p.result.status == lmi::Status::Inconclusive) ++out.inconclusive;
      lo = mid;
    }
  }
  // Inconclusive lower ends are re-solved at tightened settings.
  if (lo > q.rho_lo) {
    auto again = probe(pl, q, lo, tightened());
    out.trace.push_back(step_of(lo, again.result));
    if (again.cert) {
      std::ostringstream os;
      os << "non-monotone feasibility: rho = " << lo << " became feasible on re-solve while the bracket was ["
         << lo << ", " << hi << "]; keeping the conservative upper end";
      out.warnings.push_back(os.str());
    }
  }
  for (const auto& a : out.trace) {
    for (const auto& b : out.trace) {
      if (a.status == lmi::Status::Feasible && b.status == lmi::Status::Infeasible && a.rho < b.rho) {
        std::ostringstream os;
        os << "non-monotone feasibility: feasible at " << a.rho << " but infeasible at " << b.rho;
        out.warnings.push_back(os.str());
      }
    }
  }
  out.rho_star = hi;
  out.rho_infeasible = lo;
  out.certificate = best;
  return out;
}

namespace {

StateSpace reconstruct_with_bound(const plant::PlantRealization& pl, double mu, double L,
                                  double rho, const transform::MultiplierParams& lambda_star,
                                  double trace_bound, ReconstructionReport* report) {
  const auto phat = transform::assemble_transformed_plant(pl, mu, L, rho, lambda_star);
  const int n = phat.states();

  // Stage 1: fixed-multiplier synthesis for (Xhat, Yhat).
  lmi::AssemblyOptions s1_opt;
  s1_opt.trace_bound = trace_bound;
  const auto fp = lmi::assemble_fixed_multiplier_synthesis(phat, lambda_star, s1_opt);
  const auto s1 = lmi::solve_feasibility(fp.problem, centred());
  if (!s1.feasible()) {
    throw ReconstructionError("fixed-multiplier synthesis is " + lmi::to_string(s1.status) +
                              " at rho = " + std::to_string(rho) + ": " + s1.diagnostics +
                              "; try a slightly larger rate");
  }
  const Matrix xh = fp.problem.value(fp.Xhat, s1.x);
  const Matrix yh = fp.problem.value(fp.Yhat, s1.x);

  // Completion of (Xhat, Yhat) to a full closed-loop certificate.
  const Matrix i_n = Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(i_n - xh * yh, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) {
    std::ostringstream os;
    os << "completion factorization of I - X Y is ill-conditioned (condition " << cond
       << "); perturb rho slightly";
    throw ReconstructionError(os.str());
  }
  // U V^T = I - X Y with U = W S^{1/2}, then controller coordinates in which
  // the Schur complement X2 - U^T Xhat^{-1} U is the identity.
  const Matrix w = svd.matrixU() * sv.cwiseSqrt().asDiagonal();
  const Matrix x20 = w.transpose() * (xh - yh.inverse()).inverse() * w;
  const Matrix s0 = x20 - w.transpose() * xh.llt().solve(w);
  Eigen::SelfAdjointEigenSolver<Matrix> s0_eig(0.5 * (s0 + s0.transpose()));
  if (!(s0_eig.eigenvalues().minCoeff() > 0.0)) {
    throw ReconstructionError("completion Schur complement is not positive definite");
  }
  const Matrix tc = s0_eig.operatorInverseSqrt();
  const Matrix u = w * tc;
  Matrix xc(2 * n, 2 * n);
  xc << xh, u, u.transpose(), tc * x20 * tc;
  xc = 0.5 * (xc + xc.transpose()).eval();
  Eigen::LLT<Matrix> xc_llt(xc);
  if (xc_llt.info() != Eigen::Success) {
    throw ReconstructionError("completed certificate is not positive definite");
  }
  // Balanced coordinates: with X = R^T R the certificate becomes the identity.
  const Matrix r = xc_llt.matrixU();
  const Matrix r_inv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(2 * n, 2 * n));

  // Stage 2: analysis condition, affine in Theta = [[A_K, B_K], [C_K, D_K]].
  const int nc = n, nn = 2 * n;
  lmi::LmiProblem p;
  p.set_margin_rel(1e-9);
  const auto theta_v = p.add_full("Theta", nc + 1, nc + 1);
  const auto theta = p.expr(theta_v);
  Matrix a0 = Matrix::Zero(nn, nn);
  a0.topLeftCorner(n, n) = phat.A;
  Matrix bt = Matrix::Zero(nn, nc + 1);
  bt.block(0, nc, n, 1) = phat.B;
  bt.block(n, 0, nc, nc).setIdentity();
  Matrix ct = Matrix::Zero(nc + 1, nn);
  ct.block(0, n, nc, nc).setIdentity();
  ct.block(nc, 0, 1, n) = phat.C;
  Matrix bcl = Matrix::Zero(nn, 1);
  bcl.topRows(n) = phat.Bw;
  Matrix cz0 = Matrix::Zero(1, nn);
  cz0.leftCols(n) = phat.Cz;
  Matrix dzsel = Matrix::Zero(1, nc + 1);
  dzsel(0, nc) = phat.Dz(0, 0);
  const lmi::AffineExpr acl = lmi::AffineExpr(a0) + bt * theta * ct;
  const lmi::AffineExpr ccl = lmi::AffineExpr(cz0) + dzsel * theta * ct;
  const lmi::AffineExpr ab = r * lmi::hcat({acl * r_inv, lmi::AffineExpr(bcl)});
  const lmi::AffineExpr cd = lmi::hcat({ccl * r_inv, lmi::AffineExpr(phat.Dzw)});
  Matrix e = Matrix::Zero(1, nn + 1);
  e(0, nn) = 1.0;
  Matrix ipad = Matrix::Zero(nn + 1, nn + 1);
  ipad.topLeftCorner(nn, nn).setIdentity();
  const lmi::AffineExpr q11 = lmi::AffineExpr(ipad) - lmi::sym(cd.transpose() * e);
  p.add_strict("analysis (balanced Schur form)",
               lmi::blocks({{q11, ab.transpose()}, {ab, lmi::AffineExpr(Matrix::Identity(nn, nn))}}));
  const auto s2 = lmi::solve_feasibility(p, centred());
  if (!s2.feasible()) {
    throw ReconstructionError("controller recovery LMI is " + lmi::to_string(s2.status) + ": " +
                              s2.diagnostics + "; try a slightly larger rate");
  }
  const Matrix t = p.value(theta_v, s2.x);
  StateSpace k(rho * t.topLeftCorner(nc, nc), rho * t.topRightCorner(nc, 1),
               t.bottomLeftCorner(1, nc), t.bottomRightCorner(1, 1));

  // Dense re-check of the completed certificate on the actual closed loop.
  lmi::AssemblyOptions check_opt;
  check_opt.trace_bound = std::max(check_opt.trace_bound, 2.0 * xc.trace());
  check_opt.margin_rel = 1e-9;
  const auto cl = transform::close_loop_parametric(pl, mu, L, rho, lambda_star.ell(), k);
  const auto ap = lmi::assemble_analysis(cl, lambda_star, check_opt);
  numkit::Vector xv = numkit::Vector::Zero(ap.problem.num_vars());
  ap.problem.assign(ap.X, xc, xv);
  const auto v = lmi::verify_point(ap.problem, xv);
  if (!v.ok) {
    std::ostringstream os;
    os << "reconstructed controller fails the closed-loop analysis check (" << v.worst_constraint
       << " residual " << v.worst_residual << ')';
    throw ReconstructionError(os.str());
  }
  if (report) {
    report->stage1_margin = s1.slack;
    report->stage2_margin = s2.slack;
    report->completion_condition = cond;
    report->analysis_residual = v.worst_residual;
    report->trace_bound = trace_bound;
  }
  return k;
}

}  // namespace

StateSpace reconstruct_controller(const plant::PlantRealization& pl, double mu, double L, double rho,
                                  const transform::MultiplierParams& lambda_star,
                                  ReconstructionReport* report) {
  std::string errors;
  for (double bound : {1e4, 1e5, 1e6}) {
    try {
      return reconstruct_with_bound(pl, mu, L, rho, lambda_star, bound, report);
    } catch (const ReconstructionError& e) {
      std::ostringstream os;
      os << (errors.empty() ? "" : "; ") << "trace bound " << bound << ": " << e.what();
      errors += os.str();
    }
  }
  throw ReconstructionError(errors);
}

plant::Algorithm build_algorithm(const StateSpace& k, const plant::PlantRealization& pl,
                                 double reduce_tol) {
  if (!k.siso()) throw DimensionError("build_algorithm: controller must be SISO");
  if (reduce_tol < 0.0) throw DomainError("build_algorithm: reduce_tol must be non-negative");
  StateSpace g = numkit::series_connect(k, pl.state_space());
  if (reduce_tol > 0.0) g = numkit::minimal_realization(g, reduce_tol);
  if (g.states() == 0 || numkit::max_abs(g.D()) > 1e-12) {
    throw StructureError("build_algorithm: reduced algorithm is not strictly proper with states");
  }
  plant::AlgorithmInfo info;
  info.harmonics = pl.harmonics.values;
  plant::Algorithm alg(g.A(), g.B(), g.C(), info);
  const auto report = plant::verify_internal_model_structure(alg, pl.harmonics);
  if (!report.passed()) {
    throw StructureError("build_algorithm: internal-model check failed after reduction "
                         "(reduction tolerance too aggressive?)\n" + report.summary());
  }
  return alg;
}

StateSpace factor_controller(const plant::Algorithm& alg, const plant::PlantRealization& pl) {
  const auto g = numkit::to_transfer_function(alg.state_space());
  const auto div = numkit::divide(g.denominator(), pl.denominator);
  double scale = 0.0;
  for (int i = 0; i <= g.denominator().degree(); ++i) {
    scale = std::max(scale, std::abs(g.denominator().coefficient(i)));
  }
  double rem = 0.0;
  for (int i = 0; i <= div.remainder.degree(); ++i) {
    rem = std::max(rem, std::abs(div.remainder.coefficient(i)));
  }
  if (div.quotient.degree() < 0 || rem > 1e-6 * std::max(scale, 1.0)) {
    std::ostringstream os;
    os << "algorithm does not contain the required harmonic poles (division remainder " << rem
       << "); see verify_internal_model_structure";
    throw StructureError(os.str());
  }
  const auto den_k = div.quotient * numkit::Polynomial::monomial(pl.n() - 1);
  const StateSpace k = numkit::realize(numkit::TransferFunction(g.numerator(), den_k));
  return numkit::minimal_realization(k, 1e-9);
}

plant::Algorithm SynthesisResult::algorithm() const { return plant::Algorithm(G.A(), G.B(), G.C(), info); }

namespace {

/// (T^{-1} A T, T^{-1} B, C T): same analysis feasibility, different scaling.
transform::ParametricClosedLoop similar(transform::ParametricClosedLoop cl, const Matrix& t,
                                        const Matrix& t_inv) {
  cl.A = t_inv * cl.A * t;
  cl.B = t_inv * cl.B;
  for (auto& c : cl.C_terms) c = c * t;
  return cl;
}

}  // namespace

lmi::Feasibility analyze_at(const StateSpace& k, const plant::PlantRealization& pl, double mu,
                            double L, double rho, int ell,
                            const std::optional<transform::MultiplierParams>& fixed) {
  const auto cl = transform::close_loop_parametric(pl, mu, L, rho, ell, k);
  auto ap = fixed ? lmi::assemble_analysis(cl, *fixed) : lmi::assemble_analysis(cl);
  ap.problem.set_margin_rel(1e-9);
  auto res = lmi::solve_feasibility(ap.problem);
  return res;
}

Certification certify_rate(const plant::Algorithm& alg, double mu, double L, int ell, double lo,
                           double hi, double tol, const std::optional<exo::HarmonicSet>& harmonics) {
  transform::detail::check_sector(mu, L);
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) throw DomainError("certify_rate: need 0 < lo < hi < 1");
  if (!(tol > 0.0)) throw DomainError("certify_rate: tol must be positive");
  if (ell < 1) throw DomainError("certify_rate: ell must be at least 1");
  exo::HarmonicSet hs;
  if (harmonics) {
    hs = *harmonics;
    const auto report = plant::verify_internal_model_structure(alg, hs);
    if (!report.passed()) {
      throw StructureError("certify_rate: algorithm fails the internal-model check\n" + report.summary());
    }
  } else {
    hs = exo::harmonic_closure(std::vector<numkit::Complex>{}, exo::HarmonicPolicy::closure());
  }
  const auto pl = plant::build_H(hs);
  const StateSpace k = factor_controller(alg, pl);

  Certification out;
  // Closed-loop coordinates in which the last certificate found is the identity.
  Matrix t, t_inv;
  auto solve = [&](double rho, bool recoordinate) {
    auto cl = transform::close_loop_parametric(pl, mu, L, rho, ell, k);
    if (recoordinate) cl = similar(std::move(cl), t, t_inv);
    auto ap = lmi::assemble_analysis(cl);
    ap.problem.set_margin_rel(1e-9);
    auto res = lmi::solve_feasibility(ap.problem);
    out.trace.push_back(step_of(rho, res));
    if (!res.feasible()) return false;
    out.lambda = {ap.lambda_value(res.x), rho};
    out.margin = res.worst_residual;
    const Matrix x = ap.problem.value(ap.X, res.x);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.transpose()));
    if (es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0) {
      const Matrix s = es.operatorInverseSqrt();
      const Matrix s_inv = es.operatorSqrt();
      t = recoordinate ? Matrix(t * s) : s;
      t_inv = recoordinate ? Matrix(s_inv * t_inv) : s_inv;
    }
    return true;
  };
  auto attempt = [&](double rho) { return solve(rho, false) || (t.size() > 0 && solve(rho, true)); };
  if (!attempt(hi)) {
    std::ostringstream os;
    os << "certify_rate: analysis is not feasible at the top of the bracket (rho = " << hi << ')';
    throw NoAlgorithmFound(os.str());
  }
  auto best_lambda = out.lambda;
  double best_margin = out.margin;
  if (attempt(lo)) {
    out.rate = lo;
    return out;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (attempt(mid)) {
      hi = mid;
      best_lambda = out.lambda;
      best_margin = out.margin;
    } else {
      lo = mid;
    }
  }
  out.rate = hi;
  out.lambda = best_lambda;
  out.margin = best_margin;
  return out;
}

SynthesisResult bisect_optimal_rate(const RateQuery& q, const SynthesisOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  auto search = search_rate(q);
  const auto pl = plant::build_H(q.harmonics);
  SynthesisResult out;
  out.diagnostics.trace = search.trace;
  out.diagnostics.warnings = search.warnings;

  // Reconstruction needs a little interior; walk up inside the tolerance band.
  double rho = search.rho_star;
  lmi::SynthesisCertificate cert = search.certificate;
  std::string last_error;
  bool built = false;
  for (int attempt = 0; attempt < 4 && !built; ++attempt) {
    if (attempt > 0) {
      rho = std::min(search.rho_star + 0.5 * attempt * q.tol, q.rho_hi);
      auto sp = lmi::assemble_convex_synthesis(pl, q.mu, q.L, rho, q.ell);
      const auto res = lmi::solve_feasibility(sp.problem);
      if (!res.feasible()) continue;
      cert = lmi::extract_certificate(sp, pl, res);
    }
    try {
      ReconstructionReport rep;
      const StateSpace k = reconstruct_controller(pl, q.mu, q.L, rho, cert.lambda, &rep);
      plant::Algorithm alg = build_algorithm(k, pl, opt.reduce_tol);
      out.K = k;
      out.G = alg.state_space();
      out.diagnostics.reconstruction = rep;
      built = true;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (!built) throw ReconstructionError("controller reconstruction failed near rho* = " +
                                        std::to_string(search.rho_star) + ": " + last_error);
  if (rho != search.rho_star) {
    std::ostringstream os;
    os << "controller reconstructed at rho = " << rho << " (bisection gave " << search.rho_star << ')';
    out.diagnostics.warnings.push_back(os.str());
  }
  out.rho_star = rho;
  out.lambda_star = cert.lambda;
  out.certificate = cert;
  out.info.mu = q.mu;
  out.info.L = q.L;
  out.info.rho = rho;
  out.info.harmonics = q.harmonics.values;
  if (opt.recertify) {
    try {
      const auto c = certify_rate(out.algorithm(), q.mu, q.L, q.ell, q.rho_lo, q.rho_hi, q.tol, q.harmonics);
      out.diagnostics.recertified_rate = c.rate;
    } catch (const Error& e) {
      out.diagnostics.recertified_rate = std::numeric_limits<double>::quiet_NaN();
      out.diagnostics.warnings.push_back(std::string("recertification failed: ") + e.what());
    }
  }
  out.diagnostics.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace imsynth::synth
