#pragma once

// The analysis, fixed-multiplier synthesis and convex synthesis LMI systems.

#include <optional>

#include "imsynth/lmi.hpp"
#include "imsynth/plant.hpp"
#include "imsynth/transform.hpp"

namespace imsynth::lmi {

/// Upper bound on the trace of the Lyapunov certificates; fixes the scale of
/// the otherwise homogeneous conditions.
struct AssemblyOptions {
  double trace_bound = 1e4;
  double margin_rel = 1e-7;
};

struct AnalysisProblem {
  LmiProblem problem;
  VarBlock X;
  std::optional<VarBlock> lambda;  // (ell + 1) x 1 when the multiplier is free
  Vector fixed_lambda;             // used when it is not
  double rho = 0.0;

  Vector lambda_value(const Vector& x) const;
};

/// Multiplier free in Lambda_ell^rho with lambda_0 = 1.
AnalysisProblem assemble_analysis(const transform::ParametricClosedLoop& cl,
                                  const AssemblyOptions& opt = {});
/// Multiplier fixed to `params` (must be admissible at cl.rho).
AnalysisProblem assemble_analysis(const transform::ParametricClosedLoop& cl,
                                  const transform::MultiplierParams& params,
                                  const AssemblyOptions& opt = {});
/// Closed loop already assembled for a fixed multiplier.
AnalysisProblem assemble_analysis(const transform::ClosedLoop& cl, const AssemblyOptions& opt = {});

struct FixedSynthesisProblem {
  LmiProblem problem;
  VarBlock Xhat;
  VarBlock Yhat;
  Matrix U_hat;  // annihilator of the measurement, (n + 1) x n
  Matrix V_hat;  // annihilator of the control input, n x (n + 1)
};

FixedSynthesisProblem assemble_fixed_multiplier_synthesis(const transform::TransformedPlant& phat,
                                                          const transform::MultiplierParams& params,
                                                          const AssemblyOptions& opt = {});

struct ConvexSynthesisProblem {
  LmiProblem problem;
  VarBlock lambda;  // (ell + 1) x 1
  VarBlock N;       // n_p x ell
  VarBlock Xhat;    // n_p + ell
  VarBlock Ytilde;  // n_p
  double mu = 0.0, L = 0.0, rho = 0.0;
  int ell = 0;
};

/// Throws DomainError for mu >= L, rho outside (0, 1), ell < 1 or singular A_p.
ConvexSynthesisProblem assemble_convex_synthesis(const plant::PlantRealization& plant, double mu,
                                                 double L, double rho, int ell,
                                                 const AssemblyOptions& opt = {});

struct SynthesisCertificate {
  Matrix Xhat;
  Matrix Ytilde;
  Matrix N;
  transform::MultiplierParams lambda;
  double sylvester_residual = 0.0;
  double sylvester_scale = 1.0;
  double worst_residual = 0.0;
};

/// |A_p N - rho N A_f + mu B_p C_f| (max entry).
double sylvester_residual(const plant::PlantRealization& plant, double mu, double rho,
                          const Matrix& n, const Vector& lambda);

SynthesisCertificate extract_certificate(const ConvexSynthesisProblem& sp,
                                         const plant::PlantRealization& plant,
                                         const Feasibility& solution);

}  // namespace imsynth::lmi
