#pragma once

// Rate bisection, controller reconstruction, algorithm assembly G = K H and
// rate certification of given algorithms.

#include <optional>
#include <string>
#include <vector>

#include "imsynth/exo.hpp"
#include "imsynth/lmi_systems.hpp"
#include "imsynth/plant.hpp"
#include "imsynth/transform.hpp"

namespace imsynth::synth {

using numkit::Matrix;
using numkit::StateSpace;

struct RateQuery {
  double mu = 1.0;
  double L = 10.0;
  exo::HarmonicSet harmonics;
  int ell = 1;
  double rho_lo = 0.05;
  double rho_hi = 0.9999;
  double tol = 1e-3;

  /// Throws DomainError naming every violated precondition.
  void validate() const;
};

struct BisectionStep {
  double rho = 0.0;
  lmi::Status status = lmi::Status::Inconclusive;
  double slack = 0.0;
  int newton_steps = 0;
};

struct RateSearch {
  double rho_star = 0.0;       // smallest rate found feasible
  double rho_infeasible = 0.0; // largest rate found infeasible (or rho_lo)
  lmi::SynthesisCertificate certificate;
  std::vector<BisectionStep> trace;
  std::vector<std::string> warnings;
  int inconclusive = 0;
};

/// Bisection of the convex synthesis LMIs over rho. Throws NoAlgorithmFound
/// when rho_hi is not feasible.
RateSearch search_rate(const RateQuery& q);

struct ReconstructionReport {
  double stage1_margin = 0.0;
  double stage2_margin = 0.0;
  double completion_condition = 0.0;
  double analysis_residual = 0.0;  // min eigenvalue margin of the closed-loop check
  double trace_bound = 0.0;        // stage-1 certificate bound that succeeded
};

/// Two-stage controller reconstruction for a fixed multiplier. Returns the
/// controller in original (unweighted) coordinates, order n_p + ell. The
/// stage-1 trace bound is raised from 1e4 up to 1e6 when a stage fails.
StateSpace reconstruct_controller(const plant::PlantRealization& plant, double mu, double L,
                                  double rho, const transform::MultiplierParams& lambda_star,
                                  ReconstructionReport* report = nullptr);

/// G = K H followed by minimal realization with `reduce_tol` (0 keeps the
/// full series connection). Throws StructureError when the result fails the
/// internal-model check.
plant::Algorithm build_algorithm(const StateSpace& k, const plant::PlantRealization& plant,
                                 double reduce_tol = 1e-7);

/// K with G = K H, obtained by dividing the harmonic poles out of G.
/// Throws StructureError when G lacks them.
StateSpace factor_controller(const plant::Algorithm& alg, const plant::PlantRealization& plant);

struct SynthesisDiagnostics {
  std::vector<BisectionStep> trace;
  std::vector<std::string> warnings;
  ReconstructionReport reconstruction;
  double recertified_rate = 0.0;
  double elapsed_seconds = 0.0;
};

struct SynthesisResult {
  double rho_star = 0.0;
  transform::MultiplierParams lambda_star;
  StateSpace K;
  StateSpace G;
  lmi::SynthesisCertificate certificate;
  plant::AlgorithmInfo info;
  SynthesisDiagnostics diagnostics;

  plant::Algorithm algorithm() const;
};

struct SynthesisOptions {
  double reduce_tol = 1e-7;
  /// Run certify_rate on the assembled algorithm (NaN and a warning on failure).
  bool recertify = true;
};

/// search_rate, reconstruction at rho*, algorithm assembly, a closed-loop
/// re-check of the certificate and, optionally, recertification of G.
SynthesisResult bisect_optimal_rate(const RateQuery& q, const SynthesisOptions& opt = {});

struct Certification {
  double rate = 0.0;
  transform::MultiplierParams lambda;
  double margin = 0.0;
  std::vector<BisectionStep> trace;
};

/// Smallest rate in [lo, hi] at which the analysis LMI (multiplier free) is
/// feasible, within tol. With a harmonic set the poles are factored out of
/// alg first; without one the plant is the integrator.
Certification certify_rate(const plant::Algorithm& alg, double mu, double L, int ell, double lo,
                           double hi, double tol,
                           const std::optional<exo::HarmonicSet>& harmonics = std::nullopt);

/// Analysis feasibility of a single (controller, plant, rate) triple.
lmi::Feasibility analyze_at(const StateSpace& k, const plant::PlantRealization& plant, double mu,
                            double L, double rho, int ell,
                            const std::optional<transform::MultiplierParams>& fixed = std::nullopt);

}  // namespace imsynth::synth
