#pragma once

// Exponential weighting, the sector filter, the causal Zames-Falb multiplier
// and the interconnections built from them.

#include <vector>

#include "imsynth/numkit.hpp"
#include "imsynth/plant.hpp"

namespace imsynth::transform {

using numkit::Matrix;
using numkit::StateSpace;
using numkit::Vector;

/// Multiplier coefficients lambda_0..lambda_ell and the rate they are tied to.
/// Admissible when lambda_1..lambda_ell <= 0 and sum_j rho^{-j} lambda_j >= 0.
struct MultiplierParams {
  Vector lambda;
  double rho = 0.0;

  int ell() const { return static_cast<int>(lambda.size()) - 1; }
  double weighted_sum() const;

  /// Throws ConstraintError naming the violated inequality, DomainError for
  /// ell < 1 or rho outside (0, 1).
  void validate(double tol = 0.0) const;

  static MultiplierParams make(Vector lambda, double rho);
};

/// (A / rho, B / rho, C, D). Throws DomainError for rho <= 0.
StateSpace rho_weight(const StateSpace& sys, double rho);

/// Companion realization of psi: shift A_f, B_f = e_ell,
/// C_f = (lambda_ell, ..., lambda_1), D_f = lambda_0.
StateSpace zf_filter(const MultiplierParams& params);

/// Filtered, weighted plant from (q, u) to (r, y). States: filter first
/// (ell), then plant (n_p).
struct TransformedPlant {
  Matrix A;    // (ell + n_p) square
  Matrix Bw;   // q input
  Matrix B;    // u input
  Matrix Cz;   // r output
  Matrix Dzw;  // 1 x 1
  Matrix Dz;   // 1 x 1
  Matrix C;    // y output
  int ell = 0;
  int n_p = 0;
  double mu = 0.0, L = 0.0, rho = 0.0;

  int states() const { return ell + n_p; }
};

TransformedPlant assemble_transformed_plant(const plant::PlantRealization& plant, double mu,
                                            double L, double rho, const MultiplierParams& params);

/// Realization of the loop q -> r.
struct ClosedLoop {
  Matrix A, B, C, D;

  int states() const { return static_cast<int>(A.rows()); }
};

/// Lower interconnection of P-hat with the controller. `k` is given in
/// original coordinates and weighted by phat.rho internally.
ClosedLoop close_loop(const TransformedPlant& phat, const StateSpace& k);

/// Closed loop whose output rows are linear in the multiplier coefficients:
/// C(lambda) = sum_j lambda_j C_terms[j], D(lambda) = sum_j lambda_j D_terms[j].
struct ParametricClosedLoop {
  Matrix A, B;
  std::vector<Matrix> C_terms;
  std::vector<double> D_terms;
  double rho = 0.0;

  int ell() const { return static_cast<int>(C_terms.size()) - 1; }
  int states() const { return static_cast<int>(A.rows()); }
  ClosedLoop at(const Vector& lambda) const;
};

ParametricClosedLoop close_loop_parametric(const plant::PlantRealization& plant, double mu,
                                           double L, double rho, int ell, const StateSpace& k);

namespace detail {
/// Same blocks as assemble_transformed_plant without checking lambda.
TransformedPlant transformed_plant_unchecked(const plant::PlantRealization& plant, double mu,
                                             double L, double rho, const Vector& lambda);
void check_sector(double mu, double L);
}  // namespace detail

}  // namespace imsynth::transform
